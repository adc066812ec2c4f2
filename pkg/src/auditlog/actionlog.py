"""Agent logs: logged actions, environment certification, consistency, expiry."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .actions import ActionRegistry, obs
from .model import MANY, ONCE, ActionInstance, ActionTemplate, Atom, action_eq, alpha_eq
from .syntax import Parser, Vocabulary, format_action, format_policy, tokenize


class LogError(Exception):
    code = "LogError"


class ObserverViolation(LogError):
    code = "ObserverViolation"


class UncertifiedCondition(LogError):
    code = "UncertifiedCondition"


class ExpiredAtLogging(LogError):
    code = "ExpiredAtLogging"


@dataclass(frozen=True)
class EnvFact:
    """An environment-certified atom, valid on ticks ``valid_from..valid_to``."""

    atom: Atom
    valid_from: int
    valid_to: int

    def __post_init__(self) -> None:
        if self.valid_from > self.valid_to:
            raise ValueError(f"{self.atom}: window {self.valid_from}..{self.valid_to} is empty")

    def holds(self, atom: Atom, now: int) -> bool:
        return self.valid_from <= now <= self.valid_to and alpha_eq(self.atom, atom)


@dataclass(frozen=True)
class ObligationEntry:
    mode: str
    action: ActionTemplate
    ref_id: Optional[int] = None
    deadline: Optional[int] = None

    def __post_init__(self) -> None:
        if self.mode not in (ONCE, MANY):
            raise ValueError(f"bad obligation mode {self.mode!r}")

    def __str__(self) -> str:
        s = f"{self.mode}{format_action(self.action)}"
        if self.ref_id is not None:
            s += f" @{self.ref_id}"
        if self.deadline is not None:
            s += f" by {self.deadline}"
        return s

    def fulfilled_by(self, inst: ActionInstance) -> bool:
        if self.ref_id is not None:
            return inst.id == self.ref_id and action_eq(inst.template, self.action)
        return action_eq(inst.template, self.action)


@dataclass(frozen=True)
class LoggedAction:
    act: ActionInstance
    conds: frozenset = frozenset()
    obligs: tuple[ObligationEntry, ...] = ()


@dataclass(frozen=True)
class LogRecord:
    lac: LoggedAction
    tick: int


@dataclass(frozen=True)
class AgentLog:
    owner: str
    records: tuple[LogRecord, ...] = ()

    def entry_for(self, act_id: int) -> Optional[LogRecord]:
        for r in self.records:
            if r.lac.act.id == act_id:
                return r
        return None

    def __len__(self) -> int:
        return len(self.records)


# maps each executed instance to the tick it ran at
TraceIndex = Mapping[ActionInstance, int]


def certified(atom: Atom, env: Iterable[EnvFact], now: int) -> bool:
    return any(f.holds(atom, now) for f in env)


def effective_deadline(o: ObligationEntry, logged_at: Optional[int]) -> Optional[int]:
    """An entry naming an executed instance is due when it is logged."""
    if o.deadline is not None:
        return o.deadline
    if o.ref_id is not None:
        return logged_at
    return None


def expired(o: ObligationEntry, now: int, trace_index: TraceIndex, logged_at: Optional[int] = None) -> bool:
    deadline = effective_deadline(o, logged_at)
    if deadline is None or now <= deadline:
        return False
    return not any(o.fulfilled_by(inst) and tick <= deadline for inst, tick in trace_index.items())


def _open_obligations(log: AgentLog):
    """Obligation entries of ``log`` not yet matched by a later logged action."""
    pending = []
    for r in log.records:
        pending = [(o, t) for o, t in pending if not o.fulfilled_by(r.lac.act)]
        pending.extend((o, r.tick) for o in r.lac.obligs)
    return pending


def append(
    log: AgentLog,
    lac: LoggedAction,
    env: Iterable[EnvFact],
    now: int,
    reg: ActionRegistry,
    agents: Sequence[str] = (),
) -> AgentLog:
    """Return ``log`` with ``lac`` appended at tick ``now``."""
    env = list(env)
    if log.owner not in obs(lac.act, reg, agents):
        raise ObserverViolation(f"{log.owner} cannot observe {format_action(lac.act.template)}")
    for c in sorted(lac.conds, key=format_policy):
        if not certified(c, env, now):
            raise UncertifiedCondition(f"{format_policy(c)} is not certified at tick {now}")
    for o in lac.obligs:
        if o.deadline is not None and o.deadline < now:
            raise ExpiredAtLogging(f"obligation {o} is already past its deadline at tick {now}")
    for o, t in _open_obligations(log):
        d = effective_deadline(o, t)
        if o.ref_id is None and d is not None and d < now and o.fulfilled_by(lac.act):
            raise ExpiredAtLogging(
                f"{format_action(lac.act.template)} fulfils {o} whose deadline {d} passed before tick {now}"
            )
    if log.records and log.records[-1].tick > now:
        raise LogError(f"tick {now} precedes the last entry of {log.owner}'s log")
    return AgentLog(log.owner, log.records + (LogRecord(lac, now),))


@dataclass(frozen=True)
class Violation:
    kind: str
    tick: int
    detail: str

    def __str__(self) -> str:
        return f"{self.kind} at tick {self.tick}: {self.detail}"


def check_consistency(log: AgentLog) -> list[Violation]:
    out: list[Violation] = []
    seen_ids: set[int] = set()
    seen_bang: set[tuple] = set()
    for r in log.records:
        aid = r.lac.act.id
        if aid in seen_ids:
            out.append(Violation("DuplicateActionId", r.tick, f"action id {aid} logged twice"))
        seen_ids.add(aid)
        for o in r.lac.obligs:
            if o.mode == ONCE and o.ref_id is not None:
                key = (o.ref_id, format_action(o.action))
                if key in seen_bang:
                    out.append(Violation("DuplicateBangObligation", r.tick, f"{o} used more than once"))
                seen_bang.add(key)
    pending: list[tuple[ObligationEntry, int]] = []
    for r in log.records:
        keep = []
        for o, t in pending:
            if o.fulfilled_by(r.lac.act):
                d = effective_deadline(o, t)
                if o.ref_id is None and d is not None and r.tick > d:
                    out.append(
                        Violation("LoggedAfterDeadline", r.tick, f"{format_action(r.lac.act.template)} fulfils {o} late")
                    )
            else:
                keep.append((o, t))
        pending = keep + [(o, r.tick) for o in r.lac.obligs]
    return out


def project_trace(log: AgentLog) -> list[ActionInstance]:
    return [r.lac.act for r in log.records]


# ---------------------------------------------------------------------------
# line-delimited JSON


def _oblig_json(o: ObligationEntry) -> dict:
    return {"mode": o.mode, "action": format_action(o.action), "ref": o.ref_id, "deadline": o.deadline}


def record_json(r: LogRecord) -> dict:
    return {
        "id": r.lac.act.id,
        "tick": r.tick,
        "action": format_action(r.lac.act.template),
        "conds": sorted(format_policy(c) for c in r.lac.conds),
        "obligs": [_oblig_json(o) for o in r.lac.obligs],
    }


def dump_log(log: AgentLog) -> str:
    return "".join(json.dumps(record_json(r), ensure_ascii=False) + "\n" for r in log.records)


def load_log(text: str, owner: str, vocab: Vocabulary) -> AgentLog:
    def action(s: str) -> ActionTemplate:
        p = Parser(tokenize(s), vocab)
        a = p.action()
        p.done()
        return a

    def atom(s: str):
        p = Parser(tokenize(s), vocab)
        a = p.policy()
        p.done()
        return a

    records = []
    for line in text.splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        obligs = tuple(
            ObligationEntry(o["mode"], action(o["action"]), o.get("ref"), o.get("deadline")) for o in obj["obligs"]
        )
        lac = LoggedAction(
            ActionInstance(action(obj["action"]), obj["id"]),
            frozenset(atom(c) for c in obj["conds"]),
            obligs,
        )
        records.append(LogRecord(lac, obj["tick"]))
    return AgentLog(owner, tuple(records))
