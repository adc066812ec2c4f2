"""Accountability audits over logs, the execution trace and committed proofs."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .actionlog import AgentLog, LoggedAction, expired
from .actions import ActionRegistry, obs, po
from .kernel import AssumptionSummary, CheckError, Pol, ProofTerm, Sequent, check
from .model import MANY, ONCE, ActionInstance, ActionTemplate, alpha_eq, canon, canon_action, is_basic
from .syntax import format_action

MISSING = "MissingJustification"
INVALID = "InvalidJustification"
UNFULFILLED = "UnfulfilledExpiredObligation"
UNWITNESSED = "UnwitnessedActionAssumption"


class BoundExceeded(RuntimeError):
    """A termination bound was exceeded; indicates a bug, never expected."""


class EvidenceError(ValueError):
    pass


@dataclass(frozen=True)
class StoreEntry:
    """A committed justification: a proof of a sequent plus ids for its actions."""

    sequent: Sequent
    proof: ProofTerm
    witnesses: tuple[tuple[ActionTemplate, int], ...] = ()
    name: str = ""

    def witness(self, act: ActionTemplate) -> Optional[int]:
        for t, i in self.witnesses:
            if canon_action(t) == canon_action(act):
                return i
        return None


StoreKey = tuple  # (agent, action id) or (agent, canonical action template)


class ProofStore:
    """Frozen map from (agent, logged action) to committed justifications.

    Entries are keyed by action id or, as a fallback, by action template.
    """

    def __init__(self, entries: Optional[Mapping] = None):
        snap = {}
        for (agent, key), entry in (entries or {}).items():
            if isinstance(key, ActionTemplate):
                key = canon_action(key)
            snap[(agent, key)] = entry
        self._entries = MappingProxyType(snap)

    def __len__(self) -> int:
        return len(self._entries)

    def items(self):
        return self._entries.items()

    def lookup(self, agent: str, act: ActionInstance) -> Optional[StoreEntry]:
        e = self._entries.get((agent, act.id))
        if e is None:
            e = self._entries.get((agent, canon_action(act.template)))
        return e

    def for_template(self, agent: str, act: ActionTemplate) -> Optional[StoreEntry]:
        return self._entries.get((agent, canon_action(act)))


@dataclass(frozen=True)
class Justification:
    entry: StoreEntry
    summary: AssumptionSummary


def justify(entry: StoreEntry, reg: ActionRegistry) -> Optional[Justification]:
    """Check a store entry; None when its proof does not check."""
    try:
        d = check(entry.proof, entry.sequent, reg)
    except CheckError:
        return None
    return Justification(entry, d.summary)


def _multiset_injects(needed: Iterable[ActionTemplate], available: Iterable[ActionTemplate]) -> bool:
    have = Counter(canon_action(a) for a in available)
    want = Counter(canon_action(a) for a in needed)
    return all(have[k] >= n for k, n in want.items())


def is_justification(j: Justification, agent: str, lac: LoggedAction, reg: ActionRegistry) -> bool:
    s = j.entry.sequent
    goal = po(lac.act, agent, reg)
    if goal is None or s.reasoner != agent or not alpha_eq(s.goal, goal):
        return False
    # initial assumptions may only be basic predicates, actions or obligations
    if any(isinstance(it, Pol) and not is_basic(it.policy) for it in s.gamma):
        return False
    once = [o.action for o in lac.obligs if o.mode == ONCE]
    many = {canon_action(o.action) for o in lac.obligs if o.mode == MANY}
    if not _multiset_injects(j.summary.once(), once):
        return False
    if any(canon_action(a) not in many for a in j.summary.many()):
        return False
    logged = {canon(c) for c in lac.conds}
    return all(canon(c) in logged for c in j.summary.conds)


@dataclass(frozen=True)
class AuditContext:
    """Everything an authority consults: registry, trace, logs, proofs."""

    reg: ActionRegistry
    trace: tuple[ActionInstance, ...]
    logs: Mapping[str, AgentLog]
    store: ProofStore
    agents: tuple[str, ...]
    now: Optional[int] = None
    ticks: Optional[Mapping[int, int]] = None

    @property
    def clock(self) -> int:
        return len(self.trace) if self.now is None else self.now

    def tick_of(self, act_id: int) -> int:
        return act_id if self.ticks is None else self.ticks[act_id]

    def trace_index(self) -> dict[ActionInstance, int]:
        return {a: self.tick_of(a.id) for a in self.trace}

    def instance(self, act_id: int) -> Optional[ActionInstance]:
        for a in self.trace:
            if a.id == act_id:
                return a
        return None

    def log(self, agent: str) -> AgentLog:
        return self.logs.get(agent) or AgentLog(agent)


@dataclass(frozen=True)
class Outcome:
    ok: bool
    reason: str = ""
    detail: str = ""
    newacts: tuple[ActionInstance, ...] = ()


def laa(agent: str, lac: LoggedAction, ctx: AuditContext, logged_at: Optional[int] = None) -> Outcome:
    """Logged-action accountability of ``agent`` for ``lac``."""
    label = f"{format_action(lac.act.template)}#{lac.act.id}"
    witnessed: list[ActionInstance] = []
    goal = po(lac.act, agent, ctx.reg)
    j = None
    if goal is not None:
        entry = ctx.store.lookup(agent, lac.act)
        if entry is None:
            return Outcome(False, MISSING, f"no justification for {label}")
        j = justify(entry, ctx.reg)
        if j is None or not is_justification(j, agent, lac, ctx.reg):
            return Outcome(False, INVALID, f"proof {entry.name or '?'} does not justify {label}")
    own = [r.lac.act for r in ctx.log(agent).records]
    index = ctx.trace_index()
    for o in lac.obligs:
        if expired(o, ctx.clock, index, logged_at) and not any(o.fulfilled_by(a) for a in own):
            return Outcome(False, UNFULFILLED, f"{o} expired and was not logged by {agent}")
    if j is not None:
        for act in j.summary.acts:
            wid = j.entry.witness(act)
            inst = None if wid is None else ctx.instance(wid)
            if inst is None or canon_action(inst.template) != canon_action(act):
                return Outcome(False, UNWITNESSED, f"{format_action(act)} has no executed instance id")
            if agent not in obs(inst, ctx.reg, ctx.agents):
                return Outcome(False, UNWITNESSED, f"{agent} did not observe {format_action(act)}#{wid}")
            witnessed.append(inst)
    return Outcome(True, newacts=tuple(witnessed))


def aa(agent: str, act: ActionInstance, ctx: AuditContext) -> Outcome:
    """Action accountability: use the agent's log entry when there is one."""
    rec = ctx.log(agent).entry_for(act.id)
    if rec is not None:
        return laa(agent, rec.lac, ctx, rec.tick)
    return laa(agent, LoggedAction(act), ctx)


def subtrace(t1: Sequence[ActionInstance], t2: Sequence[ActionInstance]) -> bool:
    it = iter(t2)
    return all(any(a == b for b in it) for a in t1)


def merge_evidence(e: Iterable[ActionInstance], newacts: Iterable[ActionInstance]) -> list[ActionInstance]:
    by_id: dict[int, ActionInstance] = {}
    for a in list(e) + list(newacts):
        by_id.setdefault(a.id, a)
    return [by_id[k] for k in sorted(by_id)]


@dataclass(frozen=True)
class StepVerdict:
    agent: str
    act: ActionInstance
    ok: bool
    reason: str = ""
    detail: str = ""
    newacts: tuple[int, ...] = ()


@dataclass(frozen=True)
class AuditResult:
    verdict: bool
    failures: tuple[tuple[str, int, str], ...] = ()
    visited: frozenset = frozenset()
    evidence: tuple[ActionInstance, ...] = ()
    steps: tuple[StepVerdict, ...] = ()
    newacts: tuple[ActionInstance, ...] = ()
    calls: int = 0


def acc(agent: str, evidence: Sequence[ActionInstance], ctx: AuditContext) -> AuditResult:
    """Audit ``agent`` over ``evidence``, latest action first, growing it with new actions."""
    if not subtrace(sorted(evidence, key=lambda a: a.id), ctx.trace):
        raise EvidenceError("evidence is not a subtrace of the execution trace")
    E = merge_evidence(evidence, [])
    seen = {a.id for a in E}
    processed: set[int] = set()
    steps: list[StepVerdict] = []
    found: list[ActionInstance] = []
    calls = 0
    bound = len(ctx.trace)
    while E:
        act = E.pop()
        calls += 1
        if calls > bound:
            raise BoundExceeded(f"acc({agent}) exceeded {bound} steps")
        out = aa(agent, act, ctx)
        processed.add(act.id)
        remaining = {a.id for a in E}
        new = [a for a in out.newacts if a.id not in remaining and a.id not in processed]
        new = merge_evidence([], new)
        steps.append(StepVerdict(agent, act, out.ok, out.reason, out.detail, tuple(a.id for a in new)))
        if not out.ok:
            return AuditResult(
                False,
                ((agent, act.id, out.reason),),
                frozenset((agent, i) for i in processed),
                tuple(merge_evidence(evidence, found)),
                tuple(steps),
                tuple(found),
                calls,
            )
        for a in new:
            if a.id not in seen:
                seen.add(a.id)
                found.append(a)
        E = merge_evidence(E, new)
    return AuditResult(
        True,
        (),
        frozenset((agent, i) for i in processed),
        tuple(merge_evidence(evidence, found)),
        tuple(steps),
        tuple(merge_evidence([], found)),
        calls,
    )


@dataclass(frozen=True)
class RecursiveResult:
    verdict: bool
    audited: tuple[str, ...]
    evidence: tuple[ActionInstance, ...]
    iterations: int
    failures: tuple[tuple[str, int, str], ...] = ()
    visited: frozenset = frozenset()
    rounds: tuple[AuditResult, ...] = field(default=(), compare=False)

    @property
    def audited_set(self) -> frozenset:
        return frozenset(self.audited)


def recursive_audit(
    suspects: Iterable[str],
    evidence0: Sequence[ActionInstance],
    ctx: AuditContext,
    choose: Callable[[set], str] = min,
) -> RecursiveResult:
    """Audit suspects one at a time, adding agents implicated by new evidence."""
    S = set(suspects)
    E = merge_evidence(evidence0, [])
    audited: list[str] = []
    rounds: list[AuditResult] = []
    visited: set = set()
    iterations = 0
    bound = max(1, len(ctx.agents)) * (len(ctx.trace) + 1)
    while S:
        iterations += 1
        if iterations > bound:
            raise BoundExceeded(f"recursive audit exceeded {bound} iterations")
        a = choose(S)
        r = acc(a, E, ctx)
        audited.append(a)
        rounds.append(r)
        visited |= r.visited
        if not r.verdict:
            return RecursiveResult(False, tuple(audited), tuple(E), iterations, r.failures, frozenset(visited), tuple(rounds))
        known = {x.id for x in E}
        fresh = [x for x in r.newacts if x.id not in known]
        implicated = {g for x in fresh for g in ctx.agents if po(x, g, ctx.reg) is not None}
        S = (S - {a}) | implicated
        E = merge_evidence(E, fresh)
    return RecursiveResult(True, tuple(audited), tuple(E), iterations, (), frozenset(visited), tuple(rounds))
