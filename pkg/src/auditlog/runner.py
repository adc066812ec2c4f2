"""Deterministic execution of scenario scripts and the honest strategy."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

from .actionlog import AgentLog, EnvFact, LogError, LoggedAction, ObligationEntry, append, certified, project_trace
from .actions import ActionError, ActionRegistry, obs, po
from .audit import (
    AuditContext,
    AuditResult,
    ProofStore,
    RecursiveResult,
    StoreEntry,
    acc,
    justify,
    merge_evidence,
    recursive_audit,
)
from .kernel import Pol
from .model import MANY, ONCE, ActionInstance, ActionTemplate, canon_action, is_basic, is_ground_action
from .scenario import AccDirective, HonestStep, LogChoice, ObligSpec, RecursiveDirective, Scenario
from .syntax import format_action


class UnknownInstance(ValueError):
    pass


class BadReference(LogError):
    code = "BadReference"


class StepError(Exception):
    def __init__(self, index: int, line: int, cause: Exception):
        super().__init__(f"step {index} (line {line}): {cause}")
        self.index = index
        self.line = line
        self.cause = cause


@dataclass(frozen=True)
class SystemState:
    logs: Mapping[str, AgentLog]
    clock: int = 0
    env: tuple[EnvFact, ...] = ()
    trace: tuple[ActionInstance, ...] = ()

    @classmethod
    def initial(cls, agents: Iterable[str], env: Iterable[EnvFact] = ()) -> "SystemState":
        return cls({a: AgentLog(a) for a in agents}, 0, tuple(env), ())

    def log(self, agent: str) -> AgentLog:
        return self.logs.get(agent) or AgentLog(agent)


def resolve_oblig(o: ObligSpec, now: int, trace: Sequence[ActionInstance]) -> ObligationEntry:
    if o.ref_id is not None:
        inst = next((a for a in trace if a.id == o.ref_id), None)
        if inst is None or canon_action(inst.template) != canon_action(o.action):
            raise BadReference(f"@{o.ref_id} is not an executed instance of {format_action(o.action)}")
    deadline = o.by if o.by is not None else (None if o.within is None else now + o.within)
    return ObligationEntry(o.mode, o.action, o.ref_id, deadline)


def step(
    state: SystemState,
    act: ActionTemplate,
    choices: Sequence[LogChoice],
    reg: ActionRegistry,
    agents: Sequence[str] = (),
) -> tuple[SystemState, ActionInstance]:
    """Execute ``act`` at the current tick; the chosen observers log it."""
    if not is_ground_action(act):
        raise ActionError(f"{format_action(act)} is not ground")
    reg[act.kind].bind(act)
    now = state.clock
    inst = ActionInstance(act, now)
    trace = state.trace + (inst,)
    logs = dict(state.logs)
    for c in choices:
        entries = tuple(resolve_oblig(o, now, trace) for o in c.obligs)
        lac = LoggedAction(inst, frozenset(c.conds), entries)
        logs[c.agent] = append(state.log(c.agent), lac, state.env, now, reg, agents)
    return SystemState(logs, now + 1, state.env, trace), inst


def assemble_evidence(
    state: SystemState, agent: str, extra: Iterable[Union[int, ActionInstance]], trace: Sequence[ActionInstance]
) -> list[ActionInstance]:
    by_id = {a.id: a for a in trace}
    picked = []
    for x in extra:
        xid = x.id if isinstance(x, ActionInstance) else x
        if xid not in by_id or (isinstance(x, ActionInstance) and by_id[xid] != x):
            raise UnknownInstance(f"action #{xid} is not in the execution trace")
        picked.append(by_id[xid])
    return merge_evidence(project_trace(state.log(agent)), picked)


# ---------------------------------------------------------------------------
# honest strategy


@dataclass(frozen=True)
class Refuse:
    reason: str

    def __bool__(self) -> bool:
        return False


@dataclass(frozen=True)
class PlannedAction:
    action: ActionTemplate
    logs: tuple[LogChoice, ...] = ()


Plan = tuple[PlannedAction, ...]


class _Planner:
    def __init__(self, agent: str, state: SystemState, store: ProofStore, reg: ActionRegistry, agents: Sequence[str]):
        self.agent = agent
        self.state = state
        self.store = store
        self.reg = reg
        self.agents = agents
        # instances the agent has logged, and ! references already spent
        self.logged: list[ActionInstance] = project_trace(state.log(agent))
        self.claimed: set[int] = {
            o.ref_id for r in state.log(agent).records for o in r.lac.obligs if o.mode == ONCE and o.ref_id is not None
        }

    def plan(self, act: ActionTemplate, base: int, depth: int = 0) -> Union[list[PlannedAction], Refuse]:
        a = self.agent
        label = format_action(act)
        if depth > 8:
            return Refuse(f"obligations for {label} nest too deeply")
        if po(act, a, self.reg) is None:
            return [PlannedAction(act)]
        entry = self.store.for_template(a, act)
        if entry is None:
            return Refuse(f"no justification for {label}")
        j = justify(entry, self.reg)
        if j is None:
            return Refuse(f"proof {entry.name} does not check")
        if any(isinstance(it, Pol) and not is_basic(it.policy) for it in entry.sequent.gamma):
            return Refuse(f"proof {entry.name} assumes more than basic facts")
        for act_t in j.summary.acts:
            wid = entry.witness(act_t)
            inst = next((x for x in self.state.trace if x.id == wid), None)
            if inst is None or canon_action(inst.template) != canon_action(act_t):
                return Refuse(f"{format_action(act_t)} has not been executed")
            if a not in obs(inst, self.reg, self.agents):
                return Refuse(f"{a} did not observe {format_action(act_t)}")
        pre: list[PlannedAction] = []
        nxt = base
        entries: list[ObligSpec] = []
        many_seen: list = []
        for mode, t in j.summary.obligs:
            key = canon_action(t)
            if mode == MANY:
                if key in many_seen:
                    continue
                many_seen.append(key)
            found = next(
                (x for x in self.logged if canon_action(x.template) == key and (mode == MANY or x.id not in self.claimed)),
                None,
            )
            if found is None:
                if a not in obs(t, self.reg, self.agents):
                    return Refuse(f"{a} cannot observe {format_action(t)} to log it")
                sub = self.plan(t, nxt, depth + 1)
                if isinstance(sub, Refuse):
                    return sub
                last = sub[-1]
                if not last.logs:
                    sub[-1] = PlannedAction(last.action, (LogChoice(a),))
                pre.extend(sub)
                nxt += len(sub)
                found = ActionInstance(t, nxt - 1)
                self.logged.append(found)
            if mode == ONCE:
                self.claimed.add(found.id)
            entries.append(ObligSpec(mode, t, found.id))
        for c in sorted(j.summary.conds, key=str):
            if not certified(c, self.state.env, nxt):
                return Refuse(f"{c} is not certified at tick {nxt}")
        main = PlannedAction(act, (LogChoice(a, tuple(sorted(j.summary.conds, key=str)), tuple(entries)),))
        return pre + [main]


def honest_step(
    agent: str,
    intended: ActionTemplate,
    state: SystemState,
    store: ProofStore,
    reg: ActionRegistry,
    agents: Sequence[str] = (),
) -> Union[Plan, Refuse]:
    """Plan ``intended`` for an honest agent: obligations first, then the logged action."""
    out = _Planner(agent, state, store, reg, agents).plan(intended, state.clock)
    return out if isinstance(out, Refuse) else tuple(out)


def execute_plan(state: SystemState, plan: Plan, reg: ActionRegistry, agents: Sequence[str] = ()) -> SystemState:
    for pa in plan:
        state, _ = step(state, pa.action, pa.logs, reg, agents)
    return state


# ---------------------------------------------------------------------------
# whole scenarios


def build_store(sc: Scenario) -> ProofStore:
    entries = {}
    for d in sc.proofs:
        if d.key is None or d.proof is None:
            continue
        entries[(d.sequent.reasoner, d.key)] = StoreEntry(d.sequent, d.proof, d.witnesses, d.name)
    return ProofStore(entries)


@dataclass(frozen=True)
class AuditOutcome:
    directive: Union[AccDirective, RecursiveDirective]
    evidence: tuple[ActionInstance, ...]
    result: Union[AuditResult, RecursiveResult]


@dataclass(frozen=True)
class RunResult:
    state: SystemState
    store: ProofStore
    refusals: tuple[tuple[int, str, str], ...]  # (step index, agent, reason)
    audits: tuple[AuditOutcome, ...] = ()

    @property
    def trace(self) -> tuple[ActionInstance, ...]:
        return self.state.trace


def context(sc: Scenario, state: SystemState, store: ProofStore) -> AuditContext:
    return AuditContext(sc.reg, state.trace, state.logs, store, sc.agents)


def run(sc: Scenario, audits: bool = True) -> RunResult:
    """Replay the scenario's steps, then its audit directives."""
    store = build_store(sc)
    state = SystemState.initial(sc.agents, sc.env)
    refusals = []
    for i, st in enumerate(sc.steps):
        try:
            if isinstance(st, HonestStep):
                plan = honest_step(st.agent, st.action, state, store, sc.reg, sc.agents)
                if isinstance(plan, Refuse):
                    refusals.append((i, st.agent, plan.reason))
                    continue
                state = execute_plan(state, plan, sc.reg, sc.agents)
            else:
                state, _ = step(state, st.action, st.logs, sc.reg, sc.agents)
        except (LogError, ActionError) as exc:
            raise StepError(i, st.line, exc) from exc
    outcomes = []
    if audits:
        for d in sc.audits:
            outcomes.append(run_audit(sc, state, store, d))
    return RunResult(state, store, tuple(refusals), tuple(outcomes))


def run_audit(sc: Scenario, state: SystemState, store: ProofStore, d) -> AuditOutcome:
    ctx = context(sc, state, store)
    if isinstance(d, AccDirective):
        E = assemble_evidence(state, d.agent, d.extra, state.trace)
        return AuditOutcome(d, tuple(E), acc(d.agent, E, ctx))
    E: list[ActionInstance] = []
    for a in d.suspects:
        E = merge_evidence(E, project_trace(state.log(a)))
    E = merge_evidence(E, assemble_evidence(state, d.suspects[0], d.extra, state.trace))
    return AuditOutcome(d, tuple(E), recursive_audit(d.suspects, E, ctx))
