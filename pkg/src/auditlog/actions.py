"""Action kinds: observability, proof obligation and conclusion derivation."""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, Optional, Union

from .model import (
    AGENT,
    POLICY,
    TERM_SORTS,
    ActionInstance,
    ActionTemplate,
    Const,
    Policy,
    Var,
    fill,
    free_vars,
    holes,
    is_ground_action,
)

ACTOR = "actor"
ENDPOINTS = "endpoints"
ALL = "all"
LISTED = "list"
ANY_AGENT = "*"


class ActionError(ValueError):
    pass


class UnknownKind(ActionError):
    pass


@dataclass(frozen=True)
class ObsRule:
    """Closed set of observer rules.

    ``actor``: the first agent argument; ``endpoints``: the first two agent
    arguments; ``all``: every agent of the scenario; ``list``: the named
    agent placeholders and/or roster agents in ``names``.
    """

    form: str = ACTOR
    names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.form not in (ACTOR, ENDPOINTS, ALL, LISTED):
            raise ActionError(f"unknown observer rule {self.form!r}")


@dataclass(frozen=True)
class ActionKindSpec:
    """Declarative description of one action kind.

    ``po_agent``/``concl_agent`` name the agent placeholder the template
    applies to; ``concl_agent`` may be ``"*"`` for every agent.
    """

    name: str
    params: tuple[tuple[str, str], ...]
    obs: ObsRule = ObsRule()
    po_agent: Optional[str] = None
    po: Optional[Policy] = None
    concl_agent: Optional[str] = None
    concl: Optional[Policy] = None

    @property
    def sorts(self) -> tuple[str, ...]:
        return tuple(s for _, s in self.params)

    def validate(self) -> None:
        seen: dict[str, str] = {}
        for k, (pname, sort) in enumerate(self.params):
            if sort not in TERM_SORTS + (POLICY,):
                raise ActionError(f"{self.name}: parameter {pname} has unknown sort {sort!r}")
            if pname in seen:
                raise ActionError(f"{self.name}: parameter {pname} declared twice")
            if sort == POLICY and k != len(self.params) - 1:
                raise ActionError(f"{self.name}: a policy parameter must come last")
            seen[pname] = sort
        agents = [n for n, s in self.params if s == AGENT]
        if self.obs.form == ACTOR and not agents:
            raise ActionError(f"{self.name}: 'actor' needs an agent parameter")
        if self.obs.form == ENDPOINTS and len(agents) < 2:
            raise ActionError(f"{self.name}: 'endpoints' needs two agent parameters")
        if self.obs.form == LISTED:
            for n in self.obs.names:
                if n in seen and seen[n] != AGENT:
                    raise ActionError(f"{self.name}: observer {n} is not an agent parameter")
        for label, who, tmpl in (("po", self.po_agent, self.po), ("concl", self.concl_agent, self.concl)):
            if tmpl is None:
                if who is not None:
                    raise ActionError(f"{self.name}: {label}({who}) without a template")
                continue
            if who is None:
                raise ActionError(f"{self.name}: {label} template needs an agent position")
            if not (who == ANY_AGENT and label == "concl") and seen.get(who) != AGENT:
                raise ActionError(f"{self.name}: {label}({who}) does not name an agent parameter")
            for v in free_vars(tmpl):
                if seen.get(v.name) != v.sort:
                    raise ActionError(f"{self.name}: {label} template references undeclared placeholder {v.name}")
            for h in holes(tmpl):
                if seen.get(h) != POLICY:
                    raise ActionError(f"{self.name}: {label} template references undeclared placeholder {h}")

    def bind(self, act: ActionTemplate) -> tuple[dict[str, Const], dict[str, Policy]]:
        sorts = self.sorts
        n_terms = sum(1 for s in sorts if s != POLICY)
        if act.kind != self.name or len(act.args) != n_terms or (act.payload is None) == (POLICY in sorts):
            raise ActionError(f"{act} does not match action kind {self.name}")
        terms: dict[str, Const] = {}
        policies: dict[str, Policy] = {}
        it = iter(act.args)
        for pname, sort in self.params:
            if sort == POLICY:
                policies[pname] = act.payload
            else:
                t = next(it)
                if t.sort != sort:
                    raise ActionError(f"{act}: argument {t} should have sort {sort}")
                terms[pname] = t
        return terms, policies


Instance = Union[ActionInstance, ActionTemplate]


def _template(a: Instance) -> ActionTemplate:
    return a.template if isinstance(a, ActionInstance) else a


class ActionRegistry:
    """Immutable name -> ActionKindSpec map; always holds ``creates`` and ``comm``."""

    def __init__(self, kinds: Optional[Mapping[str, ActionKindSpec]] = None):
        base = dict(BUILTINS)
        for name, spec in (kinds or {}).items():
            if name in BUILTINS:
                if spec is not BUILTINS[name]:
                    raise ActionError(f"built-in action {name} cannot be redefined")
                continue
            base[name] = spec
        self._kinds = MappingProxyType(base)

    def __contains__(self, name: str) -> bool:
        return name in self._kinds

    def __getitem__(self, name: str) -> ActionKindSpec:
        try:
            return self._kinds[name]
        except KeyError:
            raise UnknownKind(f"unknown action kind {name!r}") from None

    def __iter__(self):
        return iter(self._kinds)

    def kinds(self) -> Mapping[str, ActionKindSpec]:
        return self._kinds

    @property
    def sorts(self) -> Mapping[str, tuple[str, ...]]:
        return {n: s.sorts for n, s in self._kinds.items()}

    def user_kinds(self) -> list[ActionKindSpec]:
        return [s for n, s in self._kinds.items() if n not in BUILTINS]


def register_kind(spec: ActionKindSpec, reg: ActionRegistry) -> ActionRegistry:
    if spec.name in reg:
        raise ActionError(f"action kind {spec.name} already registered")
    spec.validate()
    kinds = dict(reg.kinds())
    kinds[spec.name] = spec
    return ActionRegistry(kinds)


def obs(a: Instance, reg: ActionRegistry, agents: Iterable[str] = ()) -> frozenset[str]:
    """Agents able to observe ``a``. ``agents`` is the scenario roster."""
    act = _template(a)
    spec = reg[act.kind]
    terms, _ = spec.bind(act)
    agent_args = [terms[n].name for n, s in spec.params if s == AGENT]
    if spec.obs.form == ACTOR:
        return frozenset(agent_args[:1])
    if spec.obs.form == ENDPOINTS:
        return frozenset(agent_args[:2])
    if spec.obs.form == ALL:
        return frozenset(agents) | frozenset(agent_args)
    out = set()
    for n in spec.obs.names:
        out.add(terms[n].name if n in terms else n)
    return frozenset(out)


def po(a: Instance, g: str, reg: ActionRegistry) -> Optional[Policy]:
    """Policy ``g`` must justify to execute ``a``; None when nothing is needed.

    The instance id plays no role.
    """
    act = _template(a)
    spec = reg[act.kind]
    terms, policies = spec.bind(act)
    if spec.po is None or terms[spec.po_agent].name != g:
        return None
    return fill(spec.po, terms, policies)


def concl(a: Instance, g: str, reg: ActionRegistry) -> Optional[Policy]:
    """Policy ``g`` may conclude after observing ``a``; None when nothing."""
    act = _template(a)
    if not is_ground_action(act):
        raise ActionError(f"concl needs a ground action, got {act}")
    spec = reg[act.kind]
    terms, policies = spec.bind(act)
    if spec.concl is None:
        return None
    if spec.concl_agent != ANY_AGENT and terms[spec.concl_agent].name != g:
        return None
    return fill(spec.concl, terms, policies)


def _builtins() -> dict[str, ActionKindSpec]:
    from .model import Hole, Owns, Says

    x, y, d = Var("x", AGENT), Var("y", AGENT), Var("d", "data")
    creates = ActionKindSpec(
        "creates",
        (("x", AGENT), ("d", "data")),
        ObsRule(ACTOR),
        concl_agent="x",
        concl=Owns(x, d),
    )
    says = Says(x, Hole("p"), y)
    comm = ActionKindSpec(
        "comm",
        (("x", AGENT), ("y", AGENT), ("p", POLICY)),
        ObsRule(ENDPOINTS),
        po_agent="x",
        po=says,
        concl_agent="y",
        concl=says,
    )
    for s in (creates, comm):
        s.validate()
    return {"creates": creates, "comm": comm}


BUILTINS = MappingProxyType(_builtins())
