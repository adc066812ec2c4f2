"""Terms, policies and actions of the audit logic.

All values are frozen dataclasses. Bound variables are identified by
``(name, sort)``; alpha-equivalence is decided through a nameless
canonical form (``canon``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Union

AGENT = "agent"
DATA = "data"
MONEY = "money"
POLICY = "policy"

TERM_SORTS = (AGENT, DATA, MONEY)
QUANTIFIABLE = (AGENT, DATA)


class SortError(ValueError):
    pass


@dataclass(frozen=True)
class Const:
    name: str
    sort: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Var:
    name: str
    sort: str

    def __str__(self) -> str:
        return self.name


Term = Union[Const, Var]


def agent(name: str) -> Const:
    return Const(name, AGENT)


def datum(name: str) -> Const:
    return Const(name, DATA)


def money(name: str) -> Const:
    return Const(name, MONEY)


@dataclass(frozen=True)
class PredicateSignature:
    """Name, per-position sorts and the data positions a predicate affects.

    ``affects`` holds 0-based positions; they must be data-sorted.
    """

    name: str
    sorts: tuple[str, ...] = ()
    affects: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        for s in self.sorts:
            if s not in TERM_SORTS:
                raise SortError(f"predicate {self.name}: bad sort {s!r}")
        for i in self.affects:
            if not 0 <= i < len(self.sorts) or self.sorts[i] != DATA:
                raise SortError(f"predicate {self.name}: position {i + 1} is not a data position")

    @property
    def arity(self) -> int:
        return len(self.sorts)

    @classmethod
    def default(cls, name: str, sorts: tuple[str, ...]) -> "PredicateSignature":
        """Signature whose affected positions are all the data positions."""
        return cls(name, tuple(sorts), frozenset(i for i, s in enumerate(sorts) if s == DATA))


@dataclass(frozen=True)
class ActionTemplate:
    """An action with (possibly open) term arguments and an optional policy payload."""

    kind: str
    args: tuple[Term, ...] = ()
    payload: Optional["Policy"] = None

    def __str__(self) -> str:
        from .syntax import format_action

        return format_action(self)


@dataclass(frozen=True)
class ActionInstance:
    template: ActionTemplate
    id: int

    def __str__(self) -> str:
        return f"{self.template}@{self.id}"


ONCE = "!"
MANY = "?"


@dataclass(frozen=True)
class Requirement:
    mode: str
    action: ActionTemplate

    def __post_init__(self) -> None:
        if self.mode not in (ONCE, MANY):
            raise ValueError(f"requirement mode must be ! or ?, got {self.mode!r}")


class Policy:
    """Base class of policy formulas."""

    __slots__ = ()

    def __str__(self) -> str:
        from .syntax import format_policy

        return format_policy(self)


@dataclass(frozen=True)
class Atom(Policy):
    sig: PredicateSignature
    args: tuple[Term, ...] = ()

    def __post_init__(self) -> None:
        if len(self.args) != self.sig.arity:
            raise SortError(f"{self.sig.name} expects {self.sig.arity} arguments, got {len(self.args)}")
        for t, s in zip(self.args, self.sig.sorts):
            if t.sort != s:
                raise SortError(f"{self.sig.name}: argument {t} has sort {t.sort}, expected {s}")

    @property
    def name(self) -> str:
        return self.sig.name


@dataclass(frozen=True)
class Owns(Policy):
    owner: Term
    data: Term

    def __post_init__(self) -> None:
        if self.owner.sort != AGENT or self.data.sort != DATA:
            raise SortError("owns(agent, data)")


@dataclass(frozen=True)
class Says(Policy):
    speaker: Term
    body: Policy
    target: Term

    def __post_init__(self) -> None:
        if self.speaker.sort != AGENT or self.target.sort != AGENT:
            raise SortError("says(agent, policy, agent)")


@dataclass(frozen=True)
class And(Policy):
    left: Policy
    right: Policy


@dataclass(frozen=True)
class Implies(Policy):
    """Condition-guarded implication ``cond -> body``."""

    cond: Policy
    body: Policy


@dataclass(frozen=True)
class Oblige(Policy):
    """Obligation-guarded implication ``![act] -> body`` / ``?[act] -> body``."""

    req: Requirement
    body: Policy


@dataclass(frozen=True)
class Forall(Policy):
    var: Var
    body: Policy

    def __post_init__(self) -> None:
        if self.var.sort not in QUANTIFIABLE:
            raise SortError(f"cannot quantify over sort {self.var.sort}")


@dataclass(frozen=True)
class Hole(Policy):
    """Policy placeholder; only legal inside action-kind templates."""

    name: str


# ---------------------------------------------------------------------------
# traversal helpers


def subterms(p: Policy) -> Iterator[Term]:
    """Every term occurrence in ``p`` (binders included), in order."""
    if isinstance(p, Atom):
        yield from p.args
    elif isinstance(p, Owns):
        yield p.owner
        yield p.data
    elif isinstance(p, Says):
        yield p.speaker
        yield from subterms(p.body)
        yield p.target
    elif isinstance(p, (And,)):
        yield from subterms(p.left)
        yield from subterms(p.right)
    elif isinstance(p, Implies):
        yield from subterms(p.cond)
        yield from subterms(p.body)
    elif isinstance(p, Oblige):
        yield from action_subterms(p.req.action)
        yield from subterms(p.body)
    elif isinstance(p, Forall):
        yield p.var
        yield from subterms(p.body)


def action_subterms(t: ActionTemplate) -> Iterator[Term]:
    yield from t.args
    if t.payload is not None:
        yield from subterms(t.payload)


def names(p: Policy) -> set[str]:
    return {t.name for t in subterms(p)}


def action_names(t: ActionTemplate) -> set[str]:
    return {x.name for x in action_subterms(t)}


def free_vars(p: Policy) -> set[Var]:
    if isinstance(p, Atom):
        return {t for t in p.args if isinstance(t, Var)}
    if isinstance(p, Owns):
        return {t for t in (p.owner, p.data) if isinstance(t, Var)}
    if isinstance(p, Says):
        return {t for t in (p.speaker, p.target) if isinstance(t, Var)} | free_vars(p.body)
    if isinstance(p, And):
        return free_vars(p.left) | free_vars(p.right)
    if isinstance(p, Implies):
        return free_vars(p.cond) | free_vars(p.body)
    if isinstance(p, Oblige):
        return action_free_vars(p.req.action) | free_vars(p.body)
    if isinstance(p, Forall):
        return free_vars(p.body) - {p.var}
    if isinstance(p, Hole):
        return set()
    raise TypeError(p)


def action_free_vars(t: ActionTemplate) -> set[Var]:
    out = {a for a in t.args if isinstance(a, Var)}
    if t.payload is not None:
        out |= free_vars(t.payload)
    return out


def holes(p: Policy) -> set[str]:
    if isinstance(p, Hole):
        return {p.name}
    if isinstance(p, Says):
        return holes(p.body)
    if isinstance(p, And):
        return holes(p.left) | holes(p.right)
    if isinstance(p, Implies):
        return holes(p.cond) | holes(p.body)
    if isinstance(p, Oblige):
        inner = holes(p.req.action.payload) if p.req.action.payload is not None else set()
        return inner | holes(p.body)
    if isinstance(p, Forall):
        return holes(p.body)
    return set()


def is_ground(p: Policy) -> bool:
    return not free_vars(p) and not holes(p)


def is_ground_action(t: ActionTemplate) -> bool:
    if any(isinstance(a, Var) for a in t.args):
        return False
    return t.payload is None or is_ground(t.payload)


def data_set(p: Policy) -> set[Term]:
    """All data constants and data variables occurring in ``p``."""
    return {t for t in subterms(p) if t.sort == DATA}


# ---------------------------------------------------------------------------
# substitution


def fresh_name(base: str, avoid: set[str]) -> str:
    name = base + "'"
    while name in avoid:
        name += "'"
    return name


def _sub_term(t: Term, v: Var, r: Term) -> Term:
    return r if t == v else t


def substitute(p: Policy, v: Var, t: Term) -> Policy:
    """Capture-avoiding substitution of term ``t`` for free variable ``v``."""
    if t.sort != v.sort:
        raise SortError(f"cannot substitute {t} of sort {t.sort} for {v.name}:{v.sort}")
    return _subst(p, v, t)


def _subst(p: Policy, v: Var, t: Term) -> Policy:
    if isinstance(p, Atom):
        return Atom(p.sig, tuple(_sub_term(a, v, t) for a in p.args))
    if isinstance(p, Owns):
        return Owns(_sub_term(p.owner, v, t), _sub_term(p.data, v, t))
    if isinstance(p, Says):
        return Says(_sub_term(p.speaker, v, t), _subst(p.body, v, t), _sub_term(p.target, v, t))
    if isinstance(p, And):
        return And(_subst(p.left, v, t), _subst(p.right, v, t))
    if isinstance(p, Implies):
        return Implies(_subst(p.cond, v, t), _subst(p.body, v, t))
    if isinstance(p, Oblige):
        return Oblige(Requirement(p.req.mode, _subst_action(p.req.action, v, t)), _subst(p.body, v, t))
    if isinstance(p, Forall):
        if p.var == v or v not in free_vars(p.body):
            return p
        if isinstance(t, Var) and t.name == p.var.name:
            avoid = names(p.body) | {t.name, v.name}
            renamed = Var(fresh_name(p.var.name, avoid), p.var.sort)
            body = _subst(p.body, p.var, renamed)
            return Forall(renamed, _subst(body, v, t))
        return Forall(p.var, _subst(p.body, v, t))
    if isinstance(p, Hole):
        return p
    raise TypeError(p)


def _subst_action(a: ActionTemplate, v: Var, t: Term) -> ActionTemplate:
    payload = None if a.payload is None else _subst(a.payload, v, t)
    return ActionTemplate(a.kind, tuple(_sub_term(x, v, t) for x in a.args), payload)


def substitute_action(a: ActionTemplate, v: Var, t: Term) -> ActionTemplate:
    if t.sort != v.sort:
        raise SortError(f"cannot substitute {t} of sort {t.sort} for {v.name}:{v.sort}")
    return _subst_action(a, v, t)


def fill(p: Policy, terms: dict[str, Term], policies: dict[str, Policy]) -> Policy:
    """Instantiate template placeholders.

    ``terms`` maps placeholder variable names to ground terms, ``policies``
    maps hole names to ground policies. Values are ground, so no capture can
    occur; binders shadowing a placeholder keep their own meaning.
    """
    if isinstance(p, Hole):
        if p.name not in policies:
            raise KeyError(f"unbound policy placeholder {p.name}")
        return policies[p.name]
    if isinstance(p, Atom):
        return Atom(p.sig, tuple(_fill_term(a, terms) for a in p.args))
    if isinstance(p, Owns):
        return Owns(_fill_term(p.owner, terms), _fill_term(p.data, terms))
    if isinstance(p, Says):
        return Says(_fill_term(p.speaker, terms), fill(p.body, terms, policies), _fill_term(p.target, terms))
    if isinstance(p, And):
        return And(fill(p.left, terms, policies), fill(p.right, terms, policies))
    if isinstance(p, Implies):
        return Implies(fill(p.cond, terms, policies), fill(p.body, terms, policies))
    if isinstance(p, Oblige):
        return Oblige(Requirement(p.req.mode, fill_action(p.req.action, terms, policies)), fill(p.body, terms, policies))
    if isinstance(p, Forall):
        inner = {k: v for k, v in terms.items() if k != p.var.name}
        return Forall(p.var, fill(p.body, inner, policies))
    raise TypeError(p)


def _fill_term(t: Term, terms: dict[str, Term]) -> Term:
    if isinstance(t, Var) and t.name in terms:
        r = terms[t.name]
        if r.sort != t.sort:
            raise SortError(f"placeholder {t.name}:{t.sort} given {r} of sort {r.sort}")
        return r
    return t


def fill_action(a: ActionTemplate, terms: dict[str, Term], policies: dict[str, Policy]) -> ActionTemplate:
    payload = None if a.payload is None else fill(a.payload, terms, policies)
    return ActionTemplate(a.kind, tuple(_fill_term(x, terms) for x in a.args), payload)


# ---------------------------------------------------------------------------
# alpha-equivalence


def canon(p: Policy, env: tuple[Var, ...] = ()) -> tuple:
    """Nameless, hashable form of ``p``; equal iff alpha-equivalent."""
    if isinstance(p, Atom):
        return ("atom", p.sig.name, p.sig.sorts, tuple(_canon_term(a, env) for a in p.args))
    if isinstance(p, Owns):
        return ("owns", _canon_term(p.owner, env), _canon_term(p.data, env))
    if isinstance(p, Says):
        return ("says", _canon_term(p.speaker, env), canon(p.body, env), _canon_term(p.target, env))
    if isinstance(p, And):
        return ("and", canon(p.left, env), canon(p.right, env))
    if isinstance(p, Implies):
        return ("imp", canon(p.cond, env), canon(p.body, env))
    if isinstance(p, Oblige):
        return ("oblig", p.req.mode, canon_action(p.req.action, env), canon(p.body, env))
    if isinstance(p, Forall):
        return ("forall", p.var.sort, canon(p.body, (p.var,) + env))
    if isinstance(p, Hole):
        return ("hole", p.name)
    raise TypeError(p)


def _canon_term(t: Term, env: tuple[Var, ...]) -> tuple:
    if isinstance(t, Var):
        for i, b in enumerate(env):
            if b == t:
                return ("bound", i)
        return ("free", t.name, t.sort)
    return ("const", t.name, t.sort)


def canon_action(a: ActionTemplate, env: tuple[Var, ...] = ()) -> tuple:
    payload = None if a.payload is None else canon(a.payload, env)
    return (a.kind, tuple(_canon_term(x, env) for x in a.args), payload)


def alpha_eq(p: Policy, q: Policy) -> bool:
    return canon(p) == canon(q)


def action_eq(a: ActionTemplate, b: ActionTemplate) -> bool:
    return canon_action(a) == canon_action(b)


def depth(p: Policy) -> int:
    if isinstance(p, (Atom, Owns, Hole)):
        return 1
    if isinstance(p, Says):
        return 1 + depth(p.body)
    if isinstance(p, (And,)):
        return 1 + max(depth(p.left), depth(p.right))
    if isinstance(p, Implies):
        return 1 + max(depth(p.cond), depth(p.body))
    if isinstance(p, (Oblige, Forall)):
        return 1 + depth(p.body)
    raise TypeError(p)


def is_basic(p: Policy) -> bool:
    """Basic predicates: atoms and ownership facts."""
    return isinstance(p, (Atom, Owns))

