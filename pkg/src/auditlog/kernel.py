"""Checker for the double-context sequent calculus.

A sequent ``Γ ; Δ ⊢_A φ`` has an unrestricted context Γ (policies, observed
actions, use-many obligations) and a linear context Δ (use-once
obligations). Contexts are ordered; in comma notation ``Γ, φ`` the principal
item is the *last* element of the list. Proof terms are explicit: the
multiplicative rules carry their context split points, quantifier rules carry
their witness / eigenvariable, and ``der_pol`` carries an op derivation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .actions import ActionRegistry, concl
from .model import (
    AGENT,
    DATA,
    MANY,
    ONCE,
    ActionTemplate,
    And,
    Atom,
    Const,
    Forall,
    Implies,
    Oblige,
    Owns,
    Policy,
    Requirement,
    Says,
    action_names,
    alpha_eq,
    is_basic,
    is_ground,
    is_ground_action,
    names,
    substitute,
)


# ---------------------------------------------------------------------------
# context items


@dataclass(frozen=True)
class Pol:
    policy: Policy

    def __str__(self) -> str:
        return str(self.policy)


@dataclass(frozen=True)
class Act:
    action: ActionTemplate

    def __str__(self) -> str:
        return f"act {self.action}"


@dataclass(frozen=True)
class ManyOblig:
    action: ActionTemplate

    def __str__(self) -> str:
        return f"?{self.action}"


@dataclass(frozen=True)
class OnceOblig:
    action: ActionTemplate

    def __str__(self) -> str:
        return f"!{self.action}"


NonLinItem = Union[Pol, Act, ManyOblig]
LinItem = OnceOblig


@dataclass(frozen=True)
class Sequent:
    reasoner: str
    gamma: tuple[NonLinItem, ...]
    delta: tuple[LinItem, ...]
    goal: Policy

    def __str__(self) -> str:
        g = ", ".join(str(i) for i in self.gamma) or "·"
        d = ", ".join(str(i) for i in self.delta) or "·"
        return f"{g} ; {d} ⊢{self.reasoner} {self.goal}"

    def names(self) -> set[str]:
        return context_names(self.gamma, self.delta, self.goal) | {self.reasoner}


def item_names(item) -> set[str]:
    if isinstance(item, Pol):
        return names(item.policy)
    return action_names(item.action)


def context_names(gamma, delta, goal: Policy) -> set[str]:
    out = names(goal)
    for it in list(gamma) + list(delta):
        out |= item_names(it)
    return out


# ---------------------------------------------------------------------------
# proof terms

ARITY: dict[str, int] = {
    "init": 0,
    "der_pol": 0,
    "cut": 2,
    "and_r": 2,
    "imp_l": 2,
    "and_l1": 1,
    "and_l2": 1,
    "imp_r": 1,
    "bang_imp_l": 1,
    "bang_imp_r": 1,
    "quest_imp_l": 1,
    "quest_imp_r": 1,
    "forall_l_agent": 1,
    "forall_l_data": 1,
    "forall_r_agent": 1,
    "forall_r_data": 1,
    "w_l": 1,
    "w_l_act": 1,
    "contr_l": 1,
    "perm_l": 1,
    "perm_act": 1,
    "say": 1,
    "obs_act": 1,
    "refine": 1,
}
RULES = frozenset(ARITY)

OP_ARITY: dict[str, int] = {
    "op_cond_imp": 1,
    "op_oblig_imp": 1,
    "op_and": 2,
    "op_forall": 1,
    "op_says": 1,
    "op_owns": 0,
    "op_atom": 0,
}
OP_ALIASES = {"op_imp": "op_cond_imp"}


@dataclass(frozen=True)
class OpDerivation:
    rule: str
    args: tuple = ()
    children: tuple["OpDerivation", ...] = ()

    def __str__(self) -> str:
        from .prooftext import format_op

        return format_op(self)


@dataclass(frozen=True)
class ProofTerm:
    rule: str
    args: tuple = ()
    children: tuple["ProofTerm", ...] = ()

    def __str__(self) -> str:
        from .prooftext import format_proof

        return format_proof(self)

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)


@dataclass(frozen=True)
class AssumptionSummary:
    """Initial assumptions a proof actually uses.

    ``obligs`` keeps one entry per ``!`` consumption (a multiset) and each
    distinct ``?`` obligation once.
    """

    conds: frozenset[Policy] = frozenset()
    acts: tuple[ActionTemplate, ...] = ()
    obligs: tuple[tuple[str, ActionTemplate], ...] = ()

    def once(self) -> list[ActionTemplate]:
        return [a for m, a in self.obligs if m == ONCE]

    def many(self) -> list[ActionTemplate]:
        return [a for m, a in self.obligs if m == MANY]


@dataclass(frozen=True)
class Derivation:
    """A checked proof: every node annotated with the sequent it proves."""

    rule: str
    args: tuple
    sequent: Sequent
    children: tuple["Derivation", ...]
    summary: AssumptionSummary = AssumptionSummary()


# ---------------------------------------------------------------------------
# errors


class CheckError(Exception):
    code = "CheckError"

    def __init__(self, message: str, rule: str = "", path: str = ""):
        super().__init__(message)
        self.message = message
        self.rule = rule
        self.path = path

    def __str__(self) -> str:
        where = f" at {self.path}" if self.path else ""
        rule = f" ({self.rule})" if self.rule else ""
        return f"{self.code}{where}{rule}: {self.message}"


class UnknownRule(CheckError):
    code = "UnknownRule"


class RuleArityError(CheckError):
    code = "RuleArityError"


class BadInstantiation(CheckError):
    code = "BadInstantiation"


class IllFormedSequent(CheckError):
    code = "IllFormedSequent"


class GoalMismatch(CheckError):
    """The sequent does not have the shape the rule concludes."""

    code = "GoalMismatch"


class SplitMismatch(CheckError):
    code = "SplitMismatch"


class NonFreshEigenvariable(CheckError):
    code = "NonFreshEigenvariable"


class RefineContextNotEmpty(CheckError):
    code = "RefineContextNotEmpty"


class LinearityError(CheckError):
    code = "LinearityError"


class LinearContraction(LinearityError):
    code = "LinearContraction"


class NoConclusion(CheckError):
    code = "NoConclusion"


class OpUnresolvedData(CheckError):
    code = "OpUnresolvedData"


class OwnerMismatch(CheckError):
    code = "OwnerMismatch"


# ---------------------------------------------------------------------------
# checking


@dataclass
class _Tally:
    conds: list = field(default_factory=list)
    acts: list = field(default_factory=list)
    obligs: list = field(default_factory=list)

    def summary(self) -> AssumptionSummary:
        acts: list[ActionTemplate] = []
        for a in self.acts:
            if a not in acts:
                acts.append(a)
        obligs: list[tuple[str, ActionTemplate]] = []
        for m, a in self.obligs:
            if m == MANY and (m, a) in obligs:
                continue
            obligs.append((m, a))
        return AssumptionSummary(frozenset(self.conds), tuple(acts), tuple(obligs))


# Γ entries carry a provenance flag: True when the item is an initial
# assumption of the root sequent, False when a rule introduced it.
_G = tuple  # tuple[tuple[NonLinItem, bool], ...]


class _Checker:
    def __init__(self, reasoner: str, reg: ActionRegistry):
        self.reasoner = reasoner
        self.reg = reg

    def fail(self, cls, msg: str, pt: ProofTerm, path: str):
        raise cls(msg, pt.rule, path)

    def inst(self, pt: ProofTerm, path: str, *types, optional: bool = False) -> tuple:
        args = pt.args
        ok = len(args) == len(types) or (optional and len(args) == 0)
        if ok:
            ok = all(isinstance(a, t) and not (t is int and isinstance(a, bool)) for a, t in zip(args, types))
        if not ok:
            want = ", ".join(t.__name__ for t in types) or "nothing"
            self.fail(BadInstantiation, f"expects instantiation ({want}), got {args!r}", pt, path)
        return args

    def last_pol(self, pt, G, path, cls):
        if not G or not isinstance(G[-1][0], Pol):
            self.fail(GoalMismatch, "the last context item is not a policy", pt, path)
        p = G[-1][0].policy
        if not isinstance(p, cls):
            self.fail(GoalMismatch, f"principal formula {p} is not a {cls.__name__}", pt, path)
        return p

    def split(self, pt, seq, k: int, path: str, what: str):
        if not 0 <= k <= len(seq):
            self.fail(SplitMismatch, f"{what} split {k} outside 0..{len(seq)}", pt, path)
        return seq[:k], seq[k:]

    def check(self, pt: ProofTerm, G: _G, D: tuple, goal: Policy, tally: _Tally, path: str) -> Derivation:
        rule = pt.rule
        if rule in ("forall_l", "forall_r"):
            rule = self._sorted_forall(rule, G, goal)
            pt = ProofTerm(rule, pt.args, pt.children)
        if rule not in ARITY:
            raise UnknownRule(f"unknown rule {rule!r}", rule, path)
        if len(pt.children) != ARITY[rule]:
            self.fail(RuleArityError, f"expects {ARITY[rule]} premise(s), got {len(pt.children)}", pt, path)
        seq = Sequent(self.reasoner, tuple(i for i, _ in G), D, goal)
        kids: list[Derivation] = []

        def sub(k: int, G2, D2, goal2, t: Optional[_Tally] = None):
            kids.append(self.check(pt.children[k], tuple(G2), tuple(D2), goal2, t or tally, f"{path}.{k}"))

        if rule == "init":
            self.inst(pt, path)
            if not G or not isinstance(G[-1][0], Pol) or not alpha_eq(G[-1][0].policy, goal):
                self.fail(GoalMismatch, f"last context item does not match goal {goal}", pt, path)
            item, root = G[-1]
            if root and is_basic(item.policy):
                tally.conds.append(item.policy)

        elif rule == "cut":
            k, m, phi = self.inst(pt, path, int, int, Policy)
            if not is_ground(phi):
                self.fail(BadInstantiation, f"cut formula {phi} is not ground", pt, path)
            G1, G2 = self.split(pt, G, k, path, "context")
            D1, D2 = self.split(pt, D, m, path, "linear context")
            sub(0, G1, D1, phi)
            sub(1, G2 + ((Pol(phi), False),), D2, goal)

        elif rule in ("and_l1", "and_l2"):
            self.inst(pt, path)
            p = self.last_pol(pt, G, path, And)
            part = p.left if rule == "and_l1" else p.right
            sub(0, G[:-1] + ((Pol(part), False),), D, goal)

        elif rule == "and_r":
            k, m = self.inst(pt, path, int, int)
            if not isinstance(goal, And):
                self.fail(GoalMismatch, f"goal {goal} is not a conjunction", pt, path)
            G1, G2 = self.split(pt, G, k, path, "context")
            D1, D2 = self.split(pt, D, m, path, "linear context")
            sub(0, G1, D1, goal.left)
            sub(1, G2, D2, goal.right)

        elif rule == "imp_l":
            k, m = self.inst(pt, path, int, int)
            p = self.last_pol(pt, G, path, Implies)
            G1, G2 = self.split(pt, G[:-1], k, path, "context")
            D1, D2 = self.split(pt, D, m, path, "linear context")
            sub(0, G1, D1, p.cond)
            sub(1, G2 + ((Pol(p.body), False),), D2, goal)

        elif rule == "imp_r":
            self.inst(pt, path)
            if not isinstance(goal, Implies):
                self.fail(GoalMismatch, f"goal {goal} is not an implication", pt, path)
            sub(0, G + ((Pol(goal.cond), False),), D, goal.body)

        elif rule == "bang_imp_l":
            self.inst(pt, path)
            if not D:
                self.fail(
                    LinearContraction,
                    "no use-once obligation left in the linear context; it cannot be used twice",
                    pt,
                    path,
                )
            xi = D[-1].action
            tally.obligs.append((ONCE, xi))
            sub(0, G, D[:-1], Oblige(Requirement(ONCE, xi), goal))

        elif rule in ("bang_imp_r", "quest_imp_r"):
            self.inst(pt, path)
            mode = ONCE if rule == "bang_imp_r" else MANY
            if not isinstance(goal, Oblige) or goal.req.mode != mode:
                self.fail(GoalMismatch, f"goal {goal} is not a {mode}-obligation implication", pt, path)
            sub(0, G, D, goal.body)

        elif rule == "quest_imp_l":
            self.inst(pt, path)
            if not G or not isinstance(G[-1][0], ManyOblig):
                self.fail(GoalMismatch, "the last context item is not a use-many obligation", pt, path)
            xi = G[-1][0].action
            tally.obligs.append((MANY, xi))
            sub(0, G[:-1], D, Oblige(Requirement(MANY, xi), goal))

        elif rule in ("forall_l_agent", "forall_l_data"):
            (w,) = self.inst(pt, path, str)
            sort = AGENT if rule.endswith("agent") else DATA
            p = self.last_pol(pt, G, path, Forall)
            if p.var.sort != sort:
                self.fail(GoalMismatch, f"{p} quantifies over {p.var.sort}, not {sort}", pt, path)
            sub(0, G[:-1] + ((Pol(substitute(p.body, p.var, Const(w, sort))), False),), D, goal)

        elif rule in ("forall_r_agent", "forall_r_data"):
            (x,) = self.inst(pt, path, str)
            sort = AGENT if rule.endswith("agent") else DATA
            if not isinstance(goal, Forall) or goal.var.sort != sort:
                self.fail(GoalMismatch, f"goal {goal} is not a quantification over {sort}", pt, path)
            if x in seq.names():
                self.fail(NonFreshEigenvariable, f"eigenvariable {x} occurs in the sequent", pt, path)
            sub(0, G, D, substitute(goal.body, goal.var, Const(x, sort)))

        elif rule == "w_l":
            (i,) = self.inst(pt, path, int, optional=True) or (len(G) - 1,)
            if not 0 <= i < len(G):
                self.fail(BadInstantiation, f"no context item {i} to weaken", pt, path)
            sub(0, G[:i] + G[i + 1:], D, goal)

        elif rule == "w_l_act":
            (i,) = self.inst(pt, path, int, optional=True) or (len(D) - 1,)
            if not 0 <= i < len(D):
                self.fail(BadInstantiation, f"no linear item {i} to weaken", pt, path)
            sub(0, G, D[:i] + D[i + 1:], goal)

        elif rule == "contr_l":
            self.inst(pt, path)
            if not G:
                self.fail(GoalMismatch, "empty context", pt, path)
            sub(0, G + (G[-1],), D, goal)

        elif rule in ("perm_l", "perm_act"):
            (i,) = self.inst(pt, path, int)
            ctx = G if rule == "perm_l" else D
            if not 0 <= i < len(ctx) - 1:
                self.fail(BadInstantiation, f"cannot swap positions {i} and {i + 1}", pt, path)
            swapped = ctx[:i] + (ctx[i + 1], ctx[i]) + ctx[i + 2:]
            if rule == "perm_l":
                sub(0, swapped, D, goal)
            else:
                sub(0, G, swapped, goal)

        elif rule == "say":
            self.inst(pt, path)
            p = self.last_pol(pt, G, path, Says)
            if p.target != Const(self.reasoner, AGENT):
                self.fail(GoalMismatch, f"{p} is not addressed to {self.reasoner}", pt, path)
            sub(0, G[:-1] + ((Pol(p.body), False),), D, goal)

        elif rule == "obs_act":
            self.inst(pt, path)
            if not G or not isinstance(G[-1][0], Act):
                self.fail(GoalMismatch, "the last context item is not an action", pt, path)
            item, root = G[-1]
            c = concl(item.action, self.reasoner, self.reg)
            if c is None:
                self.fail(NoConclusion, f"{self.reasoner} concludes nothing from {item.action}", pt, path)
            if root:
                tally.acts.append(item.action)
            sub(0, G[:-1] + ((Pol(c), False),), D, goal)

        elif rule == "refine":
            self.inst(pt, path)
            me = Const(self.reasoner, AGENT)
            if not isinstance(goal, Says) or goal.speaker != me:
                self.fail(GoalMismatch, f"goal {goal} is not a says statement by {self.reasoner}", pt, path)
            p = self.last_pol(pt, G, path, Says)
            if p.speaker != me or p.target != goal.target:
                self.fail(GoalMismatch, f"{p} does not let {self.reasoner} speak to {goal.target}", pt, path)
            try:
                sub(0, ((Pol(p.body), False),), (), goal.body)
            except CheckError:
                if self._succeeds(pt.children[0], G[:-1] + ((Pol(p.body), False),), D, goal.body):
                    self.fail(
                        RefineContextNotEmpty,
                        "the refinement premise uses assumptions beyond the refined policy",
                        pt,
                        path,
                    )
                raise

        elif rule == "der_pol":
            (od,) = self.inst(pt, path, OpDerivation)
            used = check_op_indices(od, [i for i, _ in G], goal, self.reasoner, f"{path}.op")
            for idx in used:
                item, root = G[idx]
                if root:
                    tally.conds.append(item.policy)

        return Derivation(rule, pt.args, seq, tuple(kids))

    def _sorted_forall(self, rule: str, G, goal) -> str:
        target = goal if rule == "forall_r" else (G[-1][0].policy if G and isinstance(G[-1][0], Pol) else None)
        sort = target.var.sort if isinstance(target, Forall) else DATA
        return f"{rule}_{sort}"

    def _succeeds(self, pt, G, D, goal) -> bool:
        try:
            self.check(pt, tuple(G), tuple(D), goal, _Tally(), "probe")
        except CheckError:
            return False
        return True


def _validate(s: Sequent) -> None:
    for it in s.gamma:
        if isinstance(it, Pol):
            if not is_ground(it.policy):
                raise IllFormedSequent(f"context policy {it.policy} is not ground")
        elif isinstance(it, (Act, ManyOblig)):
            if not is_ground_action(it.action):
                raise IllFormedSequent(f"context action {it.action} is not ground")
        else:
            raise IllFormedSequent(f"{it!r} cannot appear in the unrestricted context")
    for it in s.delta:
        if not isinstance(it, OnceOblig):
            raise IllFormedSequent(f"{it!r} cannot appear in the linear context")
        if not is_ground_action(it.action):
            raise IllFormedSequent(f"linear item {it.action} is not ground")
    if not is_ground(s.goal):
        raise IllFormedSequent(f"goal {s.goal} is not ground")


def check(pt: ProofTerm, s: Sequent, reg: ActionRegistry) -> Derivation:
    """Check ``pt`` against ``s``; return the annotated derivation or raise CheckError."""
    _validate(s)
    tally = _Tally()
    d = _Checker(s.reasoner, reg).check(pt, tuple((i, True) for i in s.gamma), tuple(s.delta), s.goal, tally, "root")
    return Derivation(d.rule, d.args, d.sequent, d.children, tally.summary())


def is_valid(pt: ProofTerm, s: Sequent, reg: ActionRegistry) -> bool:
    try:
        check(pt, s, reg)
    except CheckError:
        return False
    return True


def extract_assumptions(pt: ProofTerm, s: Sequent, reg: ActionRegistry) -> AssumptionSummary:
    return check(pt, s, reg).summary


# ---------------------------------------------------------------------------
# op: the active-dataset relation


def check_op(od: OpDerivation, gamma: Sequence[NonLinItem], p: Policy, reasoner: str) -> None:
    """Raise unless ``od`` shows every datum ``p`` affects is owned by ``reasoner`` in ``gamma``."""
    check_op_indices(od, list(gamma), p, reasoner, "op")


def check_op_indices(od: OpDerivation, gamma: list, p: Policy, reasoner: str, path: str = "op") -> list[int]:
    used: list[int] = []
    avoid = {reasoner} | names(p)
    for it in gamma:
        avoid |= item_names(it)
    _op(od, gamma, p, reasoner, path, used, avoid)
    return used


def _owned(gamma: list, idx, data, reasoner: str, rule: str, path: str) -> None:
    if not isinstance(idx, int) or isinstance(idx, bool):
        raise BadInstantiation(f"owns index must be an integer, got {idx!r}", rule, path)
    if not 0 <= idx < len(gamma):
        raise OpUnresolvedData(f"{data} is not resolved: no context item {idx}", rule, path)
    item = gamma[idx]
    if not isinstance(item, Pol) or not isinstance(item.policy, Owns) or item.policy.data != data:
        raise OpUnresolvedData(f"context item {idx} ({item}) is not an ownership fact for {data}", rule, path)
    if item.policy.owner != Const(reasoner, AGENT):
        raise OwnerMismatch(f"{data} is owned by {item.policy.owner}, not by {reasoner}", rule, path)


def _op(od: OpDerivation, gamma: list, p: Policy, reasoner: str, path: str, used: list, avoid: set) -> None:
    rule = OP_ALIASES.get(od.rule, od.rule)
    if rule not in OP_ARITY:
        raise UnknownRule(f"unknown op rule {od.rule!r}", od.rule, path)
    if len(od.children) != OP_ARITY[rule]:
        raise RuleArityError(f"expects {OP_ARITY[rule]} premise(s), got {len(od.children)}", rule, path)

    def shape(cls, what: str):
        if not isinstance(p, cls):
            raise GoalMismatch(f"{p} is not {what}", rule, path)

    if rule == "op_says":
        shape(Says, "a says statement")
        _op(od.children[0], gamma, p.body, reasoner, path + ".0", used, avoid)
    elif rule == "op_cond_imp":
        shape(Implies, "a condition implication")
        _op(od.children[0], gamma, p.body, reasoner, path + ".0", used, avoid)
    elif rule == "op_oblig_imp":
        shape(Oblige, "an obligation implication")
        _op(od.children[0], gamma, p.body, reasoner, path + ".0", used, avoid)
    elif rule == "op_and":
        shape(And, "a conjunction")
        _op(od.children[0], gamma, p.left, reasoner, path + ".0", used, avoid)
        _op(od.children[1], gamma, p.right, reasoner, path + ".1", used, avoid)
    elif rule == "op_forall":
        shape(Forall, "a quantification")
        if len(od.args) != 1 or not isinstance(od.args[0], str):
            raise BadInstantiation("op_forall needs one eigenvariable name", rule, path)
        x = od.args[0]
        if x in avoid or x in names(p):
            raise NonFreshEigenvariable(f"eigenvariable {x} is not fresh", rule, path)
        body = substitute(p.body, p.var, Const(x, p.var.sort))
        _op(od.children[0], gamma, body, reasoner, path + ".0", used, avoid | {x})
    elif rule == "op_owns":
        shape(Owns, "an ownership fact")
        if len(od.args) != 1:
            raise BadInstantiation("op_owns needs one context index", rule, path)
        _owned(gamma, od.args[0], p.data, reasoner, rule, path)
        used.append(od.args[0])
    elif rule == "op_atom":
        shape(Atom, "an atomic predicate")
        positions = sorted(p.sig.affects)
        if not positions:
            raise OpUnresolvedData(f"{p.sig.name} affects no data, so no owner can create it", rule, path)
        if len(od.args) != len(positions):
            raise BadInstantiation(
                f"{p.sig.name} affects {len(positions)} data position(s); got {len(od.args)} index(es)", rule, path
            )
        for idx, pos in zip(od.args, positions):
            _owned(gamma, idx, p.args[pos], reasoner, rule, path)
            used.append(idx)


def find_op(gamma: Sequence[NonLinItem], p: Policy, reasoner: str, avoid: Optional[set] = None) -> Optional[OpDerivation]:
    """Build an op derivation for ``p`` over ``gamma`` if one exists."""
    if avoid is None:
        avoid = {reasoner} | names(p)
        for it in gamma:
            avoid |= item_names(it)
    me = Const(reasoner, AGENT)

    def owner_index(data) -> Optional[int]:
        for i, it in enumerate(gamma):
            if isinstance(it, Pol) and isinstance(it.policy, Owns):
                if it.policy.data == data and it.policy.owner == me:
                    return i
        return None

    if isinstance(p, Says):
        c = find_op(gamma, p.body, reasoner, avoid)
        return c and OpDerivation("op_says", (), (c,))
    if isinstance(p, Implies):
        c = find_op(gamma, p.body, reasoner, avoid)
        return c and OpDerivation("op_cond_imp", (), (c,))
    if isinstance(p, Oblige):
        c = find_op(gamma, p.body, reasoner, avoid)
        return c and OpDerivation("op_oblig_imp", (), (c,))
    if isinstance(p, And):
        l = find_op(gamma, p.left, reasoner, avoid)
        r = l and find_op(gamma, p.right, reasoner, avoid)
        return r and OpDerivation("op_and", (), (l, r))
    if isinstance(p, Forall):
        base = "e"
        k = 0
        taken = avoid | names(p)
        while f"{base}{k}" in taken:
            k += 1
        x = f"{base}{k}"
        c = find_op(gamma, substitute(p.body, p.var, Const(x, p.var.sort)), reasoner, avoid | {x})
        return c and OpDerivation("op_forall", (x,), (c,))
    if isinstance(p, Owns):
        i = owner_index(p.data)
        return None if i is None else OpDerivation("op_owns", (i,))
    if isinstance(p, Atom):
        positions = sorted(p.sig.affects)
        if not positions:
            return None
        idx = [owner_index(p.args[pos]) for pos in positions]
        if any(i is None for i in idx):
            return None
        return OpDerivation("op_atom", tuple(idx))
    return None
