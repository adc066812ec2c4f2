"""Bounded proof search over the cut-free fragment.

Iterative deepening on the number of logical rule applications. Structural
bookkeeping (permutation, contraction, weakening) is free: each move first
rearranges the context with ``restructure`` so the principal item is last.
The search is incomplete beyond its bound; any proof it returns is meant to
be accepted by ``kernel.check``.
"""

from __future__ import annotations

from collections import Counter
from typing import Optional

from .actions import ActionRegistry, concl
from .kernel import Act, ManyOblig, Pol, ProofTerm, Sequent, find_op, context_names
from .model import (
    AGENT,
    MANY,
    ONCE,
    ActionTemplate,
    And,
    Const,
    Forall,
    Implies,
    Oblige,
    Policy,
    Requirement,
    Says,
    action_eq,
    action_subterms,
    alpha_eq,
    canon,
    fresh_name,
    subterms,
    substitute,
)

Op = tuple  # (rule, args)


def restructure(src: tuple, dst: tuple, linear: bool = False) -> Optional[list[Op]]:
    """Structural steps turning context ``src`` (conclusion) into ``dst`` (premise).

    Items may be dropped and, in the unrestricted context, duplicated.
    Returns None when ``dst`` needs an item ``src`` lacks.
    """
    weaken, perm = ("w_l_act", "perm_act") if linear else ("w_l", "perm_l")
    cur = list(src)
    ops: list[Op] = []
    need = Counter(dst)
    have = Counter(cur)
    for x in need:
        if have[x] == 0 or (linear and have[x] < need[x]):
            return None
    for i in reversed(range(len(cur))):
        x = cur[i]
        if have[x] > need[x]:
            ops.append((weaken, (i,)))
            del cur[i]
            have[x] -= 1

    def to_end(j: int) -> None:
        for k in range(j, len(cur) - 1):
            ops.append((perm, (k,)))
            cur[k], cur[k + 1] = cur[k + 1], cur[k]

    for x in dict.fromkeys(dst):
        while have[x] < need[x]:
            to_end(max(i for i, y in enumerate(cur) if y == x))
            ops.append(("contr_l", ()))
            cur.append(x)
            have[x] += 1
    for t, x in enumerate(dst):
        j = next(i for i in range(t, len(cur)) if cur[i] == x)
        for k in range(j - 1, t - 1, -1):
            ops.append((perm, (k,)))
            cur[k], cur[k + 1] = cur[k + 1], cur[k]
    return ops


def wrap(ops: list[Op], inner: ProofTerm) -> ProofTerm:
    for rule, args in reversed(ops):
        inner = ProofTerm(rule, args, (inner,))
    return inner


def _contains_req(p: Policy, mode: str, act: ActionTemplate) -> bool:
    if isinstance(p, Oblige):
        if p.req.mode == mode and action_eq(p.req.action, act):
            return True
        return _contains_req(p.body, mode, act)
    if isinstance(p, (Implies,)):
        return _contains_req(p.cond, mode, act) or _contains_req(p.body, mode, act)
    if isinstance(p, And):
        return _contains_req(p.left, mode, act) or _contains_req(p.right, mode, act)
    if isinstance(p, Says):
        return _contains_req(p.body, mode, act)
    if isinstance(p, Forall):
        # instantiation may produce the action; compare shape loosely
        return _contains_kind(p.body, mode, act.kind)
    return False


def _contains_kind(p: Policy, mode: str, kind: str) -> bool:
    if isinstance(p, Oblige):
        return (p.req.mode == mode and p.req.action.kind == kind) or _contains_kind(p.body, mode, kind)
    if isinstance(p, Implies):
        return _contains_kind(p.cond, mode, kind) or _contains_kind(p.body, mode, kind)
    if isinstance(p, And):
        return _contains_kind(p.left, mode, kind) or _contains_kind(p.right, mode, kind)
    if isinstance(p, (Says, Forall)):
        return _contains_kind(p.body, mode, kind)
    return False


class _Search:
    def __init__(self, reasoner: str, reg: ActionRegistry, constants: dict[str, list[str]]):
        self.reasoner = reasoner
        self.reg = reg
        self.constants = constants
        self.failed: dict = {}

    def prove(self, G: tuple, D: tuple, goal: Policy, depth: int) -> Optional[ProofTerm]:
        if depth <= 0:
            return None
        key = (G, D, canon(goal))
        if self.failed.get(key, 0) >= depth:
            return None
        for pt in self._moves(G, D, goal, depth):
            if pt is not None:
                return pt
        self.failed[key] = max(self.failed.get(key, 0), depth)
        return None

    def use(self, G: tuple, i: int, keep: bool) -> tuple[list[Op], tuple]:
        rest = G[:i] + G[i + 1:]
        dst = (G if keep else rest) + (G[i],)
        return restructure(G, dst), dst

    def _moves(self, G, D, goal, depth):
        me = Const(self.reasoner, AGENT)
        # closing moves
        for i, it in enumerate(G):
            if isinstance(it, Pol) and alpha_eq(it.policy, goal):
                ops, _ = self.use(G, i, False)
                yield wrap(ops, ProofTerm("init"))
                return
        od = find_op(list(G), goal, self.reasoner)
        if od is not None:
            yield ProofTerm("der_pol", (od,))
            return
        d = depth - 1
        # right rules
        if isinstance(goal, Implies):
            sub = self.prove(G + (Pol(goal.cond),), D, goal.body, d)
            yield sub and ProofTerm("imp_r", (), (sub,))
        elif isinstance(goal, Oblige):
            sub = self.prove(G, D, goal.body, d)
            rule = "bang_imp_r" if goal.req.mode == ONCE else "quest_imp_r"
            yield sub and ProofTerm(rule, (), (sub,))
        elif isinstance(goal, Forall):
            x = fresh_name(goal.var.name, context_names(G, D, goal) | {self.reasoner})
            body = substitute(goal.body, goal.var, Const(x, goal.var.sort))
            sub = self.prove(G, D, body, d)
            yield sub and ProofTerm(f"forall_r_{goal.var.sort}", (x,), (sub,))
        elif isinstance(goal, And):
            ops = restructure(G, G + G)
            for left, right, dops in self._delta_splits(D):
                l = self.prove(G, left, goal.left, d)
                r = l and self.prove(G, right, goal.right, d)
                if r:
                    yield wrap(ops, wrap(dops, ProofTerm("and_r", (len(G), len(left)), (l, r))))
                    return
        elif isinstance(goal, Says) and goal.speaker == me:
            for i, it in enumerate(G):
                p = it.policy if isinstance(it, Pol) else None
                if isinstance(p, Says) and p.speaker == me and p.target == goal.target:
                    sub = self.prove((Pol(p.body),), (), goal.body, d)
                    if sub:
                        ops, _ = self.use(G, i, False)
                        yield wrap(ops, ProofTerm("refine", (), (sub,)))
                        return
        # left rules on the unrestricted context
        for i, it in enumerate(G):
            yield from self._left(G, D, goal, i, it, d)
        # use-once obligations
        for j, it in enumerate(D):
            if not any(isinstance(g, Pol) and _contains_req(g.policy, ONCE, it.action) for g in G):
                continue
            dops = restructure(D, D[:j] + D[j + 1:] + (it,), linear=True)
            sub = self.prove(G, D[:j] + D[j + 1:], Oblige(Requirement(ONCE, it.action), goal), d)
            yield sub and wrap(dops, ProofTerm("bang_imp_l", (), (sub,)))

    def _left(self, G, D, goal, i, it, d):
        me = Const(self.reasoner, AGENT)

        def go(rule, args, new, keep):
            ops, dst = self.use(G, i, keep)
            sub = self.prove(dst[:-1] + tuple(new), D, goal, d)
            return sub and wrap(ops, ProofTerm(rule, args, (sub,)))

        if isinstance(it, Act):
            c = concl(it.action, self.reasoner, self.reg)
            if c is not None and Pol(c) not in G:
                yield go("obs_act", (), [Pol(c)], False)
            return
        if isinstance(it, ManyOblig):
            if any(isinstance(g, Pol) and _contains_req(g.policy, MANY, it.action) for g in G):
                ops, dst = self.use(G, i, True)
                sub = self.prove(dst[:-1], D, Oblige(Requirement(MANY, it.action), goal), d)
                yield sub and wrap(ops, ProofTerm("quest_imp_l", (), (sub,)))
            return
        p = it.policy
        if isinstance(p, Says) and p.target == me:
            if Pol(p.body) not in G:
                yield go("say", (), [Pol(p.body)], p.speaker == me)
        elif isinstance(p, And):
            for rule, part in (("and_l1", p.left), ("and_l2", p.right)):
                if Pol(part) not in G:
                    yield go(rule, (), [Pol(part)], True)
        elif isinstance(p, Forall):
            for w in self._witnesses(G, D, goal, p.var.sort):
                inst = Pol(substitute(p.body, p.var, Const(w, p.var.sort)))
                if inst not in G:
                    yield go(f"forall_l_{p.var.sort}", (w,), [inst], True)
        elif isinstance(p, Implies):
            rest = G[:i] + G[i + 1:]
            ops = restructure(G, rest + rest + (it,))
            for left, right, dops in self._delta_splits(D):
                l = self.prove(rest, left, p.cond, d)
                r = l and self.prove(rest + (Pol(p.body),), right, goal, d)
                if r:
                    yield wrap(ops, wrap(dops, ProofTerm("imp_l", (len(rest), len(left)), (l, r))))
                    return

    def _witnesses(self, G, D, goal, sort: str) -> list[str]:
        found = set(self.constants.get(sort, ()))
        for it in list(G) + list(D):
            terms = subterms(it.policy) if isinstance(it, Pol) else action_subterms(it.action)
            found |= {t.name for t in terms if isinstance(t, Const) and t.sort == sort}
        found |= {t.name for t in subterms(goal) if isinstance(t, Const) and t.sort == sort}
        if sort == AGENT:
            found.add(self.reasoner)
        return sorted(found)

    def _delta_splits(self, D: tuple):
        """All ways to send each linear item left or right."""
        n = len(D)
        for mask in range(1 << n):
            left = tuple(D[k] for k in range(n) if mask >> k & 1)
            right = tuple(D[k] for k in range(n) if not mask >> k & 1)
            yield left, right, restructure(D, left + right, linear=True)


def search(
    s: Sequent,
    max_depth: int,
    reg: ActionRegistry,
    constants: Optional[dict[str, list[str]]] = None,
) -> Optional[ProofTerm]:
    """Find a proof of ``s`` using at most ``max_depth`` logical rules, or None."""
    if max_depth < 1:
        raise ValueError("max_depth must be at least 1")
    engine = _Search(s.reasoner, reg, constants or {})
    for depth in range(1, max_depth + 1):
        pt = engine.prove(tuple(s.gamma), tuple(s.delta), s.goal, depth)
        if pt is not None:
            return pt
    return None
