from collections import Counter

from hypothesis import given, settings
from hypothesis import strategies as st

from auditlog.actions import ActionKindSpec, ActionRegistry, ObsRule, register_kind
from auditlog.kernel import Act, ManyOblig, OnceOblig, Pol, Sequent, check
from auditlog.model import AGENT, DATA, Atom, Const, Owns, PredicateSignature
from auditlog.search import restructure, search

from conftest import actions, policies

REG = register_kind(ActionKindSpec("pay", (("x", AGENT),), ObsRule("actor")), ActionRegistry())
PRINT = PredicateSignature.default("print", (AGENT, DATA))
a, b, d = Const("a", AGENT), Const("b", AGENT), Const("d", DATA)


def test_init_at_depth_one():
    s = Sequent("a", (Pol(Atom(PRINT, (b, d))),), (), Atom(PRINT, (b, d)))
    pt = search(s, 1, REG)
    assert pt is not None and pt.rule == "init"


def test_use_once_sequent_found_at_depth_six(worked):
    s = worked.proof("customer").sequent
    pt = search(s, 6, worked.reg)
    assert pt is not None
    check(pt, s, worked.reg)


def test_creating_a_policy_is_found(worked):
    s = worked.proof("alice").sequent
    pt = search(s, 8, worked.reg)
    assert pt is not None
    assert [str(x) for x in check(pt, s, worked.reg).summary.acts] == ["creates(a, d)"]


def test_nothing_without_ownership():
    assert search(Sequent("a", (), (), Atom(PRINT, (b, d))), 8, REG) is None


def test_ownership_enables_creation():
    s = Sequent("a", (Pol(Owns(a, d)),), (), Atom(PRINT, (b, d)))
    pt = search(s, 1, REG)
    assert pt.rule == "der_pol"
    check(pt, s, REG)


def test_bound_must_be_positive():
    import pytest

    with pytest.raises(ValueError):
        search(Sequent("a", (), (), Atom(PRINT, (b, d))), 0, REG)


def _apply(ops, ctx):
    ctx = list(ctx)
    for rule, args in ops:
        if rule in ("w_l", "w_l_act"):
            del ctx[args[0]]
        elif rule in ("perm_l", "perm_act"):
            k = args[0]
            ctx[k], ctx[k + 1] = ctx[k + 1], ctx[k]
        elif rule == "contr_l":
            ctx.append(ctx[-1])
    return ctx


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(0, 3), max_size=5), st.lists(st.integers(0, 3), max_size=4), st.booleans())
def test_restructure_reaches_the_target(src, dst, linear):
    ops = restructure(tuple(src), tuple(dst), linear)
    have, need = Counter(src), Counter(dst)
    possible = all(have[x] >= (need[x] if linear else 1) for x in need)
    if not possible:
        assert ops is None
        return
    assert _apply(ops, src) == list(dst)
    if linear:
        assert all(r != "contr_l" for r, _ in ops)


def gamma_items():
    return st.one_of(
        policies(allow_vars=False, max_leaves=4).map(Pol),
        actions(allow_vars=False).map(Act),
        actions(allow_vars=False).map(ManyOblig),
        st.sampled_from((Pol(Owns(a, Const("d", DATA))), Pol(Owns(b, Const("e", DATA))))),
    )


@settings(max_examples=300, deadline=None)
@given(
    st.lists(gamma_items(), max_size=2),
    st.lists(actions(allow_vars=False).map(OnceOblig), max_size=1),
    policies(allow_vars=False, max_leaves=4),
    st.sampled_from(("a", "b")),
)
def test_search_is_sound(gamma, delta, goal, me):
    s = Sequent(me, tuple(gamma), tuple(delta), goal)
    pt = search(s, 5, REG)
    if pt is not None:
        check(pt, s, REG)
