import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from auditlog.actions import (
    ALL,
    ANY_AGENT,
    ActionError,
    ActionKindSpec,
    ActionRegistry,
    ObsRule,
    UnknownKind,
    concl,
    obs,
    po,
    register_kind,
)
from auditlog.model import (
    AGENT,
    DATA,
    MONEY,
    POLICY,
    ActionInstance,
    ActionTemplate,
    Atom,
    Forall,
    Hole,
    Owns,
    PredicateSignature,
    Says,
    Var,
    agent,
    alpha_eq,
    datum,
    is_ground,
    money,
)

from conftest import Q, policies

REG = ActionRegistry()
a, b, c = agent("a"), agent("b"), agent("c")
d = datum("d")
PHI = Forall(Var("x", DATA), Atom(Q, (Var("x", DATA),)))


def creates(who=a, what=d, i=0):
    return ActionInstance(ActionTemplate("creates", (who, what)), i)


def comm(src=a, dst=b, body=PHI, i=1):
    return ActionInstance(ActionTemplate("comm", (src, dst), body), i)


# Each row: (description, computed, expected). Expected values are read off
# the defining equations for the two built-in kinds.
EQUATIONS = [
    ("obs creates", lambda: obs(creates(), REG), frozenset({"a"})),
    ("obs comm", lambda: obs(comm(), REG), frozenset({"a", "b"})),
    ("po creates by creator", lambda: po(creates(), "a", REG), None),
    ("po comm by non-sender", lambda: po(comm(), "c", REG), None),
    ("po comm by sender", lambda: po(comm(), "a", REG), Says(a, PHI, b)),
    ("concl creates by creator", lambda: concl(creates().template, "a", REG), Owns(a, d)),
    ("concl comm by receiver", lambda: concl(comm().template, "b", REG), Says(a, PHI, b)),
    ("concl creates by other", lambda: concl(creates().template, "b", REG), None),
    ("concl comm by non-receiver", lambda: concl(comm().template, "c", REG), None),
]


@pytest.mark.parametrize("name,computed,expected", EQUATIONS, ids=[e[0] for e in EQUATIONS])
def test_builtin_equations(name, computed, expected):
    assert computed() == expected


def test_builtin_equations_for_other_agent_choices():
    # the side conditions range over every other agent, including the endpoints
    assert po(comm(), "b", REG) is None
    assert concl(comm().template, "a", REG) is None
    for g in ("b", "c", "z"):
        assert concl(creates().template, g, REG) is None


def test_ids_play_no_role():
    assert po(comm(i=1), "a", REG) == po(comm(i=99), "a", REG)
    assert obs(creates(i=0), REG) == obs(creates(i=7), REG)


def test_example_kinds_register():
    drink = PredicateSignature.default("drink", (AGENT, DATA))
    x, y = Var("x", AGENT), Var("y", DATA)
    reg = register_kind(
        ActionKindSpec("drunk", (("x", AGENT), ("y", DATA)), ObsRule("actor"), "x", Atom(drink, (x, y))), REG
    )
    reg = register_kind(ActionKindSpec("paid", (("x", AGENT), ("m", MONEY)), ObsRule("actor")), reg)
    drunk = ActionTemplate("drunk", (a, datum("beer")))
    paid = ActionTemplate("paid", (a, money("10$")))
    assert po(drunk, "a", reg) == Atom(drink, (a, datum("beer")))
    assert concl(drunk, "a", reg) is None
    assert po(paid, "a", reg) is None and concl(paid, "a", reg) is None
    # the original registry is untouched
    assert "drunk" not in REG and "drunk" in reg


def test_builtins_cannot_be_redefined():
    with pytest.raises(ActionError):
        register_kind(ActionKindSpec("creates", (("x", AGENT), ("y", DATA))), REG)
    with pytest.raises(ActionError):
        register_kind(ActionKindSpec("comm", (("x", AGENT),)), REG)


def test_duplicate_and_malformed_kinds():
    k = ActionKindSpec("ping", (("x", AGENT),))
    reg = register_kind(k, REG)
    with pytest.raises(ActionError, match="already"):
        register_kind(k, reg)
    bad = ActionKindSpec("use", (("x", AGENT),), ObsRule(), "x", Atom(Q, (Var("y", DATA),)))
    with pytest.raises(ActionError, match="undeclared placeholder"):
        register_kind(bad, REG)
    with pytest.raises(ActionError):
        ObsRule("router")


def test_unknown_kind():
    with pytest.raises(UnknownKind):
        obs(ActionTemplate("teleport", (a,)), REG)


def bcast_registry():
    y = Var("y", AGENT)
    psi = Forall(y, Says(Var("a", AGENT), Hole("phi"), y))
    spec = ActionKindSpec("bcast", (("a", AGENT), ("phi", POLICY)), ObsRule(ALL), "a", psi, ANY_AGENT, psi)
    return register_kind(spec, REG)


ROSTER = ("a", "b", "c", "e", "f")


@pytest.mark.parametrize("x", ROSTER)
def test_broadcast_for_five_agents(x):
    reg = bcast_registry()
    act = ActionInstance(ActionTemplate("bcast", (a,), PHI), 3)
    psi = Forall(Var("y", AGENT), Says(a, PHI, Var("y", AGENT)))
    assert obs(act, reg, ROSTER) == frozenset(ROSTER)
    assert alpha_eq(concl(act.template, x, reg), psi)
    if x == "a":
        assert alpha_eq(po(act, x, reg), psi)
    else:
        assert po(act, x, reg) is None


@settings(max_examples=200, deadline=None)
@given(policies(allow_vars=False), st.sampled_from(ROSTER), st.sampled_from(ROSTER))
def test_po_and_concl_are_ground_on_ground_instances(body, sender, g):
    reg = bcast_registry()
    acts = [
        ActionTemplate("comm", (agent(sender), b), body),
        ActionTemplate("bcast", (agent(sender),), body),
        ActionTemplate("creates", (agent(sender), d)),
    ]
    for act in acts:
        for out in (po(act, g, reg), concl(act, g, reg)):
            assert out is None or is_ground(out)


@settings(max_examples=100, deadline=None)
@given(policies(allow_vars=False), st.sampled_from(ROSTER))
def test_broadcast_payload_is_not_captured(body, g):
    # the payload may itself bind y; the template's y must stay distinct
    reg = bcast_registry()
    out = concl(ActionTemplate("bcast", (a,), body), g, reg)
    assert isinstance(out, Forall) and alpha_eq(out.body.body, body)
