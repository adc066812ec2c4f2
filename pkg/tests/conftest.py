import sys
from pathlib import Path

import pytest
from hypothesis import strategies as st

from auditlog.actions import ActionRegistry
from auditlog.model import (
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
    PredicateSignature,
    Requirement,
    Says,
    Var,
)
from auditlog.scenario import load_scenario
from auditlog.syntax import Vocabulary

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"
SAMPLE_FILES = sorted(p.name for p in SCENARIOS.glob("*.scn"))


def scenario(name: str):
    return load_scenario(SCENARIOS / name)


@pytest.fixture
def worked():
    return scenario("worked.proof")


@pytest.fixture
def bar():
    return scenario("bar.scn")


@pytest.fixture
def chain():
    return scenario("chain.scn")


@pytest.fixture
def window():
    return scenario("window.scn")


# -- a small fixed vocabulary for generated policies -----------------------

P = PredicateSignature.default("p", (AGENT,))
Q = PredicateSignature.default("q", (DATA,))
R = PredicateSignature.default("r", (AGENT, DATA))
T = PredicateSignature.default("t", ())
SIGS = (P, Q, R, T)

CONSTS = {AGENT: ("a", "b"), DATA: ("d", "e")}
VARS = ("x", "y", "z")


def vocab() -> Vocabulary:
    v = Vocabulary()
    for s in SIGS:
        v.declare(s)
    v.action_sorts = dict(ActionRegistry().sorts)
    v.action_sorts["pay"] = (AGENT,)
    return v


def terms(sort: str, allow_vars: bool = True):
    const = st.sampled_from(CONSTS[sort]).map(lambda n: Const(n, sort))
    if not allow_vars:
        return const
    return st.one_of(const, st.sampled_from(VARS).map(lambda n: Var(n, sort)))


def atoms(allow_vars: bool = True):
    ag, da = terms(AGENT, allow_vars), terms(DATA, allow_vars)
    return st.one_of(
        ag.map(lambda t: Atom(P, (t,))),
        da.map(lambda t: Atom(Q, (t,))),
        st.tuples(ag, da).map(lambda ts: Atom(R, ts)),
        st.just(Atom(T, ())),
        st.tuples(ag, da).map(lambda ts: Owns(*ts)),
    )


def actions(allow_vars: bool = True):
    ag, da = terms(AGENT, allow_vars), terms(DATA, allow_vars)
    return st.one_of(
        ag.map(lambda t: ActionTemplate("pay", (t,))),
        st.tuples(ag, da).map(lambda ts: ActionTemplate("creates", ts)),
    )


def policies(allow_vars: bool = True, max_leaves: int = 8, binders=VARS):
    ag = terms(AGENT, allow_vars)
    sorts = st.sampled_from((AGENT, DATA))

    def extend(children):
        return st.one_of(
            st.tuples(children, children).map(lambda c: And(*c)),
            st.tuples(children, children).map(lambda c: Implies(*c)),
            st.tuples(st.sampled_from((ONCE, MANY)), actions(allow_vars), children).map(
                lambda c: Oblige(Requirement(c[0], c[1]), c[2])
            ),
            st.tuples(ag, children, ag).map(lambda c: Says(*c)),
            st.tuples(st.sampled_from(binders), sorts, children).map(lambda c: Forall(Var(c[0], c[1]), c[2])),
        )

    return st.recursive(atoms(allow_vars), extend, max_leaves=max_leaves)


def close(p):
    """Universally close ``p`` over its free variables (in a fixed order)."""
    from auditlog.model import free_vars

    for v in sorted(free_vars(p), key=lambda v: (v.name, v.sort)):
        p = Forall(v, p)
    return p


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for ln in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(ln)
