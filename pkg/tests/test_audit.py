import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from auditlog.actionlog import LoggedAction, project_trace
from auditlog.audit import (
    INVALID,
    MISSING,
    UNFULFILLED,
    UNWITNESSED,
    AuditContext,
    EvidenceError,
    ProofStore,
    _multiset_injects,
    aa,
    acc,
    is_justification,
    justify,
    laa,
    merge_evidence,
    recursive_audit,
    subtrace,
)
from auditlog.model import AGENT, ActionInstance, ActionTemplate, Const
from auditlog.runner import context, run
from auditlog.scenario import parse_scenario

from conftest import SAMPLE_FILES, SCENARIOS, scenario

BAR = (SCENARIOS / "bar.scn").read_text()
HEAD = BAR[: BAR.index("[steps]")]

SETUP = """
do creates(a, beer) log a
do comm(a, b, menu) log a
"""


def bar_variant(steps, proofs=lambda t: t):
    sc = parse_scenario(proofs(HEAD) + "[steps]\n" + SETUP + steps)
    res = run(sc, audits=False)
    return sc, res, context(sc, res.state, res.store)


def verdict_for(agent, sc, res, ctx, extra=()):
    E = merge_evidence(project_trace(res.state.log(agent)), [res.trace[i] for i in extra])
    return acc(agent, E, ctx)


def test_honest_bar_passes(bar):
    res = run(bar)
    assert [o.result.verdict for o in res.audits] == [True, True, True]
    assert [a.template.kind for a in res.trace] == ["creates", "comm", "paid", "drunk"]


def test_paid_and_logged_passes():
    sc, res, ctx = bar_variant(
        "do paid(b, 5$) log b\ndo drunk(b, beer) log b conds age21(b) obligs !paid(b, 5$) @2\n"
    )
    r = verdict_for("b", sc, res, ctx)
    assert r.verdict and r.failures == ()
    # the comm b relied on joins the evidence
    assert [a.id for a in r.newacts] == [1]


def test_unpaid_expired_obligation():
    sc, res, ctx = bar_variant("do drunk(b, beer) log b conds age21(b) obligs !paid(b, 5$) within 0\n")
    r = verdict_for("b", sc, res, ctx)
    assert r.failures == (("b", 2, UNFULFILLED),)


def test_unpaid_obligation_not_yet_due():
    sc, res, ctx = bar_variant("do drunk(b, beer) log b conds age21(b) obligs !paid(b, 5$) within 10\n")
    assert verdict_for("b", sc, res, ctx).verdict


def test_condition_not_logged_is_invalid():
    sc, res, ctx = bar_variant("do paid(b, 5$) log b\ndo drunk(b, beer) log b obligs !paid(b, 5$) @2\n")
    assert verdict_for("b", sc, res, ctx).failures == (("b", 3, INVALID),)


def test_unlogged_action_fails_when_presented_as_evidence():
    sc, res, ctx = bar_variant("do drunk(b, beer)\n")
    assert verdict_for("b", sc, res, ctx).verdict  # nothing logged, nothing to audit
    assert verdict_for("b", sc, res, ctx, extra=[2]).failures == (("b", 2, INVALID),)


def test_missing_proof():
    sc, res, ctx = bar_variant("do paid(b, 5$) log b\ndo drunk(b, beer) log b conds age21(b) obligs !paid(b, 5$) @2\n")
    empty = AuditContext(ctx.reg, ctx.trace, ctx.logs, ProofStore(), ctx.agents)
    r = verdict_for("b", sc, res, empty)
    assert r.failures == (("b", 3, MISSING),)


def test_wrong_witness_id():
    sc, res, ctx = bar_variant(
        "do paid(b, 5$) log b\ndo drunk(b, beer) log b conds age21(b) obligs !paid(b, 5$) @2\n",
        proofs=lambda t: t.replace("act comm(a, b, menu) @1", "act comm(a, b, menu) @0"),
    )
    assert verdict_for("b", sc, res, ctx).failures == (("b", 3, UNWITNESSED),)


def test_action_without_obligation_passes_with_no_new_evidence(bar):
    res = run(bar, audits=False)
    ctx = context(bar, res.state, res.store)
    out = aa("a", res.trace[0], ctx)
    assert out.ok and out.newacts == ()
    out = aa("b", res.trace[2], ctx)  # paid has no proof obligation
    assert out.ok and out.newacts == ()


def test_is_justification_checks_the_goal(bar):
    res = run(bar, audits=False)
    ctx = context(bar, res.state, res.store)
    drunk = res.state.log("b").records[-1].lac
    j = justify(res.store.lookup("b", drunk.act), bar.reg)
    assert is_justification(j, "b", drunk, bar.reg)
    assert not is_justification(j, "a", drunk, bar.reg)
    # justifying a different action with the same proof
    other = LoggedAction(ActionInstance(ActionTemplate("drunk", (Const("a", AGENT), drunk.act.template.args[1])), 3),
                         drunk.conds, drunk.obligs)
    assert not is_justification(j, "b", other, bar.reg)
    # dropping the logged !paid leaves the consumed obligation unmatched
    assert not is_justification(j, "b", LoggedAction(drunk.act, drunk.conds), bar.reg)
    assert laa("b", drunk, ctx).ok


def test_empty_evidence_passes(bar):
    res = run(bar, audits=False)
    r = acc("b", [], context(bar, res.state, res.store))
    assert r.verdict and r.calls == 0 and r.evidence == ()


def test_evidence_must_come_from_the_trace(bar):
    res = run(bar, audits=False)
    fake = ActionInstance(ActionTemplate("paid", (Const("a", AGENT), Const("9$", "money"))), 2)
    with pytest.raises(EvidenceError):
        acc("b", [fake], context(bar, res.state, res.store))


def test_merge_and_subtrace_examples():
    i = [ActionInstance(ActionTemplate("paid", (Const(n, AGENT), Const("1$", "money"))), k) for k, n in enumerate("abcd")]
    assert merge_evidence([i[3], i[1]], [i[2], i[1]]) == [i[1], i[2], i[3]]
    assert merge_evidence([], []) == []
    assert subtrace([i[0], i[2]], i)
    assert not subtrace([i[2], i[0]], i)
    assert subtrace([], [])


def test_store_is_frozen(bar):
    res = run(bar)
    with pytest.raises(TypeError):
        res.store._entries[("b", 99)] = None
    assert len(res.store) == len(build_keys(bar))


def build_keys(sc):
    return [d for d in sc.proofs if d.key is not None]


def test_recursive_audit_without_suspects(bar):
    res = run(bar, audits=False)
    r = recursive_audit([], list(res.trace), context(bar, res.state, res.store))
    assert r.verdict and r.audited == () and r.iterations == 0


def test_recursive_audit_pulls_in_the_bartender(bar):
    res = run(bar)
    r = res.audits[2].result
    assert r.verdict and r.audited_set == {"a", "b"}


@pytest.mark.parametrize("name", SAMPLE_FILES)
def test_acc_calls_bounded_by_trace_length(name):
    sc = scenario(name)
    res = run(sc)
    ctx = context(sc, res.state, res.store)
    for g in sc.agents:
        r = acc(g, list(res.trace), ctx)
        assert r.calls <= len(res.trace)
        rr = recursive_audit(sc.agents, list(res.trace), ctx)
        assert rr.iterations <= len(sc.agents) * len(res.trace) + 1


# -- multiset injection against brute force -------------------------------

tmpls = st.sampled_from(
    [ActionTemplate("paid", (Const(n, AGENT), Const("1$", "money"))) for n in ("a", "b", "c")]
)


def injects_oracle(needed, available):
    for f in itertools.permutations(range(len(available)), len(needed)):
        if all(needed[k] == available[f[k]] for k in range(len(needed))):
            return True
    return False


@settings(max_examples=300, deadline=None)
@given(st.lists(tmpls, max_size=4), st.lists(tmpls, max_size=5))
def test_multiset_injection_matches_brute_force(needed, available):
    assert _multiset_injects(needed, available) == injects_oracle(needed, available)
