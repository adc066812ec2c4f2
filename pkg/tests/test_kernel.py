import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from auditlog.kernel import (
    ARITY,
    BadInstantiation,
    CheckError,
    GoalMismatch,
    IllFormedSequent,
    LinearContraction,
    LinearityError,
    NoConclusion,
    NonFreshEigenvariable,
    OnceOblig,
    OpDerivation,
    OpUnresolvedData,
    OwnerMismatch,
    Pol,
    ProofTerm,
    RefineContextNotEmpty,
    RuleArityError,
    Sequent,
    SplitMismatch,
    UnknownRule,
    check,
    check_op,
    extract_assumptions,
    find_op,
)
from auditlog.model import ONCE, Const, Owns, Var, AGENT
from auditlog.prooftext import format_proof, parse_proof
from auditlog.scenario import parse_scenario
from auditlog.syntax import ParseError

from conftest import policies, scenario
from proofmutations import mutations

HEADER = """
[agents]
a b c
[data]
d d' beer
[predicates]
rel(data, data)
print(agent, data)
drink(agent, data)
age21(agent)
teatime
[actions]
action paid(x:agent, m:money) { obs = actor; }
action drunk(x:agent, y:data) { obs = actor; po(x) = drink(x, y); }
[policies]
phi = forall x:data . rel(d, x) -> print(b, d)
menu = forall x:agent . ![paid(x, 5$)] -> drink(x, beer)
"""


def world(proofs: str):
    return parse_scenario(HEADER + "[proofs]\n" + proofs)


def decl(body: str, name="p"):
    sc = world(f"proof {name} {{ {body} }}")
    return sc, sc.proof(name)


def run_check(body: str):
    sc, d = decl(body)
    return check(d.proof, d.sequent, sc.reg)


def fails_with(cls, body: str):
    with pytest.raises(cls) as err:
        run_check(body)
    return err.value


# -- golden proofs ----------------------------------------------------------


def test_creating_a_policy_checks(worked):
    d = worked.proof("alice")
    der = check(d.proof, d.sequent, worked.reg)
    assert der.rule == "obs_act"
    s = der.summary
    assert s.conds == frozenset() and s.obligs == ()
    assert [str(a) for a in s.acts] == ["creates(a, d)"]


def test_consuming_a_policy_checks(worked):
    d = worked.proof("bob")
    s = check(d.proof, d.sequent, worked.reg).summary
    assert sorted(map(str, s.conds)) == ["rel(d, d')"]
    assert [str(a) for a in s.acts] == ["comm(a, b, forall x:data . rel(d, x) -> print(b, d))"]
    assert s.obligs == ()


def test_use_once_obligation_checks(worked):
    d = worked.proof("customer")
    s = extract_assumptions(d.proof, d.sequent, worked.reg)
    assert s.conds == frozenset()
    assert len(s.acts) == 1 and s.acts[0].kind == "comm"
    assert [(m, str(a)) for m, a in s.obligs] == [(ONCE, "paid(b, 5$)")]


def test_use_once_obligation_needs_the_linear_item(worked):
    d = worked.proof("customer")
    bare = Sequent(d.sequent.reasoner, d.sequent.gamma, (), d.sequent.goal)
    with pytest.raises(LinearityError):
        check(d.proof, bare, worked.reg)


def test_init_axiom():
    der = run_check("reasoner: a gamma: print(b, d) goal: print(b, d) tree: init")
    assert der.children == ()
    assert [str(c) for c in der.summary.conds] == ["print(b, d)"]


@pytest.mark.parametrize("name", ["alice", "bob", "customer"])
def test_every_single_rule_mutation_is_rejected(worked, name):
    d = worked.proof(name)
    muts = list(mutations(d.proof, d.sequent))
    assert len(muts) >= 20
    accepted = []
    for label, m in muts:
        try:
            check(m, d.sequent, worked.reg)
            accepted.append(label)
        except CheckError:
            pass
    assert accepted == []


@pytest.mark.parametrize("file", ["bar.scn", "chain.scn", "window.scn"])
def test_sample_proofs_check_and_resist_mutation(file):
    sc = scenario(file)
    for d in sc.proofs:
        check(d.proof, d.sequent, sc.reg)
        for label, m in mutations(d.proof, d.sequent):
            with pytest.raises(CheckError):
                check(m, d.sequent, sc.reg)


# -- side conditions and error classes ---------------------------------------


def test_refine_premise_must_use_only_the_refined_policy():
    # the premise would need print(b, d) from the surrounding context
    err = fails_with(
        RefineContextNotEmpty,
        "reasoner: a gamma: print(b, d'), says(a, rel(d, d), b) goal: says(a, rel(d, d) -> print(b, d'), b) "
        "tree: (refine (imp_r (w_l (w_l init))))",
    )
    assert err.path == "root"


def test_refine_with_an_honest_refinement_checks():
    run_check(
        "reasoner: a gamma: says(a, print(b, d), b) goal: says(a, rel(d, d) -> print(b, d), b) "
        "tree: (refine (imp_r (w_l init)))"
    )


def test_forall_r_eigenvariable_must_be_fresh():
    body = "reasoner: b gamma: print(b, d) goal: forall x:data . rel(d, x) -> print(b, d) tree: (forall_r_data {} (imp_r (w_l init)))"
    run_check(body.format("y"))
    for name in ("d", "b", "x"):
        fails_with(NonFreshEigenvariable, body.format(name))


def test_op_forall_eigenvariable_must_be_fresh():
    sc, d = decl(
        "reasoner: a gamma: owns(a, beer) goal: says(a, menu, b) "
        "tree: (der_pol (op_says (op_forall y (op_oblig_imp (op_atom 0)))))"
    )
    check(d.proof, d.sequent, sc.reg)
    bad = parse_proof("(der_pol (op_says (op_forall b (op_oblig_imp (op_atom 0)))))", sc.vocab)
    with pytest.raises(NonFreshEigenvariable):
        check(bad, d.sequent, sc.reg)


def test_linear_context_admits_no_contraction(worked):
    d = worked.proof("customer")
    twice = parse_proof("(obs_act (say (forall_l_agent b (bang_imp_l (bang_imp_l init)))))", worked.vocab)
    with pytest.raises(LinearContraction):
        check(twice, d.sequent, worked.reg)


def test_linear_weakening_and_exchange():
    run_check("reasoner: b gamma: print(b, d) delta: paid(b, 5$) goal: print(b, d) tree: (w_l_act init)")
    run_check(
        "reasoner: b gamma: ![paid(a, 5$)] -> print(b, d) delta: paid(a, 5$), paid(b, 5$) goal: print(b, d) "
        "tree: (perm_act 0 (w_l_act 0 (bang_imp_l init)))"
    )


def test_multiplicative_splits_are_checked():
    err = fails_with(
        SplitMismatch,
        "reasoner: b gamma: rel(d, d') goal: rel(d, d') and rel(d, d') tree: (and_r 3 0 init init)",
    )
    assert err.rule == "and_r"
    # and_r gives each side its own part; contraction supplies both
    run_check("reasoner: b gamma: rel(d, d') goal: rel(d, d') and rel(d, d') tree: (contr_l (and_r 1 0 init init))")
    fails_with(GoalMismatch, "reasoner: b gamma: rel(d, d') goal: rel(d, d') and rel(d, d') tree: (and_r 1 0 init init)")


def test_obs_act_needs_a_conclusion():
    fails_with(NoConclusion, "reasoner: c gamma: act comm(a, b, print(b, d)) goal: print(b, d) tree: (obs_act init)")


def test_say_requires_the_reasoner_as_target():
    fails_with(GoalMismatch, "reasoner: c gamma: says(a, print(b, d), b) goal: print(b, d) tree: (say init)")


def test_der_pol_requires_ownership_by_the_prover():
    fails_with(OwnerMismatch, "reasoner: a gamma: owns(c, d) goal: print(b, d) tree: (der_pol (op_atom 0))")
    fails_with(OpUnresolvedData, "reasoner: a goal: print(b, d) tree: (der_pol (op_atom 0))")
    # a predicate affecting no data cannot be created by anyone
    fails_with(OpUnresolvedData, "reasoner: a gamma: owns(a, d) goal: teatime tree: (der_pol (op_atom))")


def test_check_op_examples(worked):
    a, b, d = Const("a", AGENT), Const("b", AGENT), Const("d", "data")
    prt = worked.vocab.predicates["print"]
    from auditlog.model import Atom, Says

    target = Says(a, Atom(prt, (b, d)), b)
    check_op(OpDerivation("op_says", (), (OpDerivation("op_atom", (0,)),)), [Pol(Owns(a, d))], target, "a")
    with pytest.raises(OpUnresolvedData):
        check_op(OpDerivation("op_atom", (0,)), [], Atom(prt, (b, d)), "a")
    with pytest.raises(OwnerMismatch):
        check_op(OpDerivation("op_atom", (0,)), [Pol(Owns(Const("c", AGENT), d))], Atom(prt, (b, d)), "a")
    assert find_op([Pol(Owns(a, d))], target, "a") is not None
    assert find_op([Pol(Owns(Const("c", AGENT), d))], target, "a") is None


def test_structural_errors():
    sc, d = decl("reasoner: a gamma: print(b, d) goal: print(b, d) tree: init")
    with pytest.raises(UnknownRule):
        check(ProofTerm("teleport", (), (d.proof,)), d.sequent, sc.reg)
    with pytest.raises(ParseError, match="unknown rule"):
        world("proof q { reasoner: a goal: print(b, d) tree: (teleport init) }")
    fails_with(RuleArityError, "reasoner: a gamma: print(b, d) goal: print(b, d) tree: (imp_r init init)")
    fails_with(BadInstantiation, "reasoner: a gamma: print(b, d) goal: print(b, d) tree: (perm_l init)")
    fails_with(GoalMismatch, "reasoner: a gamma: print(b, d) goal: print(b, d') tree: init")


def test_ill_formed_sequents_are_rejected(worked):
    x = Var("x", "data")
    prt = worked.vocab.predicates["print"]
    from auditlog.model import Atom

    open_goal = Sequent("a", (), (), Atom(prt, (Const("b", AGENT), x)))
    with pytest.raises(IllFormedSequent):
        check(ProofTerm("init"), open_goal, worked.reg)
    wrong_side = Sequent("a", (OnceOblig(worked.proof("customer").sequent.delta[0].action),), (), open_goal.goal)
    with pytest.raises(IllFormedSequent):
        check(ProofTerm("init"), wrong_side, worked.reg)


def test_error_paths_locate_the_failing_node(worked):
    d = worked.proof("bob")
    bad = parse_proof("(obs_act (say (forall_l_data d' (imp_l 1 0 init (w_l init)))))", worked.vocab)
    with pytest.raises(CheckError) as err:
        check(bad, d.sequent, worked.reg)
    assert err.value.path == "root.0.0.0.1.0"
    assert "root.0.0.0.1.0" in str(err.value)


def test_unsuffixed_forall_rules_take_the_sort_from_the_formula(worked):
    d = worked.proof("bob")
    plain = parse_proof("(obs_act (say (forall_l d' (imp_l 1 0 init init))))", worked.vocab)
    check(plain, d.sequent, worked.reg)


def test_proof_text_round_trip(worked):
    for d in worked.proofs:
        assert parse_proof(format_proof(d.proof), worked.vocab) == d.proof


def test_every_rule_is_named():
    assert set(ARITY) == {
        "init", "cut", "and_l1", "and_l2", "and_r", "imp_l", "imp_r", "bang_imp_l", "bang_imp_r",
        "quest_imp_l", "quest_imp_r", "forall_l_agent", "forall_l_data", "forall_r_agent", "forall_r_data",
        "w_l", "w_l_act", "contr_l", "perm_l", "perm_act", "say", "obs_act", "refine", "der_pol",
    }  # fmt: skip


# -- properties -------------------------------------------------------------

GOLDEN = [("worked.proof", n) for n in ("alice", "bob", "customer")] + [("bar.scn", "offer"), ("bar.scn", "order")]


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(GOLDEN), policies(allow_vars=False, max_leaves=4), st.data())
def test_weakening_is_admissible(which, extra, data):
    sc = scenario(which[0])
    d = sc.proof(which[1])
    s = d.sequent
    i = data.draw(st.integers(0, len(s.gamma)))
    wider = Sequent(s.reasoner, s.gamma[:i] + (Pol(extra),) + s.gamma[i:], s.delta, s.goal)
    before = check(d.proof, s, sc.reg).summary
    after = check(ProofTerm("w_l", (i,), (d.proof,)), wider, sc.reg).summary
    assert before == after


@settings(max_examples=150, deadline=None)
@given(policies(allow_vars=False, max_leaves=5), st.sampled_from(("a", "b", "c")), st.sampled_from(("a", "b", "c")))
def test_say_reduces_to_the_body(phi, me, speaker):
    from auditlog.search import search
    from auditlog.model import Says
    from auditlog.actions import ActionRegistry

    reg = ActionRegistry()
    reduced = Sequent(me, (Pol(phi),), (), phi)
    inner = search(reduced, 3, reg)
    assert inner is not None
    said = Sequent(me, (Pol(Says(Const(speaker, AGENT), phi, Const(me, AGENT))),), (), phi)
    check(ProofTerm("say", (), (inner,)), said, reg)


def test_eigenvariable_freshness_for_every_sequent_name(worked):
    d = worked.proof("alice")
    text = format_proof(d.proof)
    for name in sorted(d.sequent.names()):
        bad = parse_proof(text.replace("x'", name), worked.vocab)
        with pytest.raises(CheckError):
            check(bad, d.sequent, worked.reg)
