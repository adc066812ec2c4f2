import pytest

from auditlog.generate import generate
from auditlog.runner import run
from auditlog.scenario import format_scenario, parse_scenario
from auditlog.syntax import ParseError

from conftest import SAMPLE_FILES, SCENARIOS, scenario


def _same(s1, s2):
    assert s1.agents == s2.agents and s1.data == s2.data
    assert s1.macros == s2.macros and s1.env == s2.env
    assert [(d.name, d.sequent, d.proof, d.witnesses, d.key) for d in s1.proofs] == [
        (d.name, d.sequent, d.proof, d.witnesses, d.key) for d in s2.proofs
    ]
    strip = lambda xs: [type(x)(**{**x.__dict__, "line": 0}) for x in xs]  # noqa: E731
    assert strip(s1.steps) == strip(s2.steps)
    assert strip(s1.audits) == strip(s2.audits)
    assert s1.reg.sorts == s2.reg.sorts


@pytest.mark.parametrize("name", SAMPLE_FILES + ["worked.proof"])
def test_sample_files_round_trip(name):
    sc = scenario(name)
    text = format_scenario(sc)
    again = parse_scenario(text)
    _same(sc, again)
    assert format_scenario(again) == text


@pytest.mark.parametrize("seed", range(10))
def test_generated_scenarios_round_trip(seed):
    sc = generate(seed)
    again = parse_scenario(format_scenario(sc))
    _same(sc, again)
    assert run(sc).trace == run(again).trace


def test_search_proofs_are_found_at_load_time():
    text = (SCENARIOS / "worked.proof").read_text()
    text = text.replace("tree: (obs_act (say (forall_l_data d' (imp_l 1 0 init init))))", "tree: search")
    sc = parse_scenario(text)
    assert sc.proof("bob").proof is not None


@pytest.mark.parametrize(
    "text,where,msg",
    [
        ("[agents]\na\n[bogus]\n", (3, 1), "unknown section"),
        ("[agents]\na a\n", (2, 4), "declared twice"),
        ("[agents]\na\n[data]\nd\n[steps]\nhonest z creates(a, d)\n", (6, 8), "undeclared agent"),
        ("[agents]\na b\n[data]\nd\n[steps]\ndo creates(a, q)\n", (6, 15), "undeclared data"),
        ("[agents]\na\n[data]\nd\n[audits]\nsweep a\n", (6, 1), "expected 'acc' or 'recursive'"),
    ],
)
def test_parse_errors_carry_positions(text, where, msg):
    with pytest.raises(ParseError) as info:
        parse_scenario(text, "x.scn")
    err = info.value
    assert (err.line, err.col) == where
    assert msg in err.message
    assert str(err).startswith(f"x.scn:{where[0]}:{where[1]}: ")


def test_unprovable_search_is_a_parse_error():
    text = (SCENARIOS / "worked.proof").read_text()
    text = text.replace("gamma: rel(d, d'), act comm(a, b, phi)", "gamma: act comm(a, b, phi)")
    text = text.replace("tree: (obs_act (say (forall_l_data d' (imp_l 1 0 init init))))", "tree: search")
    with pytest.raises(ParseError):
        parse_scenario(text, max_depth=4)
