"""Text and JSON renderings of derivations, runs and audits.

Tables are tab-delimited so they can be diffed and cut apart with standard tools.
"""

from __future__ import annotations

import json
import os
from typing import Optional, Union

from .actionlog import dump_log, record_json
from .audit import AuditResult, RecursiveResult
from .kernel import Derivation, OpDerivation
from .model import ActionInstance, Policy
from .prooftext import format_item, format_op
from .runner import AuditOutcome, RunResult
from .scenario import AccDirective, Scenario
from .syntax import format_action, format_policy


def color_enabled() -> bool:
    return os.environ.get("AUDITLOG_COLOR", "").lower() in ("1", "true", "yes", "always", "on")


def paint(text: str, ok: bool, color: Optional[bool] = None) -> str:
    if not (color_enabled() if color is None else color):
        return text
    return f"\x1b[{32 if ok else 31}m{text}\x1b[0m"


def verdict_word(ok: bool, color: Optional[bool] = None) -> str:
    return paint("pass" if ok else "FAIL", ok, color)


def instance_label(a: ActionInstance) -> str:
    return f"{format_action(a.template)}#{a.id}"


# ---------------------------------------------------------------------------
# derivations


def format_sequent(seq) -> str:
    g = ", ".join(format_item(i) for i in seq.gamma) or "·"
    d = ", ".join(format_item(i) for i in seq.delta) or "·"
    return f"{g} ; {d} ⊢{seq.reasoner} {format_policy(seq.goal)}"


def _rule_label(d: Derivation) -> str:
    parts = [d.rule]
    for a in d.args:
        if isinstance(a, Policy):
            parts.append("{" + format_policy(a) + "}")
        elif isinstance(a, OpDerivation):
            parts.append(format_op(a))
        else:
            parts.append(str(a))
    return " ".join(parts)


def render_derivation(d: Derivation) -> str:
    """One line per rule application, premises indented beneath their conclusion."""
    lines: list[str] = []

    def walk(node: Derivation, prefix: str, tail: str) -> None:
        lines.append(f"{prefix}{_rule_label(node)}  {format_sequent(node.sequent)}")
        kids = node.children
        for k, c in enumerate(kids):
            last = k == len(kids) - 1
            walk(c, tail + ("└─ " if last else "├─ "), tail + ("   " if last else "│  "))

    walk(d, "", "")
    return "\n".join(lines)


def summary_json(d: Derivation) -> dict:
    s = d.summary
    return {
        "conds": sorted(format_policy(c) for c in s.conds),
        "acts": [format_action(a) for a in s.acts],
        "obligs": [f"{m}{format_action(a)}" for m, a in s.obligs],
    }


def derivation_json(d: Derivation) -> dict:
    return {
        "rule": _rule_label(d),
        "sequent": format_sequent(d.sequent),
        "premises": [derivation_json(c) for c in d.children],
    }


# ---------------------------------------------------------------------------
# audits


def audit_rows(r: Union[AuditResult, RecursiveResult]) -> list[list[str]]:
    rounds = r.rounds if isinstance(r, RecursiveResult) else (r,)
    rows = []
    for rr in rounds:
        for s in rr.steps:
            rows.append(
                [
                    s.agent,
                    str(s.act.id),
                    format_action(s.act.template),
                    "pass" if s.ok else "FAIL",
                    s.reason or "-",
                    ",".join(map(str, s.newacts)) or "-",
                ]
            )
    return rows


def audit_json(o: AuditOutcome) -> dict:
    r = o.result
    base = {
        "evidence_in": [instance_label(a) for a in o.evidence],
        "verdict": r.verdict,
        "failures": [{"agent": g, "id": i, "reason": why} for g, i, why in r.failures],
        "steps": [
            dict(zip(("agent", "id", "action", "verdict", "reason", "newacts"), row)) for row in audit_rows(r)
        ],
        "evidence_out": [instance_label(a) for a in r.evidence],
        "visited": sorted([g, i] for g, i in r.visited),
    }
    if isinstance(r, RecursiveResult):
        base["kind"] = "recursive"
        base["suspects"] = list(o.directive.suspects)
        base["audited"] = list(r.audited)
        base["audited_agents"] = sorted(r.audited_set)
        base["iterations"] = r.iterations
    else:
        base["kind"] = "acc"
        base["agent"] = o.directive.agent
        base["calls"] = r.calls
    return base


def render_audit(o: AuditOutcome, color: Optional[bool] = None) -> str:
    r = o.result
    d = o.directive
    if isinstance(d, AccDirective):
        head = f"acc {d.agent}"
    else:
        head = f"recursive {', '.join(d.suspects)}"
    out = [f"== audit {head}: {verdict_word(r.verdict, color)}"]
    out.append("agent\tid\taction\tverdict\treason\tnewacts")
    for row in audit_rows(r):
        row[3] = paint(row[3], row[3] == "pass", color)
        out.append("\t".join(row))
    for g, i, why in r.failures:
        out.append(f"failure\t{g}\t{i}\t{why}")
    out.append("evidence\t" + " ".join(instance_label(a) for a in r.evidence))
    if isinstance(r, RecursiveResult):
        out.append("audited\t" + " ".join(r.audited))
        out.append(f"iterations\t{r.iterations}")
    out.append("visited\t" + " ".join(f"{g}:{i}" for g, i in sorted(r.visited)))
    return "\n".join(out)


# ---------------------------------------------------------------------------
# runs


def run_json(sc: Scenario, res: RunResult) -> dict:
    return {
        "scenario": sc.source,
        "trace": [{"id": a.id, "action": format_action(a.template)} for a in res.trace],
        "refusals": [{"step": i, "agent": g, "reason": why} for i, g, why in res.refusals],
        "logs": {g: [record_json(r) for r in res.state.log(g).records] for g in sc.agents},
        "audits": [audit_json(o) for o in res.audits],
    }


def render_run(sc: Scenario, res: RunResult, color: Optional[bool] = None) -> str:
    out = [f"# scenario {sc.source}", "== trace", "id\taction"]
    out += [f"{a.id}\t{format_action(a.template)}" for a in res.trace]
    if res.refusals:
        out.append("== refusals")
        out.append("step\tagent\treason")
        out += [f"{i}\t{g}\t{why}" for i, g, why in res.refusals]
    for g in sc.agents:
        out.append(f"== log {g}")
        out.append(dump_log(res.state.log(g)).rstrip("\n"))
    for o in res.audits:
        out.append(render_audit(o, color))
    return "\n".join(line for line in out if line != "") + "\n"


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"
