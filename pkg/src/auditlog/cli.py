"""Command-line front end.

Exit status: 0 on success or passing audits, 1 on a failed check, run or
audit, 2 on usage or parse errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .actionlog import dump_log
from .audit import EvidenceError
from .kernel import CheckError, check
from .runner import RunResult, StepError, UnknownInstance, run
from .scenario import AccDirective, RecursiveDirective, Scenario, load_scenario
from .syntax import ParseError
from . import report


class UsageError(Exception):
    pass


def _load(path: str, max_depth: int) -> Scenario:
    if not Path(path).is_file():
        raise UsageError(f"{path}: no such file")
    return load_scenario(path, max_depth)


def _emit(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_check_proof(args) -> int:
    sc = _load(args.file, args.max_depth)
    decls = [d for d in sc.proofs if args.name in (None, d.name)]
    if args.name and not decls:
        raise UsageError(f"{args.file}: no proof named {args.name}")
    failed = 0
    results = []
    for d in decls:
        try:
            der = check(d.proof, d.sequent, sc.reg)
            results.append({"name": d.name, "ok": True, "assumptions": report.summary_json(der)})
            if not args.json:
                _emit(f"{report.paint('ok', True)}\t{d.name}")
        except CheckError as exc:
            failed += 1
            results.append({"name": d.name, "ok": False, "error": exc.code, "path": exc.path, "message": str(exc)})
            sys.stderr.write(f"{sc.source}:{d.line}:1: {d.name}: {exc}\n")
            if not args.json:
                _emit(f"{report.paint('FAIL', False)}\t{d.name}\t{exc.code}")
    if args.json:
        _emit(report.to_json({"file": sc.source, "proofs": results}))
    return 1 if failed else 0


def _finish_run(sc: Scenario, res: RunResult, args) -> int:
    if args.json:
        _emit(report.to_json(report.run_json(sc, res)))
    else:
        _emit(report.render_run(sc, res))
    if getattr(args, "out", None):
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for g in sc.agents:
            (out / f"{g}.jsonl").write_text(dump_log(res.state.log(g)), encoding="utf-8")
    if getattr(args, "figure", None):
        from .plotting import render_timeline

        render_timeline(sc, res, args.figure)
    return 0 if all(o.result.verdict for o in res.audits) else 1


def cmd_run(args) -> int:
    sc = _load(args.file, args.max_depth)
    return _finish_run(sc, run(sc), args)


def cmd_audit(args) -> int:
    sc = _load(args.file, args.max_depth)
    for s in args.suspect:
        if s not in sc.agents:
            raise UsageError(f"{args.file}: {s} is not a declared agent")
    extra = tuple(args.evidence or ())
    if args.suspect:
        if args.recursive:
            directives = [RecursiveDirective(tuple(args.suspect), extra)]
        else:
            directives = [AccDirective(s, extra) for s in args.suspect]
    else:
        directives = list(sc.audits)
    sc.audits = tuple(directives)
    return _finish_run(sc, run(sc), args)


def cmd_explain(args) -> int:
    sc = _load(args.file, args.max_depth)
    try:
        d = sc.proof(args.name)
    except KeyError:
        raise UsageError(f"{args.file}: no proof named {args.name}") from None
    try:
        der = check(d.proof, d.sequent, sc.reg)
    except CheckError as exc:
        sys.stderr.write(f"{sc.source}:{d.line}:1: {d.name}: {exc}\n")
        return 1
    if args.json:
        _emit(report.to_json({"name": d.name, "derivation": report.derivation_json(der),
                              "assumptions": report.summary_json(der)}))
    else:
        _emit(report.render_derivation(der))
    return 0


def cmd_generate(args) -> int:
    from .generate import generate
    from .scenario import format_scenario

    text = format_scenario(generate(args.seed, args.max_depth))
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        _emit(text)
    return 0


def _ids(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated action ids, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="auditlog", description="Policy proofs, agent logs and accountability audits.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, figure=False):
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.add_argument("--max-depth", type=int, default=8, metavar="N", help="bound for 'tree: search' proofs")
        if figure:
            p.add_argument("--figure", metavar="PATH", help="also render a timeline figure (png, svg, pdf)")
            p.add_argument("--out", metavar="DIR", help="write one JSONL log per agent into DIR")

    p = sub.add_parser("check-proof", help="check every proof in a file")
    p.add_argument("file")
    p.add_argument("--name", help="check only this proof")
    common(p)
    p.set_defaults(func=cmd_check_proof)

    p = sub.add_parser("run", help="replay a scenario and its audit directives")
    p.add_argument("file")
    common(p, figure=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("audit", help="replay a scenario and audit the given suspects")
    p.add_argument("file")
    p.add_argument("--suspect", action="append", default=[], metavar="AGENT")
    p.add_argument("--evidence", type=_ids, metavar="IDS", help="extra action ids, e.g. 1,4")
    p.add_argument("--recursive", action="store_true", help="recursive audit starting from the suspects")
    common(p, figure=True)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("explain", help="print the checked derivation of a named proof")
    p.add_argument("file")
    p.add_argument("name")
    common(p)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("generate", help="write a random scenario of honest agents")
    p.add_argument("--seed", type=int, default=0, metavar="N")
    p.add_argument("--max-depth", type=int, default=8, metavar="N")
    p.add_argument("-o", "--output", metavar="FILE")
    p.set_defaults(func=cmd_generate)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        sys.stderr.write(f"{exc}\n")
        return 2
    except UsageError as exc:
        sys.stderr.write(f"auditlog: {exc}\n")
        return 2
    except StepError as exc:
        src = getattr(args, "file", "<input>")
        sys.stderr.write(f"{src}:{exc.line}:1: step {exc.index}: {exc.cause}\n")
        return 1
    except (UnknownInstance, EvidenceError) as exc:
        sys.stderr.write(f"auditlog: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
