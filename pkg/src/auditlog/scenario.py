"""Scenario files: a sectioned text format for scripted executions.

Sections (each optional, in any order)::

    [agents]      a b c
    [data]        d beer
    [predicates]  print(agent, data) affects 2      # 1-based data positions; 'affects none'
    [actions]     action drunk(x:agent, y:data) { obs = actor; po(x) = drink(x, y); }
    [policies]    phi = forall x:data . rel(d, x) -> print(b, d)
    [env]         age21(b) from 0 to 100
    [proofs]      proof NAME [on ACTION | on @ID] { reasoner: A gamma: ... delta: ... goal: ... tree: ... }
    [steps]       do ACTION log A conds ... obligs !ACTION @ID, ?ACTION within N
                  honest A ACTION
    [audits]      acc A [with ID, ...]
                  recursive A, B [with ID, ...]

``#`` starts a comment. Proof trees are S-expressions or the word ``search``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .actionlog import EnvFact
from .actions import ALL, ACTOR, ENDPOINTS, LISTED, ActionError, ActionKindSpec, ActionRegistry, ObsRule, register_kind
from .kernel import Act, ProofTerm, Sequent
from .model import canon_action, POLICY, TERM_SORTS, ActionTemplate, Atom, Policy, PredicateSignature, SortError
from .prooftext import format_item, format_proof, read_delta_item, read_gamma_item, read_items, read_proof
from .syntax import KEYWORDS, ParseError, Parser, Vocabulary, format_action, format_policy, tokenize

SECTIONS = ("agents", "data", "predicates", "actions", "policies", "env", "proofs", "steps", "audits")
_HEADER = re.compile(r"^\[(\w+)\]\s*$")
FOREVER = 10**9


@dataclass(frozen=True)
class ObligSpec:
    mode: str
    action: ActionTemplate
    ref_id: Optional[int] = None
    within: Optional[int] = None
    by: Optional[int] = None

    def __str__(self) -> str:
        s = f"{self.mode}{format_action(self.action)}"
        if self.ref_id is not None:
            s += f" @{self.ref_id}"
        if self.within is not None:
            s += f" within {self.within}"
        if self.by is not None:
            s += f" by {self.by}"
        return s


@dataclass(frozen=True)
class LogChoice:
    agent: str
    conds: tuple[Atom, ...] = ()
    obligs: tuple[ObligSpec, ...] = ()


@dataclass(frozen=True)
class DoStep:
    action: ActionTemplate
    logs: tuple[LogChoice, ...] = ()
    line: int = 0


@dataclass(frozen=True)
class HonestStep:
    agent: str
    action: ActionTemplate
    line: int = 0


Step = Union[DoStep, HonestStep]


@dataclass(frozen=True)
class ProofDecl:
    name: str
    sequent: Sequent
    proof: Optional[ProofTerm]  # None: found by search at load time
    witnesses: tuple[tuple[ActionTemplate, int], ...] = ()
    key: Union[None, int, ActionTemplate] = None
    line: int = 0


@dataclass(frozen=True)
class AccDirective:
    agent: str
    extra: tuple[int, ...] = ()
    line: int = 0


@dataclass(frozen=True)
class RecursiveDirective:
    suspects: tuple[str, ...]
    extra: tuple[int, ...] = ()
    line: int = 0


@dataclass
class Scenario:
    agents: tuple[str, ...] = ()
    data: tuple[str, ...] = ()
    vocab: Vocabulary = field(default_factory=Vocabulary)
    reg: ActionRegistry = field(default_factory=ActionRegistry)
    macros: dict[str, Policy] = field(default_factory=dict)
    env: tuple[EnvFact, ...] = ()
    proofs: tuple[ProofDecl, ...] = ()
    steps: tuple[Step, ...] = ()
    audits: tuple[Union[AccDirective, RecursiveDirective], ...] = ()
    source: str = "<scenario>"

    def proof(self, name: str) -> ProofDecl:
        for p in self.proofs:
            if p.name == name:
                return p
        raise KeyError(name)


# ---------------------------------------------------------------------------
# parsing


def split_sections(text: str, source: str) -> list[tuple[str, str, int]]:
    """Return (section name, body text, first body line) triples."""
    out: list[tuple[str, list[str], int]] = []
    for n, line in enumerate(text.splitlines(), 1):
        m = _HEADER.match(line.strip())
        if m:
            name = m.group(1)
            if name not in SECTIONS:
                raise ParseError(f"unknown section [{name}]", n, 1, source)
            if any(s == name for s, _, _ in out):
                raise ParseError(f"section [{name}] appears twice", n, 1, source)
            out.append((name, [], n + 1))
        elif out:
            out[-1][1].append(line)
        elif line.split("#", 1)[0].strip():
            raise ParseError("text before the first section header", n, 1, source)
    return [(s, "\n".join(body), start) for s, body, start in out]


class _Loader:
    def __init__(self, source: str, max_depth: int):
        self.source = source
        self.max_depth = max_depth
        self.sc = Scenario(source=source)
        self.vocab = self.sc.vocab
        self.vocab.action_sorts = self.sc.reg.sorts

    def parser(self, body: str, line0: int, placeholders=None) -> Parser:
        return Parser(tokenize(body, self.source, line0), self.vocab, self.source, placeholders)

    def names(self, p: Parser) -> list[str]:
        out = []
        while p.tok.kind != "EOF":
            tok = p.tok
            n = p.name()
            if n in KEYWORDS:
                p.error(f"{n} is reserved", tok)
            out.append(n)
            p.accept(",")
        return out

    # -- rosters ----------------------------------------------------------
    def agents(self, p: Parser) -> None:
        self.sc.agents = tuple(self._unique(p, self.names(p), "agent"))
        self.vocab.agents = set(self.sc.agents)

    def data(self, p: Parser) -> None:
        self.sc.data = tuple(self._unique(p, self.names(p), "data object"))
        self.vocab.data = set(self.sc.data)
        clash = self.vocab.data & self.vocab.agents
        if clash:
            p.error(f"{sorted(clash)[0]} is both an agent and a data object")

    def _unique(self, p: Parser, items: list[str], what: str) -> list[str]:
        if len(set(items)) != len(items):
            dup = next(x for x in items if items.count(x) > 1)
            p.error(f"{what} {dup} declared twice")
        return items

    # -- predicates -------------------------------------------------------
    def predicates(self, p: Parser) -> None:
        while p.tok.kind != "EOF":
            tok = p.tok
            name = p.name()
            sorts: list[str] = []
            if p.accept("("):
                while not p.at(")"):
                    st = p.tok
                    s = p.name()
                    if s not in TERM_SORTS:
                        p.error(f"unknown sort {s!r}", st)
                    sorts.append(s)
                    if not p.accept(","):
                        break
                p.expect(")")
            try:
                if p.accept("affects"):
                    if p.accept("none"):
                        affects = frozenset()
                    else:
                        positions = [p.integer() - 1]
                        while p.accept(","):
                            positions.append(p.integer() - 1)
                        affects = frozenset(positions)
                    sig = PredicateSignature(name, tuple(sorts), affects)
                else:
                    sig = PredicateSignature.default(name, tuple(sorts))
                self.vocab.declare(sig)
            except (SortError, ValueError) as exc:
                p.error(str(exc), tok)

    # -- action kinds -----------------------------------------------------
    def actions(self, p: Parser) -> None:
        while p.tok.kind != "EOF":
            tok = p.tok
            p.expect("action")
            name = p.name()
            params: list[tuple[str, str]] = []
            p.expect("(")
            while not p.at(")"):
                pn = p.name()
                p.expect(":")
                st = p.tok
                s = p.name()
                if s not in TERM_SORTS + (POLICY,):
                    p.error(f"unknown sort {s!r}", st)
                params.append((pn, s))
                if not p.accept(","):
                    break
            p.expect(")")
            placeholders = dict(params)
            obs_rule = ObsRule(ACTOR)
            po_agent = po_t = concl_agent = concl_t = None
            p.expect("{")
            while not p.accept("}"):
                key_tok = p.tok
                key = p.name()
                if key == "obs":
                    p.expect("=")
                    form = p.name()
                    if form == LISTED:
                        p.expect("(")
                        listed = [p.name()]
                        while p.accept(","):
                            listed.append(p.name())
                        p.expect(")")
                        obs_rule = ObsRule(LISTED, tuple(listed))
                    elif form in (ACTOR, ENDPOINTS, ALL):
                        obs_rule = ObsRule(form)
                    else:
                        p.error(f"unknown observer rule {form!r}", key_tok)
                elif key in ("po", "concl"):
                    p.expect("(")
                    who = "*" if p.accept("*") else p.name()
                    p.expect(")")
                    p.expect("=")
                    p.placeholders = placeholders
                    try:
                        tmpl = p.policy()
                    finally:
                        p.placeholders = None
                    if key == "po":
                        po_agent, po_t = who, tmpl
                    else:
                        concl_agent, concl_t = who, tmpl
                else:
                    p.error(f"unknown action property {key!r}", key_tok)
                p.expect(";")
            spec = ActionKindSpec(name, tuple(params), obs_rule, po_agent, po_t, concl_agent, concl_t)
            try:
                self.sc.reg = register_kind(spec, self.sc.reg)
            except ActionError as exc:
                p.error(str(exc), tok)
            self.vocab.action_sorts = self.sc.reg.sorts

    # -- policies / env ---------------------------------------------------
    def policies(self, p: Parser) -> None:
        while p.tok.kind != "EOF":
            tok = p.tok
            name = p.name()
            if name in self.vocab.macros or name in self.vocab.predicates or name in KEYWORDS:
                p.error(f"policy name {name} is already in use", tok)
            p.expect("=")
            pol = p.policy()
            self.vocab.macros[name] = pol
            self.sc.macros[name] = pol

    def env(self, p: Parser) -> None:
        facts = []
        while p.tok.kind != "EOF":
            tok = p.tok
            atom = p.policy()
            if not isinstance(atom, Atom):
                p.error("environment facts must be atomic predicates", tok)
            lo, hi = 0, FOREVER
            if p.accept("from"):
                lo = p.integer()
            if p.accept("to"):
                hi = p.integer()
            if lo > hi:
                p.error(f"empty validity window {lo}..{hi}", tok)
            facts.append(EnvFact(atom, lo, hi))
        self.sc.env = tuple(facts)

    # -- proofs -----------------------------------------------------------
    def proofs(self, p: Parser) -> None:
        from .search import search

        decls = []
        while p.tok.kind != "EOF":
            tok = p.tok
            p.expect("proof")
            name = p.name()
            if any(d.name == name for d in decls):
                p.error(f"proof {name} declared twice", tok)
            key = None
            if p.accept("on"):
                key = p.integer() if p.accept("@") else p.action()
            p.expect("{")
            p.expect("reasoner")
            p.expect(":")
            rtok = p.tok
            reasoner = p.name()
            if self.vocab.agents and reasoner not in self.vocab.agents:
                p.error(f"undeclared agent {reasoner!r}", rtok)
            gamma, delta, witnesses = [], [], []
            if p.accept("gamma"):
                p.expect(":")
                for item, w in read_items(p, read_gamma_item, lambda q: q.at("delta") or q.at("goal")):
                    gamma.append(item)
                    if w is not None:
                        if not isinstance(item, Act):
                            p.error("only actions carry instance ids in gamma")
                        witnesses.append((item.action, w))
            if p.accept("delta"):
                p.expect(":")
                for item, _ in read_items(p, read_delta_item, lambda q: q.at("goal")):
                    delta.append(item)
            p.expect("goal")
            p.expect(":")
            goal = p.policy()
            seq = Sequent(reasoner, tuple(gamma), tuple(delta), goal)
            p.expect("tree")
            p.expect(":")
            ttok = p.tok
            if p.accept("search"):
                pt = search(seq, self.max_depth, self.sc.reg)
                if pt is None:
                    p.error(f"search found no proof of {name} within depth {self.max_depth}", ttok)
            else:
                pt = read_proof(p)
            p.expect("}")
            if key is not None:
                ck = key if isinstance(key, int) else canon_action(key)
                for d in decls:
                    if d.key is not None and d.sequent.reasoner == reasoner:
                        if (d.key if isinstance(d.key, int) else canon_action(d.key)) == ck:
                            p.error(f"proofs {d.name} and {name} justify the same action for {reasoner}", tok)
            decls.append(ProofDecl(name, seq, pt, tuple(witnesses), key, tok.line))
        self.sc.proofs = tuple(decls)

    # -- steps ------------------------------------------------------------
    def agent(self, p: Parser) -> str:
        tok = p.tok
        n = p.name()
        if n not in self.vocab.agents:
            p.error(f"undeclared agent {n!r}", tok)
        return n

    def steps(self, p: Parser) -> None:
        steps: list[Step] = []
        while p.tok.kind != "EOF":
            tok = p.tok
            if p.accept("honest"):
                who = self.agent(p)
                steps.append(HonestStep(who, p.action(), tok.line))
                continue
            p.expect("do")
            act = p.action()
            logs = []
            while p.accept("log"):
                who = self.agent(p)
                conds: list[Atom] = []
                obligs: list[ObligSpec] = []
                if p.accept("conds"):
                    while True:
                        ctok = p.tok
                        c = p.policy()
                        if not isinstance(c, Atom):
                            p.error("conditions must be atomic predicates", ctok)
                        conds.append(c)
                        if not p.accept(","):
                            break
                if p.accept("obligs"):
                    while True:
                        obligs.append(self.oblig(p))
                        if not p.accept(","):
                            break
                logs.append(LogChoice(who, tuple(conds), tuple(obligs)))
            steps.append(DoStep(act, tuple(logs), tok.line))
        self.sc.steps = tuple(steps)

    def oblig(self, p: Parser) -> ObligSpec:
        tok = p.tok
        if not (p.accept("!") or p.accept("?")):
            p.error("an obligation starts with ! or ?")
        act = p.action()
        ref = within = by = None
        if p.accept("@"):
            ref = p.integer()
        if p.accept("within"):
            within = p.integer()
        elif p.accept("by"):
            by = p.integer()
        return ObligSpec(tok.text, act, ref, within, by)

    # -- audits -----------------------------------------------------------
    def audits(self, p: Parser) -> None:
        out = []
        while p.tok.kind != "EOF":
            tok = p.tok
            if p.accept("acc"):
                who = self.agent(p)
                out.append(AccDirective(who, self.extra(p), tok.line))
            elif p.accept("recursive"):
                who = [self.agent(p)]
                while p.accept(","):
                    who.append(self.agent(p))
                out.append(RecursiveDirective(tuple(who), self.extra(p), tok.line))
            else:
                p.error(f"expected 'acc' or 'recursive', found {tok.text!r}")
        self.sc.audits = tuple(out)

    def extra(self, p: Parser) -> tuple[int, ...]:
        ids: list[int] = []
        if p.accept("with"):
            ids.append(p.integer())
            while p.accept(","):
                ids.append(p.integer())
        return tuple(ids)


def parse_scenario(text: str, source: str = "<scenario>", max_depth: int = 8) -> Scenario:
    loader = _Loader(source, max_depth)
    sections = dict((name, (body, line)) for name, body, line in split_sections(text, source))
    for name in SECTIONS:
        if name in sections:
            body, line = sections[name]
            p = loader.parser(body, line)
            getattr(loader, name)(p)
            p.done()
    return loader.sc


def load_scenario(path: Union[str, Path], max_depth: int = 8) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(encoding="utf-8"), str(path), max_depth)


# ---------------------------------------------------------------------------
# printing


def _format_sig(sig: PredicateSignature) -> str:
    s = sig.name
    if sig.sorts:
        s += "(" + ", ".join(sig.sorts) + ")"
    if sig.affects != PredicateSignature.default(sig.name, sig.sorts).affects:
        s += " affects " + (", ".join(str(i + 1) for i in sorted(sig.affects)) or "none")
    return s


def _format_kind(spec: ActionKindSpec) -> str:
    params = ", ".join(f"{n}:{s}" for n, s in spec.params)
    obs_rule = spec.obs.form
    if spec.obs.form == LISTED:
        obs_rule += "(" + ", ".join(spec.obs.names) + ")"
    body = [f"obs = {obs_rule};"]
    if spec.po is not None:
        body.append(f"po({spec.po_agent}) = {format_policy(spec.po)};")
    if spec.concl is not None:
        body.append(f"concl({spec.concl_agent}) = {format_policy(spec.concl)};")
    return f"action {spec.name}({params}) {{ " + " ".join(body) + " }"


def _format_proof_decl(d: ProofDecl) -> str:
    head = f"proof {d.name}"
    if isinstance(d.key, int):
        head += f" on @{d.key}"
    elif d.key is not None:
        head += f" on {format_action(d.key)}"
    wit = dict((format_action(t), i) for t, i in d.witnesses)

    def gitem(it):
        w = wit.get(format_action(it.action)) if isinstance(it, Act) else None
        return format_item(it, w)

    lines = [head + " {", f"  reasoner: {d.sequent.reasoner}"]
    if d.sequent.gamma:
        lines.append("  gamma: " + ", ".join(gitem(i) for i in d.sequent.gamma))
    if d.sequent.delta:
        lines.append("  delta: " + ", ".join(format_item(i) for i in d.sequent.delta))
    lines.append(f"  goal: {format_policy(d.sequent.goal)}")
    lines.append(f"  tree: {format_proof(d.proof)}" if d.proof is not None else "  tree: search")
    lines.append("}")
    return "\n".join(lines)


def _format_step(st: Step) -> str:
    if isinstance(st, HonestStep):
        return f"honest {st.agent} {format_action(st.action)}"
    s = f"do {format_action(st.action)}"
    for lc in st.logs:
        s += f" log {lc.agent}"
        if lc.conds:
            s += " conds " + ", ".join(format_policy(c) for c in lc.conds)
        if lc.obligs:
            s += " obligs " + ", ".join(str(o) for o in lc.obligs)
    return s


def format_scenario(sc: Scenario) -> str:
    out: list[str] = []

    def section(name: str, lines: list[str]) -> None:
        if lines:
            out.append(f"[{name}]")
            out.extend(lines)
            out.append("")

    section("agents", [" ".join(sc.agents)] if sc.agents else [])
    section("data", [" ".join(sc.data)] if sc.data else [])
    section("predicates", [_format_sig(s) for s in sc.vocab.predicates.values()])
    section("actions", [_format_kind(k) for k in sc.reg.user_kinds()])
    section("policies", [f"{n} = {format_policy(p)}" for n, p in sc.macros.items()])
    env = []
    for f in sc.env:
        s = format_policy(f.atom)
        if f.valid_from != 0:
            s += f" from {f.valid_from}"
        if f.valid_to != FOREVER:
            s += f" to {f.valid_to}"
        env.append(s)
    section("env", env)
    section("proofs", [_format_proof_decl(d) for d in sc.proofs])
    section("steps", [_format_step(s) for s in sc.steps])
    audits = []
    for a in sc.audits:
        extra = (" with " + ", ".join(map(str, a.extra))) if a.extra else ""
        if isinstance(a, AccDirective):
            audits.append(f"acc {a.agent}{extra}")
        else:
            audits.append(f"recursive {', '.join(a.suspects)}{extra}")
    section("audits", audits)
    return "\n".join(out)
