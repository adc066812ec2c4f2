"""Concrete syntax for terms, policies and actions.

Grammar (``forall`` binds weakest, then ``->`` (right associative), then
``and``)::

    policy  ::= 'forall' binder (',' binder)* '.' policy
              | ('!' | '?') '[' action ']' '->' policy
              | conj ('->' policy)?
    conj    ::= primary ('and' primary)*
    primary ::= '(' policy ')' | 'owns' '(' term ',' term ')'
              | 'says' '(' term ',' policy ',' term ')'
              | NAME ['(' term (',' term)* ')']
    binder  ::= NAME ':' ('agent' | 'data')

Identifiers in term position are resolved by the sort the position demands:
a bound variable, a template placeholder, or else a constant of that sort.
Money literals are written ``10$``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .model import (
    AGENT,
    DATA,
    MONEY,
    POLICY,
    QUANTIFIABLE,
    And,
    ActionTemplate,
    Atom,
    Const,
    Forall,
    Hole,
    Implies,
    Oblige,
    Owns,
    Policy,
    PredicateSignature,
    Requirement,
    Says,
    SortError,
    Term,
    Var,
    fresh_name,
    names,
    substitute,
    subterms,
)

KEYWORDS = {"forall", "and", "owns", "says"}


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0, source: str = "<input>"):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col
        self.source = source

    def __str__(self) -> str:
        return f"{self.source}:{self.line}:{self.col}: {self.message}"


@dataclass(frozen=True)
class Token:
    kind: str  # NAME, INT, MONEY, SYM, EOF
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<money>\d+(?:\.\d+)?\$)
  | (?P<int>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*'*)
  | (?P<sym>->|[()\[\]{},.:;!?=@*])
    """,
    re.VERBOSE,
)


def tokenize(text: str, source: str = "<input>", line0: int = 1) -> list[Token]:
    out: list[Token] = []
    pos = 0
    line, line_start = line0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1, source)
        kind = m.lastgroup
        chunk = m.group()
        if kind in ("ws", "comment"):
            for i, ch in enumerate(chunk):
                if ch == "\n":
                    line += 1
                    line_start = pos + i + 1
        else:
            out.append(Token(kind.upper(), chunk, line, pos - line_start + 1))
        pos = m.end()
    out.append(Token("EOF", "", line, pos - line_start + 1))
    return out


@dataclass
class Vocabulary:
    """What the parser needs to know: predicates, action sorts, macros, rosters."""

    predicates: dict[str, PredicateSignature] = field(default_factory=dict)
    action_sorts: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    macros: dict[str, Policy] = field(default_factory=dict)
    agents: set[str] = field(default_factory=set)
    data: set[str] = field(default_factory=set)

    def declare(self, sig: PredicateSignature) -> None:
        if sig.name in self.predicates or sig.name in KEYWORDS:
            raise ValueError(f"predicate {sig.name} declared twice")
        self.predicates[sig.name] = sig


class Parser:
    """Recursive-descent parser over a token list."""

    def __init__(
        self,
        tokens: list[Token],
        vocab: Vocabulary,
        source: str = "<input>",
        placeholders: Optional[Mapping[str, str]] = None,
    ):
        self.toks = tokens
        self.i = 0
        self.vocab = vocab
        self.source = source
        self.placeholders = dict(placeholders) if placeholders is not None else None
        self.bound: list[Var] = []

    # -- token plumbing -------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "EOF":
            self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.kind in ("SYM", "NAME") and self.tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.advance()
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def name(self) -> str:
        if self.tok.kind != "NAME":
            self.error(f"expected a name, found {self.tok.text or 'end of input'!r}")
        return self.advance().text

    def integer(self) -> int:
        if self.tok.kind != "INT":
            self.error(f"expected an integer, found {self.tok.text or 'end of input'!r}")
        return int(self.advance().text)

    def error(self, message: str, tok: Optional[Token] = None) -> None:
        tok = tok or self.tok
        raise ParseError(message, tok.line, tok.col, self.source)

    def done(self) -> None:
        if self.tok.kind != "EOF":
            self.error(f"unexpected {self.tok.text!r}")

    # -- terms ----------------------------------------------------------
    def term(self, sort: str) -> Term:
        tok = self.tok
        if sort == MONEY:
            if tok.kind != "MONEY":
                if tok.kind == "NAME" and self.placeholders and self.placeholders.get(tok.text) == MONEY:
                    self.advance()
                    return Var(tok.text, MONEY)
                self.error(f"expected a money literal such as 5$, found {tok.text!r}")
            self.advance()
            return Const(tok.text, MONEY)
        if tok.kind != "NAME" or tok.text in KEYWORDS:
            self.error(f"expected a {sort} term, found {tok.text or 'end of input'!r}")
        self.advance()
        text = tok.text
        for v in reversed(self.bound):
            if v.name == text:
                if v.sort != sort:
                    self.error(f"variable {text} has sort {v.sort}, expected {sort}", tok)
                return v
        if self.placeholders is not None and text in self.placeholders:
            if self.placeholders[text] != sort:
                self.error(f"placeholder {text} has sort {self.placeholders[text]}, expected {sort}", tok)
            return Var(text, sort)
        roster = self.vocab.agents if sort == AGENT else self.vocab.data
        other = self.vocab.data if sort == AGENT else self.vocab.agents
        if self.placeholders is not None and text not in roster:
            self.error(f"undeclared placeholder {text!r}", tok)
        if roster and text not in roster:
            if text in other:
                self.error(f"{text} is not an {sort}" if sort == AGENT else f"{text} is not {sort}", tok)
            self.error(f"undeclared {sort} {text!r}", tok)
        return Const(text, sort)

    # -- policies -------------------------------------------------------
    def policy(self) -> Policy:
        if self.at("forall"):
            return self._forall()
        return self._implication()

    def _forall(self) -> Policy:
        self.expect("forall")
        binders: list[Var] = []
        while True:
            tok = self.tok
            name = self.name()
            self.expect(":")
            sort = self.name()
            if sort not in QUANTIFIABLE:
                self.error(f"cannot quantify over {sort}; only agent and data", tok)
            binders.append(Var(name, sort))
            if not self.accept(","):
                break
        self.expect(".")
        self.bound.extend(binders)
        try:
            body = self.policy()
        finally:
            del self.bound[-len(binders):]
        for v in reversed(binders):
            body = Forall(v, body)
        return body

    def _implication(self) -> Policy:
        if self.tok.text in ("!", "?") and self.peek().text == "[":
            mode = self.advance().text
            self.expect("[")
            act = self.action()
            self.expect("]")
            self.expect("->")
            return Oblige(Requirement(mode, act), self.policy())
        left = self._conj()
        if self.accept("->"):
            return Implies(left, self.policy())
        return left

    def _conj(self) -> Policy:
        left = self._primary()
        while self.accept("and"):
            left = And(left, self._primary())
        return left

    def _primary(self) -> Policy:
        tok = self.tok
        if self.accept("("):
            p = self.policy()
            self.expect(")")
            return p
        if self.at("forall"):
            return self._forall()
        if tok.text in ("!", "?") and self.peek().text == "[":
            return self._implication()
        if self.accept("owns"):
            self.expect("(")
            owner = self.term(AGENT)
            self.expect(",")
            data = self.term(DATA)
            self.expect(")")
            return Owns(owner, data)
        if self.accept("says"):
            self.expect("(")
            speaker = self.term(AGENT)
            self.expect(",")
            body = self.policy()
            self.expect(",")
            target = self.term(AGENT)
            self.expect(")")
            return Says(speaker, body, target)
        if tok.kind != "NAME" or tok.text in KEYWORDS:
            self.error(f"expected a policy, found {tok.text or 'end of input'!r}")
        name = self.advance().text
        if self.placeholders is not None and self.placeholders.get(name) == POLICY:
            return Hole(name)
        if name in self.vocab.macros and not self.at("("):
            return self.vocab.macros[name]
        sig = self.vocab.predicates.get(name)
        if sig is None:
            self.error(f"unknown predicate {name!r}", tok)
        args: list[Term] = []
        if self.accept("("):
            for k, sort in enumerate(sig.sorts):
                if k:
                    self.expect(",")
                args.append(self.term(sort))
            self.expect(")")
        elif sig.arity:
            self.error(f"{name} expects {sig.arity} arguments", tok)
        try:
            return Atom(sig, tuple(args))
        except SortError as exc:
            self.error(str(exc), tok)
            raise

    # -- actions --------------------------------------------------------
    def action(self) -> ActionTemplate:
        tok = self.tok
        kind = self.name()
        sorts = self.vocab.action_sorts.get(kind)
        if sorts is None:
            self.error(f"unknown action kind {kind!r}", tok)
        args: list[Term] = []
        payload: Optional[Policy] = None
        if self.accept("("):
            for k, sort in enumerate(sorts):
                if k:
                    self.expect(",")
                if sort == POLICY:
                    payload = self.policy()
                else:
                    args.append(self.term(sort))
            self.expect(")")
        elif sorts:
            self.error(f"action {kind} expects {len(sorts)} arguments", tok)
        return ActionTemplate(kind, tuple(args), payload)


def _parser(text: str, vocab: Vocabulary, source: str, placeholders=None) -> Parser:
    return Parser(tokenize(text, source), vocab, source, placeholders)


def parse_policy(text: str, vocab: Vocabulary, source: str = "<input>") -> Policy:
    p = _parser(text, vocab, source)
    out = p.policy()
    p.done()
    return out


def parse_action(text: str, vocab: Vocabulary, source: str = "<input>") -> ActionTemplate:
    p = _parser(text, vocab, source)
    out = p.action()
    p.done()
    return out


# ---------------------------------------------------------------------------
# printing


def format_term(t: Term) -> str:
    return t.name


def format_action(a: ActionTemplate) -> str:
    parts = [format_term(t) for t in a.args]
    if a.payload is not None:
        parts.append(format_policy(a.payload))
    if not parts:
        return f"{a.kind}()"
    return f"{a.kind}({', '.join(parts)})"


# contexts: what may appear unparenthesised
_TOP, _IMP_LEFT, _AND_RIGHT = 0, 1, 2


def _readable(p: Policy, outer: dict) -> Policy:
    """Rename binders whose name would resolve differently when read back.

    A binder is renamed when its name also denotes a constant or another
    variable in its body, or an enclosing binder of a different sort.
    """
    if isinstance(p, (Atom, Owns, Hole)):
        return p
    if isinstance(p, Says):
        return Says(p.speaker, _readable(p.body, outer), p.target)
    if isinstance(p, And):
        return And(_readable(p.left, outer), _readable(p.right, outer))
    if isinstance(p, Implies):
        return Implies(_readable(p.cond, outer), _readable(p.body, outer))
    if isinstance(p, Oblige):
        a = p.req.action
        if a.payload is not None:
            a = ActionTemplate(a.kind, a.args, _readable(a.payload, outer))
        return Oblige(Requirement(p.req.mode, a), _readable(p.body, outer))
    if isinstance(p, Forall):
        v, body = p.var, p.body
        others = {t.name for t in subterms(body) if t != v}
        if v.name in others or outer.get(v.name, v.sort) != v.sort:
            new = Var(fresh_name(v.name, names(body) | set(outer)), v.sort)
            body = substitute(body, v, new)
            v = new
        return Forall(v, _readable(body, {**outer, v.name: v.sort}))
    raise TypeError(p)


def format_policy(p: Policy, ctx: int = _TOP) -> str:
    return _format(_readable(p, {}), ctx)


def _format(p: Policy, ctx: int = _TOP) -> str:
    if isinstance(p, Atom):
        if not p.args:
            return p.sig.name
        return f"{p.sig.name}({', '.join(format_term(t) for t in p.args)})"
    if isinstance(p, Owns):
        return f"owns({format_term(p.owner)}, {format_term(p.data)})"
    if isinstance(p, Says):
        return f"says({format_term(p.speaker)}, {_format(p.body)}, {format_term(p.target)})"
    if isinstance(p, Hole):
        return p.name
    if isinstance(p, And):
        s = f"{_format(p.left, _IMP_LEFT)} and {_format(p.right, _AND_RIGHT)}"
        return f"({s})" if ctx == _AND_RIGHT else s
    if isinstance(p, Implies):
        s = f"{_format(p.cond, _IMP_LEFT)} -> {_format(p.body)}"
    elif isinstance(p, Oblige):
        s = f"{p.req.mode}[{format_action(p.req.action)}] -> {_format(p.body)}"
    elif isinstance(p, Forall):
        s = f"forall {p.var.name}:{p.var.sort} . {_format(p.body)}"
    else:
        raise TypeError(p)
    return f"({s})" if ctx != _TOP else s

