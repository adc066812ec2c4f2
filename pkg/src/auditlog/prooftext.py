"""Text form of proof terms and sequent items.

Proof terms are S-expressions ``(rule arg... premise...)``. Arguments are
integers (split points, indices), names (witnesses, eigenvariables), braced
policies (cut formulas) or op derivations ``(op_... )`` for ``der_pol``. A
bare ``init`` is a leaf premise. Example::

    (obs_act (cut 1 0 {says(a, print(b, d), b)}
        (der_pol (op_says (op_atom 0)))
        (refine (forall_r_data x' (imp_r (w_l init))))))
"""

from __future__ import annotations

from typing import Optional

from .kernel import ARITY, OP_ALIASES, OP_ARITY, Act, ManyOblig, OnceOblig, OpDerivation, Pol, ProofTerm
from .model import Policy
from .syntax import Parser, Vocabulary, format_action, format_policy, tokenize

# rules whose first argument is a name
_NAMED = {"forall_l_agent", "forall_l_data", "forall_r_agent", "forall_r_data", "forall_l", "forall_r"}


def read_proof(p: Parser) -> ProofTerm:
    if p.at("init") and p.tok.kind == "NAME":
        p.advance()
        return ProofTerm("init")
    p.expect("(")
    tok = p.tok
    rule = p.name()
    if rule not in ARITY and rule not in ("forall_l", "forall_r"):
        p.error(f"unknown rule {rule!r}", tok)
    args: list = []
    kids: list[ProofTerm] = []
    if rule in _NAMED and p.tok.kind == "NAME":
        args.append(p.name())
    while not p.at(")"):
        t = p.tok
        if t.kind == "INT":
            args.append(p.integer())
        elif p.accept("{"):
            args.append(p.policy())
            p.expect("}")
        elif t.text == "(" and p.peek().text.startswith("op_"):
            args.append(read_op(p))
        elif t.text == "(" or t.text == "init":
            kids.append(read_proof(p))
        elif t.kind == "EOF":
            p.error("unterminated proof term")
        else:
            p.error(f"unexpected {t.text!r} in proof term")
    p.expect(")")
    return ProofTerm(rule, tuple(args), tuple(kids))


def read_op(p: Parser) -> OpDerivation:
    p.expect("(")
    tok = p.tok
    rule = p.name()
    if rule not in OP_ARITY and rule not in OP_ALIASES:
        p.error(f"unknown op rule {rule!r}", tok)
    args: list = []
    kids: list[OpDerivation] = []
    while not p.at(")"):
        t = p.tok
        if t.kind == "INT":
            args.append(p.integer())
        elif t.kind == "NAME":
            args.append(p.name())
        elif t.text == "(":
            kids.append(read_op(p))
        else:
            p.error(f"unexpected {t.text or 'end of input'!r} in op derivation")
    p.expect(")")
    return OpDerivation(rule, tuple(args), tuple(kids))


def parse_proof(text: str, vocab: Optional[Vocabulary] = None, source: str = "<input>") -> ProofTerm:
    p = Parser(tokenize(text, source), vocab or Vocabulary(), source)
    pt = read_proof(p)
    p.done()
    return pt


def _arg(a) -> str:
    if isinstance(a, Policy):
        return "{" + format_policy(a) + "}"
    if isinstance(a, OpDerivation):
        return format_op(a)
    return str(a)


def format_op(od: OpDerivation) -> str:
    parts = [od.rule] + [str(a) for a in od.args] + [format_op(c) for c in od.children]
    return "(" + " ".join(parts) + ")"


def format_proof(pt: ProofTerm) -> str:
    if pt.rule == "init" and not pt.args and not pt.children:
        return "init"
    parts = [pt.rule] + [_arg(a) for a in pt.args] + [format_proof(c) for c in pt.children]
    return "(" + " ".join(parts) + ")"


# ---------------------------------------------------------------------------
# sequent items: ``act ACTION``, ``?ACTION`` or a policy in Γ; ``[!]ACTION`` in Δ.
# Either may carry ``@ID``, the id of the executed instance it stands for.


def _witness(p: Parser) -> Optional[int]:
    if p.accept("@"):
        return p.integer()
    return None


def read_gamma_item(p: Parser):
    if p.at("act") and p.peek().kind == "NAME":
        p.advance()
        return Act(p.action()), _witness(p)
    if p.at("?") and p.peek().kind == "NAME":
        p.advance()
        return ManyOblig(p.action()), _witness(p)
    return Pol(p.policy()), None


def read_delta_item(p: Parser):
    p.accept("!")
    return OnceOblig(p.action()), _witness(p)


def read_items(p: Parser, reader, stop) -> list:
    out = []
    if stop(p):
        return out
    while True:
        out.append(reader(p))
        if not p.accept(","):
            return out


def format_item(item, witness: Optional[int] = None) -> str:
    if isinstance(item, Pol):
        s = format_policy(item.policy)
    elif isinstance(item, Act):
        s = f"act {format_action(item.action)}"
    elif isinstance(item, ManyOblig):
        s = f"?{format_action(item.action)}"
    else:
        s = f"!{format_action(item.action)}"
    return s if witness is None else f"{s} @{witness}"
