"""Seeded random scenarios in which every agent follows the honest strategy."""

from __future__ import annotations

import random
from typing import Optional

from .actions import ActionKindSpec, ObsRule, register_kind
from .kernel import Act, ManyOblig, OnceOblig, Pol, Sequent
from .model import (
    AGENT,
    DATA,
    MANY,
    MONEY,
    ONCE,
    ActionTemplate,
    Atom,
    Const,
    Forall,
    Implies,
    Oblige,
    Policy,
    PredicateSignature,
    Requirement,
    Says,
    Var,
)
from .actionlog import EnvFact
from .runner import Refuse, SystemState, build_store, execute_plan, honest_step
from .scenario import AccDirective, HonestStep, ProofDecl, RecursiveDirective, Scenario
from .search import search


def _vocabulary(sc: Scenario) -> dict[str, PredicateSignature]:
    sigs = {
        "use": PredicateSignature("use", (AGENT, DATA), frozenset({1})),
        "okay": PredicateSignature("okay", (AGENT,), frozenset()),
    }
    for s in sigs.values():
        sc.vocab.declare(s)
    x, y = Var("x", AGENT), Var("y", DATA)
    kinds = [
        ActionKindSpec("apply", (("x", AGENT), ("y", DATA)), ObsRule("actor"), "x", Atom(sigs["use"], (x, y))),
        ActionKindSpec("pay", (("x", AGENT), ("m", MONEY)), ObsRule("actor")),
        ActionKindSpec("notify", (("x", AGENT),), ObsRule("actor")),
    ]
    for k in kinds:
        sc.reg = register_kind(k, sc.reg)
    sc.vocab.action_sorts = sc.reg.sorts
    return sigs


class _Builder:
    def __init__(self, seed: int, max_depth: int = 8):
        self.rng = random.Random(seed)
        self.max_depth = max_depth
        rng = self.rng
        n_agents = rng.randint(2, 4)
        n_data = rng.randint(1, 3)
        self.sc = Scenario(source=f"<generated seed={seed}>")
        self.sc.agents = tuple(f"g{i}" for i in range(n_agents))
        self.sc.data = tuple(f"d{i}" for i in range(n_data))
        self.sc.vocab.agents = set(self.sc.agents)
        self.sc.vocab.data = set(self.sc.data)
        self.sigs = _vocabulary(self.sc)
        env = []
        for g in self.sc.agents:
            if rng.random() < 0.7:
                lo = rng.randint(0, 6)
                env.append(EnvFact(Atom(self.sigs["okay"], (Const(g, AGENT),)), lo, lo + rng.randint(3, 30)))
        self.sc.env = tuple(env)
        self.proofs: list[ProofDecl] = []
        self.steps: list[HonestStep] = []
        self.state = SystemState.initial(self.sc.agents, self.sc.env)
        self.owner: dict[str, str] = {}
        self.creates_id: dict[str, int] = {}

    # -- helpers ----------------------------------------------------------
    def a(self, name: str) -> Const:
        return Const(name, AGENT)

    def use(self, g, d) -> Atom:
        return Atom(self.sigs["use"], (g if isinstance(g, Var) else self.a(g), Const(d, DATA)))

    def okay(self, g) -> Atom:
        return Atom(self.sigs["okay"], (g if isinstance(g, Var) else self.a(g),))

    def act(self, kind: str, *args, payload: Optional[Policy] = None) -> ActionTemplate:
        return ActionTemplate(kind, tuple(args), payload)

    def do(self, agent: str, act: ActionTemplate) -> bool:
        self.sc.proofs = tuple(self.proofs)
        store = build_store(self.sc)
        plan = honest_step(agent, act, self.state, store, self.sc.reg, self.sc.agents)
        self.steps.append(HonestStep(agent, act))
        if isinstance(plan, Refuse):
            return False
        self.state = execute_plan(self.state, plan, self.sc.reg, self.sc.agents)
        return True

    def prove(self, name: str, key: ActionTemplate, seq: Sequent, witnesses) -> bool:
        if any(p.sequent.reasoner == seq.reasoner and p.key == key for p in self.proofs):
            return False
        pt = search(seq, self.max_depth, self.sc.reg)
        if pt is None:
            return False
        self.proofs.append(ProofDecl(f"{name}{len(self.proofs)}", seq, pt, tuple(witnesses), key))
        return True

    # -- moves ------------------------------------------------------------
    def grant_policy(self, g: str, d: str) -> Policy:
        pay = self.act("pay", self.a(g), Const("5$", MONEY))
        note = self.act("notify", self.a(g))
        k = self.rng.randrange(6)
        if k == 0:
            return self.use(g, d)
        if k == 1:
            return Implies(self.okay(g), self.use(g, d))
        if k == 2:
            return Oblige(Requirement(ONCE, pay), self.use(g, d))
        if k == 3:
            return Oblige(Requirement(MANY, note), self.use(g, d))
        if k == 4:
            x = Var("x", AGENT)
            xpay = self.act("pay", x, Const("5$", MONEY))
            return Forall(x, Implies(self.okay(x), Oblige(Requirement(ONCE, xpay), self.use(x, d))))
        others = [h for h in self.sc.agents if h != g]
        h = self.rng.choice(others)
        return Says(self.a(g), self.use(h, d), self.a(h))

    def create(self) -> None:
        free = [d for d in self.sc.data if d not in self.owner]
        if not free:
            return
        d = self.rng.choice(free)
        o = self.rng.choice(self.sc.agents)
        self.creates_id[d] = self.state.clock
        self.do(o, self.act("creates", self.a(o), Const(d, DATA)))
        self.owner[d] = o

    def grant(self) -> None:
        if not self.owner:
            return
        d = self.rng.choice(sorted(self.owner))
        o = self.owner[d]
        g = self.rng.choice([x for x in self.sc.agents if x != o])
        pol = self.grant_policy(g, d)
        comm = self.act("comm", self.a(o), self.a(g), payload=pol)
        seq = Sequent(o, (Act(self.act("creates", self.a(o), Const(d, DATA))),), (), Says(self.a(o), pol, self.a(g)))
        if not self.prove("grant", comm, seq, [(seq.gamma[0].action, self.creates_id[d])]):
            return
        comm_id = self.state.clock
        if not self.do(o, comm):
            return
        # the receiver commits to a proof for using d
        self.consumer(g, d, pol, comm, comm_id)

    def consumer(self, g: str, d: str, pol: Policy, comm: ActionTemplate, comm_id: int) -> None:
        if isinstance(pol, Says):
            h = pol.target.name
            fwd = self.act("comm", self.a(g), self.a(h), payload=pol.body)
            seq = Sequent(g, (Act(comm),), (), pol)
            if self.prove("forward", fwd, seq, [(comm, comm_id)]):
                fwd_id = self.state.clock
                if self.rng.random() < 0.8 and self.do(g, fwd):
                    self.consumer(h, d, pol.body, fwd, fwd_id)
            return
        gamma = [Act(comm)]
        delta = []
        if self.rng.random() < 0.8:
            gamma.insert(0, Pol(self.okay(g)))
        text = str(pol)
        if "notify(" in text:
            gamma.append(ManyOblig(self.act("notify", self.a(g))))
        if "pay(" in text:
            delta.append(OnceOblig(self.act("pay", self.a(g), Const("5$", MONEY))))
        seq = Sequent(g, tuple(gamma), tuple(delta), self.use(g, d))
        if self.prove("use", self.act("apply", self.a(g), Const(d, DATA)), seq, [(comm, comm_id)]):
            if "notify(" in text and self.rng.random() < 0.5:
                self.do(g, self.act("notify", self.a(g)))

    def attempt(self) -> None:
        g = self.rng.choice(self.sc.agents)
        d = self.rng.choice(self.sc.data)
        self.do(g, self.act("apply", self.a(g), Const(d, DATA)))

    def build(self) -> Scenario:
        moves = [self.create, self.grant, self.grant, self.attempt, self.attempt, self.attempt]
        self.create()
        for _ in range(self.rng.randint(4, 12)):
            self.rng.choice(moves)()
        self.sc.proofs = tuple(self.proofs)
        self.sc.steps = tuple(self.steps)
        audits = [AccDirective(g) for g in self.sc.agents]
        audits.append(RecursiveDirective((self.rng.choice(self.sc.agents),)))
        self.sc.audits = tuple(audits)
        return self.sc


def generate(seed: int, max_depth: int = 8) -> Scenario:
    """A random scenario of honest agents; identical for identical seeds."""
    return _Builder(seed, max_depth).build()
