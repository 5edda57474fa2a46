"""Probabilistic finite automata, the two PFA-to-POMDP gadgets and
ultimately periodic word strategies.

Both gadgets produce single-observation POMDPs with Boolean state rewards.
Pairs (state, action) that the constructions leave undefined lead to an
explicit absorbing ``sink`` with reward 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterator, Sequence

import numpy as np

from .errors import ModelError
from .model import Distribution, FiniteStrategy, Pomdp

DOLLAR = "$"
HASH = "#"
GOOD, BAD, SINK = "good", "bad", "sink"


@dataclass(frozen=True, eq=False)
class Pfa:
    states: tuple
    actions: tuple
    transition: tuple       # transition[s][a]: Distribution over state indices
    final: frozenset
    initial: int
    name: str = "pfa"

    @classmethod
    def build(cls, states, actions, transitions, *, initial, final=(), name="pfa"):
        states, actions = tuple(states), tuple(actions)
        si = {s: i for i, s in enumerate(states)}
        missing = [(s, a) for s in states for a in actions if (s, a) not in transitions]
        if missing:
            raise ModelError(f"PFA transition not total, missing {missing[:3]}")
        trans = tuple(
            tuple(Distribution({si[t]: p for t, p in transitions[(s, a)].items()}) for a in actions)
            for s in states)
        try:
            fin = frozenset(si[s] for s in final)
            init = si[initial]
        except KeyError as exc:
            raise ModelError(f"unknown state {exc.args[0]!r}") from None
        return cls(states, actions, trans, fin, init, name)

    def matrix(self, a: int) -> np.ndarray:
        n = len(self.states)
        M = np.zeros((n, n))
        for s in range(n):
            for t, p in self.transition[s][a].items():
                M[s, t] = p
        return M


def pfa_accept_prob(p: Pfa, word: Sequence) -> float:
    """Probability mass on final states after reading ``word``."""
    x = np.zeros(len(p.states))
    x[p.initial] = 1.0
    for letter in word:
        try:
            a = p.actions.index(letter)
        except ValueError:
            raise ModelError(f"unknown action {letter!r}") from None
        x = x @ p.matrix(a)
    return float(sum(x[s] for s in p.final))


def _check_fresh(p: Pfa, names):
    clash = (set(names) & set(p.states)) | ({DOLLAR, HASH} & set(p.actions))
    if clash:
        raise ModelError(f"PFA uses reserved names {sorted(clash)}")


def reduce_strict_emptiness(p: Pfa) -> Pomdp:
    """Gadget for strict emptiness versus almost-sure LimAvg>1/2.

    Each PFA state ``s`` becomes ``s_1`` (reward 1) and ``s_0`` (reward 0):
    ``$`` moves ``s_1 -> s_0``, a letter moves ``s_0`` like the PFA into the
    ``_1`` copies, ``#`` moves ``s_1`` to good (s final) or bad, and ``#``
    moves good/bad back to the initial ``s0_1``.
    """
    one = {s: f"{s}_1" for s in p.states}
    zero = {s: f"{s}_0" for s in p.states}
    _check_fresh(p, [GOOD, BAD, SINK, *one.values(), *zero.values()])
    states = [x for s in p.states for x in (one[s], zero[s])] + [GOOD, BAD, SINK]
    actions = list(p.actions) + [DOLLAR, HASH]
    init = one[p.states[p.initial]]
    trans, rew = {}, {}
    for x in states:
        for a in actions:
            trans[(x, a)] = {SINK: 1.0}
    for i, s in enumerate(p.states):
        trans[(one[s], DOLLAR)] = {zero[s]: 1.0}
        trans[(one[s], HASH)] = {GOOD if i in p.final else BAD: 1.0}
        for k, a in enumerate(p.actions):
            trans[(zero[s], a)] = {one[p.states[t]]: q for t, q in p.transition[i][k].items()}
    trans[(GOOD, HASH)] = {init: 1.0}
    trans[(BAD, HASH)] = {init: 1.0}
    for x in [*one.values(), GOOD]:
        for a in actions:
            rew[(x, a)] = 1.0
    return Pomdp.build(states, actions, trans, initial=init, obs_of={x: "o" for x in states},
                       rewards=rew, name=f"{p.name}-strict")


def reduce_value1(p: Pfa) -> Pomdp:
    """Gadget for the value-1 problem versus almost-sure LimAvg=1.

    ``$`` from a PFA state goes to good (final) or bad, ``#`` self-loops on
    good/bad, ``$`` from good/bad restarts; reward 1 only at good.
    """
    _check_fresh(p, [GOOD, BAD, SINK])
    states = list(p.states) + [GOOD, BAD, SINK]
    actions = list(p.actions) + [DOLLAR, HASH]
    init = p.states[p.initial]
    trans = {(x, a): {SINK: 1.0} for x in states for a in actions}
    for i, s in enumerate(p.states):
        for k, a in enumerate(p.actions):
            trans[(s, a)] = {p.states[t]: q for t, q in p.transition[i][k].items()}
        trans[(s, DOLLAR)] = {GOOD if i in p.final else BAD: 1.0}
    for x in (GOOD, BAD):
        trans[(x, HASH)] = {x: 1.0}
        trans[(x, DOLLAR)] = {init: 1.0}
    rew = {(GOOD, a): 1.0 for a in actions}
    return Pomdp.build(states, actions, trans, initial=init, obs_of={x: "o" for x in states},
                       rewards=rew, name=f"{p.name}-value1")


@dataclass(frozen=True)
class WordStrategy:
    prefix: tuple
    cycle: tuple

    def __post_init__(self):
        if not self.cycle:
            raise ModelError("word strategy cycle must be non-empty")

    def to_strategy(self, model: Pomdp) -> FiniteStrategy:
        return word_to_strategy(model, self.prefix, self.cycle)

    def __str__(self):
        return f"{''.join(self.prefix)}({''.join(self.cycle)})^w"


def word_to_strategy(model: Pomdp, u: Sequence, v: Sequence) -> FiniteStrategy:
    """Pure strategy playing ``u`` once and then ``v`` forever; memory is the
    position in ``u + v`` and ignores observations."""
    u, v = list(u), list(v)
    if not v:
        raise ModelError("word strategy cycle must be non-empty")
    word = u + v
    n = len(word)
    acts = [model.action_index(a) for a in word]
    next_action = tuple(Distribution.point(a) for a in acts)
    update = {}
    for i in range(n):
        nxt = Distribution.point(i + 1 if i + 1 < n else len(u))
        for o in range(model.n_observations):
            for a in range(model.n_actions):
                update[(i, o, a)] = nxt
    return FiniteStrategy(tuple(f"p{i}" for i in range(n)), 0, next_action, update,
                          model.actions, model.observations, pure=True,
                          name=f"word-{''.join(map(str, u))}-{''.join(map(str, v))}")


def word_strategies(alphabet: Sequence, max_len: int) -> Iterator[WordStrategy]:
    """Every ``u . v^omega`` with ``|u| + |v| <= max_len`` and ``v`` non-empty."""
    alphabet = list(alphabet)
    for total in range(1, max_len + 1):
        for word in product(alphabet, repeat=total):
            for cut in range(total):
                yield WordStrategy(tuple(word[:cut]), tuple(word[cut:]))
