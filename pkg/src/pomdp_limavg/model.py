"""POMDP and finite-memory strategy data model, validation, belief updates.

States, actions, observations and memory elements are referred to by index
internally; the name tuples exist for I/O and diagnostics.  Sets of states
(beliefs, annotation bit-vectors) are plain ``int`` bitmasks.
"""
from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Optional

from .errors import ModelError

SUM_TOL = 1e-9
MIN_PROB = 1e-12
REWARD_ONE_TOL = 1e-12


# -- bitset helpers ---------------------------------------------------------

def bits(mask: int) -> Iterator[int]:
    """Indices of the set bits of ``mask``, ascending."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_of(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def submasks(mask: int) -> Iterator[int]:
    """All submasks of ``mask`` including 0, in increasing numeric order."""
    sub = 0
    while True:
        yield sub
        if sub == mask:
            return
        sub = (sub - mask) & mask


# -- distributions ----------------------------------------------------------

class Distribution(Mapping):
    """Immutable finite probability distribution.

    The default constructor enforces the invariants (non-negative entries,
    sum within ``SUM_TOL`` of 1, no ambiguous entries below ``MIN_PROB``).
    ``Distribution.unchecked`` skips them so that malformed models can be
    represented and then reported by the validators.
    """

    __slots__ = ("_p", "_support")

    def __init__(self, entries, *, check=True):
        p = {k: float(v) for k, v in dict(entries).items() if v != 0}
        if check:
            problem = distribution_problem(p)
            if problem:
                raise ModelError(problem)
        self._p = p
        self._support = frozenset(p)

    @classmethod
    def unchecked(cls, entries):
        return cls(entries, check=False)

    @classmethod
    def point(cls, x):
        return cls({x: 1.0})

    @classmethod
    def uniform(cls, xs):
        xs = list(xs)
        if not xs:
            raise ModelError("uniform distribution over an empty set")
        return cls({x: 1.0 / len(xs) for x in xs})

    def __getitem__(self, k):
        return self._p.get(k, 0.0)

    def __iter__(self):
        return iter(self._p)

    def __len__(self):
        return len(self._p)

    def __contains__(self, k):
        return k in self._p

    @property
    def support(self) -> frozenset:
        return self._support

    def total(self) -> float:
        return math.fsum(self._p.values())

    def __eq__(self, other):
        if isinstance(other, Distribution):
            return self._p == other._p
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._p.items()))

    def __repr__(self):
        inner = ", ".join(f"{k!r}: {v:.6g}" for k, v in sorted(self._p.items(), key=lambda kv: repr(kv[0])))
        return f"Distribution({{{inner}}})"


def distribution_problem(p: Mapping) -> Optional[str]:
    """Human-readable description of the first invariant ``p`` breaks, or None."""
    if not p:
        return "empty support"
    for k, v in p.items():
        if not math.isfinite(v) or v < 0:
            return f"entry {k!r} has invalid probability {v!r}"
        if 0 < v < MIN_PROB:
            return f"entry {k!r} has ambiguous probability {v!r} (below {MIN_PROB})"
    s = math.fsum(p.values())
    if abs(s - 1.0) > SUM_TOL:
        return f"probabilities sum to {s:.12g}, not 1"
    return None


# -- POMDP ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Pomdp:
    """Finite POMDP with rewards on state-action pairs.

    ``transition[s][a]`` is a Distribution over state indices, ``obs_of[s]``
    the observation index of state ``s``, ``reward[s][a]`` a float in [0,1].
    """

    states: tuple
    actions: tuple
    observations: tuple
    transition: tuple
    obs_of: tuple
    reward: tuple
    initial: int
    name: str = "model"

    @classmethod
    def build(cls, states, actions, transitions, *, initial, observations=None,
              obs_of=None, rewards=None, name="model", check=True):
        """Build from names.

        ``transitions`` maps ``(state, action)`` to ``{state: prob}``;
        ``obs_of`` maps state to observation name (omitted: fully observable);
        ``rewards`` maps ``(state, action)`` to a value, missing pairs are 0.
        """
        states = tuple(states)
        actions = tuple(actions)
        si = {s: i for i, s in enumerate(states)}
        if obs_of is None:
            observations = states
            obs_idx = tuple(range(len(states)))
        else:
            if observations is None:
                observations = tuple(dict.fromkeys(obs_of[s] for s in states))
            observations = tuple(observations)
            oi = {o: i for i, o in enumerate(observations)}
            obs_idx = tuple(oi[obs_of[s]] for s in states)
        make = Distribution if check else Distribution.unchecked
        trans = []
        for s in states:
            row = []
            for a in actions:
                d = transitions.get((s, a))
                row.append(make({si[t]: p for t, p in d.items()}) if d is not None else None)
            trans.append(tuple(row))
        rewards = rewards or {}
        rew = tuple(tuple(float(rewards.get((s, a), 0.0)) for a in actions) for s in states)
        return cls(states, actions, tuple(observations), tuple(trans), obs_idx, rew,
                   si[initial], name)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def n_observations(self) -> int:
        return len(self.observations)

    def state_index(self, name) -> int:
        return _lookup(self.states, name, "state")

    def action_index(self, name) -> int:
        return _lookup(self.actions, name, "action")

    def observation_index(self, name) -> int:
        return _lookup(self.observations, name, "observation")

    @cached_property
    def succ_mask(self) -> tuple:
        """``succ_mask[s][a]``: bitmask of Supp(transition[s][a])."""
        return tuple(
            tuple(mask_of(d.support) if d is not None else 0 for d in row)
            for row in self.transition
        )

    @cached_property
    def obs_mask(self) -> tuple:
        """``obs_mask[o]``: bitmask of the states carrying observation ``o``."""
        masks = [0] * len(self.observations)
        for s, o in enumerate(self.obs_of):
            masks[o] |= 1 << s
        return tuple(masks)

    @cached_property
    def reward_one(self) -> tuple:
        """``reward_one[a]``: bitmask of states whose reward under ``a`` is 1."""
        return tuple(
            mask_of(s for s in range(self.n_states) if self.reward[s][a] >= 1.0 - REWARD_ONE_TOL)
            for a in range(self.n_actions)
        )

    def post(self, belief: int, a: int) -> int:
        m = 0
        for s in bits(belief):
            m |= self.succ_mask[s][a]
        return m

    def state_names(self, mask: int) -> list:
        return [self.states[s] for s in bits(mask)]


def _lookup(names, name, kind):
    if isinstance(name, int) and not isinstance(name, bool):
        if 0 <= name < len(names):
            return name
        raise ModelError(f"{kind} index {name} out of range")
    try:
        return names.index(name)
    except ValueError:
        raise ModelError(f"unknown {kind} {name!r}") from None


def validate_pomdp(model: Pomdp) -> list:
    """Every invariant violation of ``model`` as a message; empty iff valid."""
    out = []
    n, k = model.n_states, model.n_actions
    if n == 0:
        out.append("model has no states")
    if k == 0:
        out.append("model has no actions")
    if not 0 <= model.initial < max(n, 1):
        out.append(f"initial state index {model.initial} out of range")
    if len(model.transition) != n or len(model.reward) != n or len(model.obs_of) != n:
        out.append("transition/reward/observation tables do not cover every state")
        return out
    for s in range(n):
        sn = model.states[s]
        for a in range(k):
            an = model.actions[a]
            d = model.transition[s][a] if a < len(model.transition[s]) else None
            if d is None:
                out.append(f"transition ({sn}, {an}): missing (transition must be total)")
                continue
            bad = [t for t in d if not (isinstance(t, int) and 0 <= t < n)]
            if bad:
                out.append(f"transition ({sn}, {an}): unknown successor(s) {bad}")
            problem = distribution_problem(dict(d))
            if problem:
                out.append(f"transition ({sn}, {an}): {problem}")
            r = model.reward[s][a] if a < len(model.reward[s]) else None
            if r is None or not (math.isfinite(r) and 0.0 <= r <= 1.0):
                out.append(f"reward ({sn}, {an}) = {r!r} outside [0, 1]")
    used = set()
    for s, o in enumerate(model.obs_of):
        if not 0 <= o < model.n_observations:
            out.append(f"state {model.states[s]}: observation index {o} out of range")
        used.add(o)
    for o, on in enumerate(model.observations):
        if o not in used:
            out.append(f"observation {on} is not the observation of any state")
    return out


# -- beliefs ----------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Belief:
    """Non-empty set of states, stored as a bitmask over state indices."""

    bits: int

    def __post_init__(self):
        if self.bits <= 0:
            raise ModelError("belief must be non-empty")

    @classmethod
    def of(cls, model: Pomdp, states) -> "Belief":
        return cls(mask_of(model.state_index(s) for s in states))

    def __iter__(self):
        return bits(self.bits)

    def __contains__(self, s):
        return bool(self.bits >> s & 1)

    def __len__(self):
        return popcount(self.bits)

    def issubset(self, other: "Belief") -> bool:
        return self.bits & ~other.bits == 0

    def names(self, model: Pomdp) -> list:
        return model.state_names(self.bits)


def initial_belief(model: Pomdp) -> Belief:
    """The singleton belief {s0}."""
    return Belief(1 << model.initial)


def initial_observation_belief(model: Pomdp) -> Belief:
    """All states sharing the observation of s0."""
    return Belief(model.obs_mask[model.obs_of[model.initial]])


def belief_update(model: Pomdp, b: Belief, a, o) -> Optional[Belief]:
    """States with observation ``o`` reachable in one ``a``-step from ``b``.

    Returns None when ``o`` cannot be observed after playing ``a`` from ``b``.
    """
    a = model.action_index(a)
    o = model.observation_index(o)
    m = model.post(b.bits, a) & model.obs_mask[o]
    return Belief(m) if m else None


# -- strategies -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FiniteStrategy:
    """Finite-memory observation-based strategy.

    ``next_action[m]`` is a Distribution over action indices; ``update`` maps
    ``(m, o, a)`` to a Distribution over memory indices.  ``actions`` and
    ``observations`` carry the names of the model the strategy was made for.
    """

    memory: tuple
    initial_memory: int
    next_action: tuple
    update: Mapping
    actions: tuple
    observations: tuple
    pure: bool = False
    name: str = "strategy"

    @property
    def size(self) -> int:
        return len(self.memory)

    def action_support(self, m: int) -> int:
        return mask_of(self.next_action[m].support)

    def structurally_equal(self, other: "FiniteStrategy", tol: float = 0.0) -> bool:
        if (self.memory, self.initial_memory, self.actions, self.observations) != (
                other.memory, other.initial_memory, other.actions, other.observations):
            return False
        if set(self.update) != set(other.update):
            return False
        pairs = list(zip(self.next_action, other.next_action))
        pairs += [(self.update[k], other.update[k]) for k in self.update]
        for d1, d2 in pairs:
            if d1.support != d2.support:
                return False
            if any(abs(d1[x] - d2[x]) > tol for x in d1.support):
                return False
        return True


def memoryless_strategy(model: Pomdp, choice, name="memoryless") -> FiniteStrategy:
    """One-memory strategy; ``choice`` is a Distribution or ``{action: prob}``
    keyed by action names, played regardless of observation."""
    if not isinstance(choice, Distribution):
        choice = Distribution({model.action_index(a): p for a, p in dict(choice).items()})
    stay = Distribution.point(0)
    update = {(0, o, a): stay for o in range(model.n_observations) for a in range(model.n_actions)}
    pure = len(choice) == 1
    return FiniteStrategy(("m0",), 0, (choice,), update, model.actions, model.observations,
                          pure=pure, name=name)


def validate_strategy(model: Pomdp, sigma: FiniteStrategy) -> list:
    out = []
    if tuple(sigma.actions) != tuple(model.actions):
        out.append(f"strategy actions {list(sigma.actions)} do not match model actions {list(model.actions)}")
    if tuple(sigma.observations) != tuple(model.observations):
        out.append("strategy observations do not match model observations")
    nm = len(sigma.memory)
    if nm == 0:
        return out + ["strategy has no memory elements"]
    if not 0 <= sigma.initial_memory < nm:
        out.append(f"initial memory index {sigma.initial_memory} out of range")
    if len(sigma.next_action) != nm:
        out.append("next_action is not total over memory")
    for m, d in enumerate(sigma.next_action):
        mn = sigma.memory[m] if m < nm else m
        if d is None:
            out.append(f"next_action({mn}): missing")
            continue
        problem = distribution_problem(dict(d))
        if problem:
            out.append(f"next_action({mn}): {problem}")
        bad = [a for a in d if not (isinstance(a, int) and 0 <= a < model.n_actions)]
        if bad:
            out.append(f"next_action({mn}): unknown action(s) {bad}")
        if sigma.pure and len(d) != 1:
            out.append(f"next_action({mn}): strategy flagged pure but support has {len(d)} actions")
    for m in range(nm):
        for o in range(model.n_observations):
            for a in range(model.n_actions):
                key = (m, o, a)
                label = f"update({sigma.memory[m]}, {model.observations[o]}, {model.actions[a]})"
                d = sigma.update.get(key)
                if d is None:
                    out.append(f"{label}: missing (update must be total)")
                    continue
                problem = distribution_problem(dict(d))
                if problem:
                    out.append(f"{label}: {problem}")
                bad = [x for x in d if not (isinstance(x, int) and 0 <= x < nm)]
                if bad:
                    out.append(f"{label}: unknown memory element(s) {bad}")
                if sigma.pure and len(d) != 1:
                    out.append(f"{label}: strategy flagged pure but support has {len(d)} elements")
    return out


def require_valid(model: Pomdp, sigma: Optional[FiniteStrategy] = None):
    problems = validate_pomdp(model)
    if sigma is not None and not problems:
        problems = validate_strategy(model, sigma)
    if problems:
        raise ModelError("; ".join(problems[:5]) + (" ..." if len(problems) > 5 else ""), problems)
