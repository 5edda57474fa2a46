"""Seeded random POMDPs and strategies for property tests and benchmarks."""
from __future__ import annotations

import numpy as np

from .model import Distribution, FiniteStrategy, Pomdp


def _random_dist(rng, n, max_support):
    k = int(rng.integers(1, min(max_support, n) + 1))
    support = rng.choice(n, size=k, replace=False)
    w = rng.integers(1, 5, size=k).astype(float)
    w /= w.sum()
    return {int(s): float(p) for s, p in zip(support, w)}


def random_pomdp(rng, n_states=4, n_actions=2, n_obs=3, max_support=2, p_reward_one=0.6,
                 fractional_rewards=False, name="random") -> Pomdp:
    """Random model with exactly ``min(n_obs, n_states)`` observations in use.

    Rewards are 1 with probability ``p_reward_one`` and otherwise 0 (or a
    uniform value in [0, 1) when ``fractional_rewards``).
    """
    rng = np.random.default_rng(rng)
    n_obs = min(n_obs, n_states)
    states = [f"s{i}" for i in range(n_states)]
    actions = [chr(ord("a") + i) for i in range(n_actions)]
    obs_idx = list(range(n_obs)) + [int(x) for x in rng.integers(0, n_obs, size=n_states - n_obs)]
    rng.shuffle(obs_idx)
    obs_of = {s: f"o{obs_idx[i]}" for i, s in enumerate(states)}
    trans, rew = {}, {}
    for i, s in enumerate(states):
        for a in actions:
            trans[(s, a)] = {states[t]: p for t, p in _random_dist(rng, n_states, max_support).items()}
            if rng.random() < p_reward_one:
                rew[(s, a)] = 1.0
            elif fractional_rewards:
                rew[(s, a)] = float(rng.random())
    return Pomdp.build(states, actions, trans, initial=states[0],
                       observations=[f"o{i}" for i in range(n_obs)], obs_of=obs_of,
                       rewards=rew, name=name)


def random_strategy(rng, model: Pomdp, memory=2, max_support=2, name="random") -> FiniteStrategy:
    rng = np.random.default_rng(rng)
    next_action = tuple(Distribution(_random_dist(rng, model.n_actions, max_support))
                        for _ in range(memory))
    update = {}
    for m in range(memory):
        for o in range(model.n_observations):
            for a in range(model.n_actions):
                update[(m, o, a)] = Distribution(_random_dist(rng, memory, max_support))
    return FiniteStrategy(tuple(f"m{i}" for i in range(memory)), 0, next_action, update,
                          model.actions, model.observations, name=name)


def random_chain_matrix(rng, n, density=0.5, irreducible=True):
    """Row-stochastic matrix; with ``irreducible`` a Hamiltonian cycle is
    added so the whole chain is one recurrent class."""
    rng = np.random.default_rng(rng)
    P = (rng.random((n, n)) < density) * rng.random((n, n))
    if irreducible:
        perm = rng.permutation(n)
        for k in range(n):
            P[perm[k], perm[(k + 1) % n]] += 0.5
    for i in range(n):
        if P[i].sum() == 0:
            P[i, rng.integers(n)] = 1.0
    return P / P.sum(axis=1, keepdims=True)
