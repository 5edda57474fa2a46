"""Seeded Monte Carlo simulation of a POMDP under a finite-memory strategy.

Randomness comes from numpy's PCG64 bit generator seeded with the given
integer, so runs are bit-identical across platforms and numpy versions that
keep the PCG64 stream stable.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from itertools import accumulate

import numpy as np

from .model import FiniteStrategy, Pomdp, require_valid


@dataclass
class SimulationResult:
    steps: int
    seed: int
    empirical_average: float
    visit_counts: dict          # {(state name, memory name): visits}

    def to_dict(self):
        return {"steps": self.steps, "seed": self.seed,
                "empirical_average": self.empirical_average,
                "visit_counts": {f"{s}|{m}": c for (s, m), c in sorted(self.visit_counts.items())}}


def _sampler(dist):
    keys = sorted(dist)
    cum = list(accumulate(dist[k] for k in keys))
    cum[-1] = 1.0
    return keys, cum


def simulate(model: Pomdp, sigma: FiniteStrategy, steps: int, seed: int) -> SimulationResult:
    """Sample one trajectory of ``steps`` steps and report the running
    average reward and per-(state, memory) visit counts."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    require_valid(model, sigma)
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random((steps, 3))
    act = [_sampler(d) for d in sigma.next_action]
    trans = [[_sampler(d) for d in row] for row in model.transition]
    upd = {}
    s, m = model.initial, sigma.initial_memory
    total = 0.0
    visits = {}
    R, obs = model.reward, model.obs_of
    for k in range(steps):
        key = (s, m)
        visits[key] = visits.get(key, 0) + 1
        ks, cum = act[m]
        a = ks[bisect_right(cum, u[k, 0])] if len(ks) > 1 else ks[0]
        total += R[s][a]
        ks, cum = trans[s][a]
        s = ks[bisect_right(cum, u[k, 1])] if len(ks) > 1 else ks[0]
        ukey = (m, obs[s], a)
        sm = upd.get(ukey)
        if sm is None:
            sm = upd[ukey] = _sampler(sigma.update[ukey])
        ks, cum = sm
        m = ks[bisect_right(cum, u[k, 2])] if len(ks) > 1 else ks[0]
    named = {(model.states[s], sigma.memory[m]): c for (s, m), c in visits.items()}
    return SimulationResult(steps, seed, total / steps, named)
