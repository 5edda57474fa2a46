"""Bounded brute-force search over small-memory strategies.

Whether a finite-memory strategy wins LimAvg=1 almost surely depends only on
the supports of its action and update distributions.  The search therefore
ranges over support patterns, realised as uniform distributions over the
chosen subsets (or over singletons only, for pure strategies).  Choices are
made lazily, only for (memory, observation, action) triples that become
reachable, memory elements are introduced in order to break symmetry, and a
branch is cut as soon as a fully determined recurrent class is losing.

A negative outcome means "nothing found within the bound", never "no".
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .chain import bottom_components, certify_limavg1
from .model import Distribution, FiniteStrategy, Pomdp, bits, popcount, require_valid


@dataclass
class OracleResult:
    found: bool
    strategy: Optional[FiniteStrategy]
    explored: int
    exhausted: bool       # True when the whole bounded space was searched

    @property
    def answer(self) -> str:
        return "YES" if self.found else "UNKNOWN"


class _Budget(Exception):
    pass


def _options(mask_all, pure):
    opts = [x for x in range(1, mask_all + 1) if x & ~mask_all == 0]
    if pure:
        opts = [x for x in opts if popcount(x) == 1]
    return sorted(opts, key=lambda x: (popcount(x), x))


def bounded_oracle(model: Pomdp, k: int, support_only: bool = True, budget: int = 200_000) -> OracleResult:
    """Search strategies with at most ``k`` memory elements.

    ``support_only=True`` covers every support pattern (hence every
    randomized strategy up to the qualitative behaviour that matters);
    ``False`` restricts to pure strategies.
    """
    require_valid(model)
    if k < 1:
        raise ValueError("memory bound must be at least 1")
    pure = not support_only
    n_act = model.n_actions
    succ, obs = model.succ_mask, model.obs_of
    reward_ok = model.reward_one
    act_opts = _options((1 << n_act) - 1, pure)
    count = [0]

    def explore(act, upd):
        start = (model.initial, 0)
        index = {start: 0}
        nodes = [start]
        edges = []
        complete = []
        need = None
        i = 0
        while i < len(nodes):
            s, m = nodes[i]
            out = set()
            ok = True
            A = act.get(m)
            if A is None:
                ok = False
                need = need or ("act", m)
            else:
                for a in bits(A):
                    for t in bits(succ[s][a]):
                        key = (m, obs[t], a)
                        M2 = upd.get(key)
                        if M2 is None:
                            ok = False
                            need = need or ("upd", key)
                            continue
                        for m2 in bits(M2):
                            node = (t, m2)
                            j = index.get(node)
                            if j is None:
                                j = index[node] = len(nodes)
                                nodes.append(node)
                            out.add(j)
            edges.append(sorted(out))
            complete.append(ok)
            i += 1
        return nodes, edges, complete, need

    def losing_class(nodes, edges, complete, act, closed_only):
        for cls in bottom_components(len(nodes), lambda v: edges[v]):
            if closed_only and not all(complete[v] for v in cls):
                continue
            for v in cls:
                s, m = nodes[v]
                if act[m] & ~_ok_actions(s):
                    return True
        return False

    ok_cache = {}

    def _ok_actions(s):
        r = ok_cache.get(s)
        if r is None:
            r = ok_cache[s] = sum(1 << a for a in range(n_act) if reward_ok[a] >> s & 1)
        return r

    def build(act, upd, used):
        next_action = tuple(Distribution.uniform(list(bits(act[m]))) for m in range(used))
        update = {}
        for m in range(used):
            for o in range(model.n_observations):
                for a in range(n_act):
                    M2 = upd.get((m, o, a))
                    update[(m, o, a)] = (Distribution.uniform(list(bits(M2))) if M2
                                         else Distribution.point(m))
        is_pure = all(len(d) == 1 for d in next_action) and all(len(d) == 1 for d in update.values())
        return FiniteStrategy(tuple(f"m{i}" for i in range(used)), 0, next_action, update,
                              model.actions, model.observations, pure=is_pure,
                              name=f"oracle-k{k}")

    def search(act, upd, used):
        count[0] += 1
        if count[0] > budget:
            raise _Budget
        nodes, edges, complete, need = explore(act, upd)
        if need is None:
            if losing_class(nodes, edges, complete, act, closed_only=False):
                return None
            sigma = build(act, upd, used)
            return sigma if certify_limavg1(model, sigma).winning else None
        if losing_class(nodes, edges, complete, act, closed_only=True):
            return None
        kind, key = need
        if kind == "act":
            for A in act_opts:
                act[key] = A
                found = search(act, upd, used)
                if found:
                    return found
            del act[key]
            return None
        limit = min(used + 1, k)
        for M2 in _options((1 << limit) - 1, pure):
            upd[key] = M2
            grows = M2 >> used & 1
            found = search(act, upd, used + 1 if grows else used)
            if found:
                return found
        del upd[key]
        return None

    try:
        sigma = search({}, {}, 1)
    except _Budget:
        return OracleResult(False, None, count[0], False)
    return OracleResult(sigma is not None, sigma, count[0], sigma is None)
