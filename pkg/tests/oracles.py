"""Independent reference implementations used as test oracles.

Each oracle deliberately takes a different route from the library code
(dense matrices, brute-force enumeration, iteration to convergence) so that
agreement is meaningful.
"""
from __future__ import annotations

import bisect
from itertools import product
from pathlib import Path

import numpy as np

from pomdp_limavg import parse_model, parse_strategy
from pomdp_limavg.chain import MarkovChain, almost_sure_reach_mc
from pomdp_limavg.model import bits
from pomdp_limavg.solver import prune_consistent

DATA = Path(__file__).parent / "data"


def load_model(name):
    return parse_model((DATA / name).read_text())


def load_strategy(name, model):
    return parse_strategy((DATA / name).read_text(), model)


# -- chains -----------------------------------------------------------------

def closure(P):
    """Reflexive-transitive closure of the support graph of ``P``."""
    n = P.shape[0]
    R = (P > 0) | np.eye(n, dtype=bool)
    while True:
        R2 = R | ((R.astype(int) @ R.astype(int)) > 0)
        if (R2 == R).all():
            return R
        R = R2


def bsccs_by_closure(P):
    R = closure(P)
    n = P.shape[0]
    out = set()
    for i in range(n):
        comp = frozenset(j for j in range(n) if R[i, j] and R[j, i])
        leaves = any(P[x, y] > 0 and y not in comp for x in comp for y in range(n))
        if not leaves:
            out.add(comp)
    return out


def reach_values(P, target, iters=200_000, tol=1e-15):
    """Probability of eventually hitting ``target`` by value iteration."""
    n = P.shape[0]
    t = np.zeros(n, dtype=bool)
    t[list(target)] = True
    x = t.astype(float)
    for _ in range(iters):
        y = np.where(t, 1.0, P @ x)
        if np.max(np.abs(y - x)) < tol:
            return y
        x = y
    return x


def power_iteration(P, tol=1e-15, iters=1_000_000):
    """Stationary vector of an irreducible ``P`` via its lazy version."""
    n = P.shape[0]
    L = 0.5 * (P + np.eye(n))
    pi = np.full(n, 1.0 / n)
    for _ in range(iters):
        nxt = pi @ L
        if np.max(np.abs(nxt - pi)) < tol:
            return nxt
        pi = nxt
    return pi


def simulate_matrix(P, rewards, start, steps, seed):
    """Average reward along one sampled path of the chain ``P``."""
    rng = np.random.default_rng(seed)
    cum = np.cumsum(P, axis=1)
    cum[:, -1] = 1.0
    u = rng.random(steps)
    x = start
    total = 0.0
    rows = [c.tolist() for c in cum]
    rew = list(map(float, rewards))
    for k in range(steps):
        total += rew[x]
        x = bisect.bisect_right(rows[x], u[k])
    return total / steps


# -- beliefs ----------------------------------------------------------------

def belief_by_prefixes(model, acts, obs):
    """States reachable at the end of some positive-probability state
    sequence from the initial state matching the given actions/observations."""
    n = model.n_states
    finals = set()
    k = len(acts)
    for seq in product(range(n), repeat=k):
        s = model.initial
        ok = True
        for a, o, t in zip(acts, obs, seq):
            if model.transition[s][a].get(t, 0.0) <= 0 or model.obs_of[t] != o:
                ok = False
                break
            s = t
        if ok:
            finals.add(seq[-1] if k else model.initial)
    return finals


# -- solver -----------------------------------------------------------------

def uniform_chain(g, alive, target):
    """Explicit Markov chain of uniform play over the composite actions that
    stay in ``alive``; target nodes are made absorbing."""
    model = g.model
    nodes = [(s, v) for v in sorted(alive) for s in bits(g.annotations[v].belief)]
    index = {x: i for i, x in enumerate(nodes)}
    step, tgt = [], set()
    for s, v in nodes:
        i = index[(s, v)]
        if target.get(v, 0) >> s & 1:
            tgt.add(i)
            step.append({i: 1.0})
            continue
        allowed = g.allowed_actions(v, alive)
        row = {}
        for a in allowed:
            hub_of = dict(g.moves[v][a])
            for t, pt in model.transition[s][a].items():
                cands = [c for c in g.hub_cands[hub_of[model.obs_of[t]]] if c in alive]
                for c in cands:
                    j = index[(t, c)]
                    row[j] = row.get(j, 0.0) + pt / len(allowed) / len(cands)
        step.append(row)
    return MarkovChain(nodes, step, [0.0] * len(nodes), index), tgt


def reach_obs_by_chain(g, target=None):
    """Greatest fixpoint recomputed with explicit chains and
    ``almost_sure_reach_mc`` as the probability-1 test."""
    target = g.target() if target is None else target
    alive = set(g.observations())
    while True:
        alive = set(prune_consistent(g.restrict(alive)).alive)
        chain, tgt = uniform_chain(g, alive, target)
        good = almost_sure_reach_mc(chain, tgt)
        bad = {chain.nodes[i][1] for i in range(len(chain)) if i not in good}
        if not bad:
            return alive
        alive -= bad


# -- collapse -----------------------------------------------------------------

def collapsed_violations(model, graph, csigma):
    """Structural checks on the explicit product chain of a collapsed
    strategy: true state inside the belief, W and R successor-closure,
    reward 1 on W&R nodes, and probability-1 reachability of R."""
    from pomdp_limavg.chain import product_chain

    c = product_chain(model, csigma)
    verts = graph.vertices
    out = []
    for i, (s, m) in enumerate(c.nodes):
        v = verts[m]
        if not v.belief >> s & 1:
            out.append(("belief", i))
        for j in c.successors(i):
            t, m2 = c.nodes[j]
            w = verts[m2]
            if v.winning >> s & 1 and not w.winning >> t & 1:
                out.append(("W-closure", i, j))
            if v.recurrent >> s & 1 and not w.recurrent >> t & 1:
                out.append(("R-closure", i, j))
        if v.winning >> s & 1 and v.recurrent >> s & 1:
            for a in csigma.next_action[m].support:
                if model.reward[s][a] < 1.0:
                    out.append(("reward", i, a))
    rec = {i for i, (s, m) in enumerate(c.nodes) if verts[m].recurrent >> s & 1}
    if almost_sure_reach_mc(c, rec) != set(range(len(c))):
        out.append(("R-reach",))
    return out


def winning_pairs(count, start=0, max_states=5):
    """Deterministic stream of random (model, strategy) pairs that
    certify_limavg1 accepts."""
    from pomdp_limavg import certify_limavg1
    from pomdp_limavg.generators import random_pomdp, random_strategy

    seed = start
    out = []
    while len(out) < count:
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, max_states + 1))
        m = random_pomdp(seed, n_states=n, n_actions=int(rng.integers(1, 3)),
                         n_obs=int(rng.integers(1, 4)), p_reward_one=0.85)
        sigma = random_strategy(seed + 10_000, m, memory=int(rng.integers(1, 4)))
        if certify_limavg1(m, sigma).winning:
            out.append((seed, m, sigma))
        seed += 1
    return out


def graph_to_nx(graph):
    import networkx as nx

    G = nx.DiGraph()
    for v in graph.vertices:
        G.add_node(v, initial=v == graph.initial)
    labels = {}
    for u, a, w in graph.edges:
        labels.setdefault((u, w), set()).add(a)
    for (u, w), acts in labels.items():
        G.add_edge(u, w, acts=frozenset(acts))
    return G


def isomorphic(g1, g2):
    import networkx as nx

    return nx.is_isomorphic(graph_to_nx(g1), graph_to_nx(g2),
                            node_match=lambda x, y: x["initial"] == y["initial"],
                            edge_match=lambda x, y: x["acts"] == y["acts"])


def random_instance(seed):
    """Desk-scale random model: |S| in 2..4, |A| in 1..2, |O| in 1..3."""
    from pomdp_limavg.generators import random_pomdp

    rng = np.random.default_rng(seed)
    return random_pomdp(seed, n_states=int(rng.integers(2, 5)), n_actions=int(rng.integers(1, 3)),
                        n_obs=int(rng.integers(1, 4)), max_support=int(rng.integers(1, 4)),
                        p_reward_one=0.7)


def oracle_search(model):
    """bounded_oracle over k = 1, 2 (all support patterns) and k = 3 (pure)."""
    from pomdp_limavg import bounded_oracle

    for k, support_only, budget in ((1, True, 20_000), (2, True, 20_000), (3, False, 20_000)):
        res = bounded_oracle(model, k, support_only=support_only, budget=budget)
        if res.found:
            return res
    return res
