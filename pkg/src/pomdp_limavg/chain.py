"""Finite Markov chains: product construction, recurrent classes,
probability-1 reachability, stationary distributions and the certifiers
for LimAvg=1 and LimAvg>lambda under a finite-memory strategy.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NumericalError
from .model import REWARD_ONE_TOL, FiniteStrategy, Pomdp, require_valid

RESIDUAL_TOL = 1e-10
STRICT_MARGIN = 1e-9


@dataclass(eq=False)
class MarkovChain:
    """Chain over indexed nodes.

    ``nodes[i]`` is the payload of node ``i`` (a ``(state, memory)`` pair for
    product chains); ``step[i]`` maps successor index to probability.
    """

    nodes: list
    step: list
    node_reward: list
    index: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {p: i for i, p in enumerate(self.nodes)}

    def __len__(self):
        return len(self.nodes)

    def successors(self, i):
        return self.step[i].keys()

    def predecessors(self):
        pred = [[] for _ in self.nodes]
        for i, row in enumerate(self.step):
            for j in row:
                pred[j].append(i)
        return pred

    def matrix(self, members=None) -> np.ndarray:
        members = list(range(len(self))) if members is None else sorted(members)
        pos = {n: k for k, n in enumerate(members)}
        P = np.zeros((len(members), len(members)))
        for n in members:
            for j, p in self.step[n].items():
                if j in pos:
                    P[pos[n], pos[j]] += p
        return P

    @classmethod
    def from_matrix(cls, P, rewards=None):
        P = np.asarray(P, dtype=float)
        n = P.shape[0]
        step = [{j: float(P[i, j]) for j in range(n) if P[i, j] > 0} for i in range(n)]
        rewards = [0.0] * n if rewards is None else [float(r) for r in rewards]
        return cls(list(range(n)), step, rewards)


def product_chain(model: Pomdp, sigma: FiniteStrategy, roots=None, check=True) -> MarkovChain:
    """Chain induced by ``sigma`` on ``model``, restricted to the nodes
    reachable from ``roots`` (default: the initial pair)."""
    if check:
        require_valid(model, sigma)
    if roots is None:
        roots = [(model.initial, sigma.initial_memory)]
    nodes, step, rew = [], [], []
    index = {}
    queue = deque()
    for r in roots:
        if r not in index:
            index[r] = len(nodes)
            nodes.append(r)
            queue.append(r)
    T, obs, R = model.transition, model.obs_of, model.reward
    while queue:
        s, m = queue.popleft()
        row = {}
        r = 0.0
        for a, pa in sigma.next_action[m].items():
            r += pa * R[s][a]
            for t, pt in T[s][a].items():
                for m2, pm in sigma.update[(m, obs[t], a)].items():
                    key = (t, m2)
                    j = index.get(key)
                    if j is None:
                        j = index[key] = len(nodes)
                        nodes.append(key)
                        queue.append(key)
                    row[j] = row.get(j, 0.0) + pa * pt * pm
        step.append(row)
        rew.append(r)
    return MarkovChain(nodes, step, rew, index)


def full_product_chain(model: Pomdp, sigma: FiniteStrategy, check=True) -> MarkovChain:
    """Product chain over all of S x M, not only the reachable part."""
    roots = [(s, m) for m in range(sigma.size) for s in range(model.n_states)]
    return product_chain(model, sigma, roots=roots, check=check)


# -- graph algorithms -------------------------------------------------------

def strongly_connected_components(n, succ):
    """Tarjan's algorithm, iterative.  ``succ(v)`` yields successor indices.

    Components are returned in reverse topological order (sinks first).
    """
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack, comps = [], []
    counter = 0
    for root in range(n):
        if index[root] >= 0:
            continue
        work = [(root, iter(succ(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if index[w] < 0:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, iter(succ(w))))
                    advanced = True
                    break
                if on_stack[w] and index[w] < low[v]:
                    low[v] = index[w]
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                if low[v] < low[u]:
                    low[u] = low[v]
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(comp)
    return comps


def bottom_components(n, succ):
    comps = strongly_connected_components(n, succ)
    where = [0] * n
    for k, c in enumerate(comps):
        for v in c:
            where[v] = k
    out = []
    for k, c in enumerate(comps):
        if all(where[w] == k for v in c for w in succ(v)):
            out.append(frozenset(c))
    return out


def bottom_sccs(chain: MarkovChain) -> list:
    """Recurrent classes (bottom SCCs of the support graph), ordered by their
    smallest node index."""
    classes = bottom_components(len(chain), chain.successors)
    return sorted(classes, key=min)


def _forward(chain, start):
    seen = {start}
    queue = [start]
    while queue:
        v = queue.pop()
        for w in chain.step[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def reachable_recurrent(chain: MarkovChain, start: int, classes=None) -> list:
    if classes is None:
        classes = bottom_sccs(chain)
    seen = _forward(chain, start)
    return [c for c in classes if next(iter(c)) in seen]


def almost_sure_reach_mc(chain: MarkovChain, target) -> set:
    """Nodes from which ``target`` is reached with probability 1.

    A node qualifies iff every node reachable from it without passing
    through ``target`` can still reach ``target``.
    """
    target = set(target)
    pred = chain.predecessors()
    can = set(target)
    queue = list(target)
    while queue:
        v = queue.pop()
        for u in pred[v]:
            if u not in can:
                can.add(u)
                queue.append(u)
    fail = set(range(len(chain))) - can
    queue = list(fail)
    while queue:
        v = queue.pop()
        for u in pred[v]:
            if u not in fail and u not in target:
                fail.add(u)
                queue.append(u)
    return set(range(len(chain))) - fail


def stationary_distribution(chain: MarkovChain, cls) -> dict:
    """Stationary distribution of the chain restricted to the recurrent class
    ``cls``, as ``{node: probability}``."""
    members = sorted(cls)
    n = len(members)
    if n == 1:
        return {members[0]: 1.0}
    P = chain.matrix(members)
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular stationary system: {exc}", residual=float("inf")) from exc
    residual = float(np.max(np.abs(pi @ P - pi)))
    if residual > RESIDUAL_TOL or abs(pi.sum() - 1.0) > RESIDUAL_TOL or np.any(pi <= 0):
        raise NumericalError(f"stationary solve residual {residual:.3g}", residual=residual)
    return {m: float(x) for m, x in zip(members, pi)}


def class_mean_payoff(chain: MarkovChain, cls) -> float:
    pi = stationary_distribution(chain, cls)
    return float(sum(p * chain.node_reward[n] for n, p in pi.items()))


# -- certificates -----------------------------------------------------------

@dataclass
class Certificate:
    winning: bool
    objective: str
    witness: dict
    summary: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"winning": self.winning, "objective": self.objective,
                "witness": self.witness, "summary": self.summary}

    def to_text(self) -> str:
        lines = [f"objective: {self.objective}",
                 f"winning: {'yes' if self.winning else 'no'}"]
        for k, v in self.summary.items():
            lines.append(f"{k}: {v}")
        for k, v in self.witness.items():
            lines.append(f"witness.{k}: {v}")
        return "\n".join(lines) + "\n"


def _node_label(model, sigma, chain, n):
    s, m = chain.nodes[n]
    return {"state": model.states[s], "memory": sigma.memory[m]}


def certify_limavg1(model: Pomdp, sigma: FiniteStrategy, chain: Optional[MarkovChain] = None) -> Certificate:
    """Almost-sure LimAvg=1 check: every action played with positive
    probability inside a reachable recurrent class must have reward 1."""
    if chain is None:
        chain = product_chain(model, sigma)
    classes = bottom_sccs(chain)
    summary = {"chain_nodes": len(chain), "recurrent_classes": len(classes),
               "memory_size": sigma.size}
    for k, cls in enumerate(classes):
        for n in sorted(cls):
            s, m = chain.nodes[n]
            for a in sorted(sigma.next_action[m].support):
                if model.reward[s][a] < 1.0 - REWARD_ONE_TOL:
                    witness = _node_label(model, sigma, chain, n)
                    witness.update(action=model.actions[a], reward=model.reward[s][a],
                                   recurrent_class=k, class_size=len(cls))
                    return Certificate(False, "LimAvg=1", witness, summary)
    summary["recurrent_nodes"] = sum(len(c) for c in classes)
    return Certificate(True, "LimAvg=1", {}, summary)


def certify_limavg_gt(model: Pomdp, sigma: FiniteStrategy, lam: float,
                      chain: Optional[MarkovChain] = None) -> Certificate:
    """Almost-sure LimAvg>lam check: every reachable recurrent class must
    have mean payoff above ``lam`` by more than ``STRICT_MARGIN``."""
    if not 0.0 < lam < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {lam}")
    if chain is None:
        chain = product_chain(model, sigma)
    classes = bottom_sccs(chain)
    table = []
    failing = None
    for k, cls in enumerate(classes):
        mean = class_mean_payoff(chain, cls)
        table.append({"class": k, "size": len(cls), "mean_payoff": mean})
        if failing is None and not mean > lam + STRICT_MARGIN:
            failing = k
    summary = {"chain_nodes": len(chain), "recurrent_classes": len(classes),
               "memory_size": sigma.size, "class_means": table}
    objective = f"LimAvg>{lam:g}"
    if failing is not None:
        n = min(classes[failing])
        witness = {"recurrent_class": failing, "mean_payoff": table[failing]["mean_payoff"],
                   **_node_label(model, sigma, chain, n)}
        return Certificate(False, objective, witness, summary)
    return Certificate(True, objective, {}, summary)
