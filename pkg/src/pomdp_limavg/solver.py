"""Decision procedure for finite-memory almost-sure LimAvg=1.

The input POMDP is multiplied with the space of memory annotations
(Y, W, R, A).  A node of the resulting belief-observation POMDP is a pair
``(s, v)`` with ``s`` in the belief ``v.belief``; the annotation ``v`` is the
observation.  A composite action at ``v`` picks a base action ``a`` and, for
every observation ``o`` that can follow, a successor annotation.  The
successor choices are independent per observation, so they are stored per
``(v, a, o)`` as a shared *hub*: the up-closed set of annotations compatible
with the bits forced by ``v`` and ``a``.

Two annotation spaces are supported:

``reduced`` (default)
    W is all-ones on the belief and A is the full action set; only Y and R
    vary.  Every strategy of the exact space maps onto this one with the same
    target set (R := W and R), so the decision is unchanged.
``exact``
    W, R range over all subsets of Y and A over all non-empty action sets.
    Exponentially larger; intended for small models and cross-checks.
"""
from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

from .chain import Certificate, certify_limavg1
from .collapse import MemoryAnnotation
from .errors import CapacityError, InternalError
from .model import (Distribution, FiniteStrategy, Pomdp, bits, popcount,
                    require_valid, submasks)

DEFAULT_NODE_CAP = 10 ** 6
PRE_INITIAL = -1


@dataclass(eq=False)
class BeliefObsPomdp:
    """Reachable part of the belief-observation POMDP.

    ``annotations[v]`` is observation ``v``; its nodes are ``(s, v)`` for
    ``s`` in the belief.  ``moves[v]`` maps each base action that passes the
    reward clause to a tuple of ``(o, hub)`` pairs, one per observation that
    can follow.  ``hubs[h]`` is ``(Y', forced W, forced R)`` and
    ``hub_cands[h]`` lists the annotation indices compatible with it.
    ``initial_choices`` are the annotations the pre-initial node may move to.
    ``alive`` (None = everything) restricts the POMDP to a set of observations.
    """

    model: Pomdp
    mode: str
    annotations: list
    index: dict
    moves: list
    hubs: list
    hub_cands: list
    initial_choices: list
    n_nodes: int
    n_edges: int
    alive: Optional[frozenset] = None

    def observations(self):
        if self.alive is None:
            return range(len(self.annotations))
        return sorted(self.alive)

    def restrict(self, alive) -> "BeliefObsPomdp":
        return replace(self, alive=frozenset(alive))

    def nodes(self, v):
        return [(s, v) for s in bits(self.annotations[v].belief)]

    def all_nodes(self):
        out = [(PRE_INITIAL, PRE_INITIAL)]
        for v in self.observations():
            out.extend(self.nodes(v))
        return out

    def target_mask(self, v) -> int:
        ann = self.annotations[v]
        return ann.belief & ann.winning & ann.recurrent

    def target(self) -> dict:
        """Winning collapsed-recurrent nodes, as ``{v: state mask}``."""
        out = {}
        for v in self.observations():
            t = self.target_mask(v)
            if t:
                out[v] = t
        return out

    def successor_annotations(self, v, a, o, alive=None):
        alive = self.alive if alive is None else alive
        for o2, h in self.moves[v].get(a, ()):
            if o2 == o:
                return [c for c in self.hub_cands[h] if alive is None or c in alive]
        return []

    def allowed_actions(self, v, alive) -> list:
        """Base actions at ``v`` for which every following observation has a
        successor annotation inside ``alive``."""
        out = []
        for a, pairs in self.moves[v].items():
            if all(any(c in alive for c in self.hub_cands[h]) for _, h in pairs):
                out.append(a)
        return out

    def step_support(self, s, v, a, alive):
        """Successor nodes of ``(s, v)`` under the uniform mix of composite
        actions with base action ``a`` that stay inside ``alive``."""
        model = self.model
        hub_of = dict(self.moves[v][a])
        out = []
        for t in bits(model.succ_mask[s][a]):
            for c in self.hub_cands[hub_of[model.obs_of[t]]]:
                if c in alive:
                    out.append((t, c))
        return out


def _initial_annotations(model: Pomdp, mode: str):
    s0 = 1 << model.initial
    full_actions = (1 << model.n_actions) - 1
    if mode == "reduced":
        return [MemoryAnnotation(s0, s0, r, full_actions) for r in (0, s0)]
    return [MemoryAnnotation(s0, s0, r, A) for r in (0, s0) for A in range(1, full_actions + 1)]


def _candidates(y2, fw, fr, n_actions, mode):
    full_actions = (1 << n_actions) - 1
    free_r = y2 & ~fr
    r_opts = sorted((fr | x for x in submasks(free_r)), key=lambda r: (popcount(r), r))
    if mode == "reduced":
        return [MemoryAnnotation(y2, y2, r, full_actions) for r in r_opts]
    free_w = y2 & ~fw
    w_opts = sorted((fw | x for x in submasks(free_w)), key=lambda w: (popcount(w), w))
    return [MemoryAnnotation(y2, w, r, A)
            for w in w_opts for r in r_opts for A in range(1, full_actions + 1)]


def build_belief_obs(model: Pomdp, mode: str = "reduced", node_cap: int = DEFAULT_NODE_CAP) -> BeliefObsPomdp:
    """On-the-fly construction of the part reachable from the pre-initial node.

    Raises CapacityError once more than ``node_cap`` nodes are materialised.
    """
    if mode not in ("reduced", "exact"):
        raise ValueError(f"unknown mode {mode!r}")
    require_valid(model)
    n_actions = model.n_actions
    annotations, index, moves = [], {}, []
    hubs, hub_index, hub_cands = [], {}, []
    n_nodes = 0
    n_edges = 0
    queue = deque()

    def intern(ann):
        nonlocal n_nodes
        i = index.get(ann)
        if i is None:
            i = index[ann] = len(annotations)
            annotations.append(ann)
            moves.append(None)
            queue.append(i)
            n_nodes += popcount(ann.belief)
            if n_nodes > node_cap:
                raise CapacityError(
                    f"belief-observation construction exceeded {node_cap} nodes "
                    f"({len(annotations)} annotations, mode={mode})")
        return i

    initial_choices = [intern(a) for a in _initial_annotations(model, mode)]
    reward_one = model.reward_one
    while queue:
        v = queue.popleft()
        ann = annotations[v]
        Y = ann.belief
        wr = Y & ann.winning & ann.recurrent
        table = {}
        for a in bits(ann.actions):
            if wr & ~reward_one[a]:
                continue  # a state committed to reward 1 would see a smaller reward
            post = fw = fr = 0
            for s in bits(Y):
                succ = model.succ_mask[s][a]
                post |= succ
                if ann.winning >> s & 1:
                    fw |= succ
                if ann.recurrent >> s & 1:
                    fr |= succ
            pairs = []
            for o, omask in enumerate(model.obs_mask):
                y2 = post & omask
                if not y2:
                    continue
                key = (y2, fw & y2, fr & y2)
                h = hub_index.get(key)
                if h is None:
                    h = hub_index[key] = len(hubs)
                    hubs.append(key)
                    hub_cands.append([intern(c) for c in _candidates(*key, n_actions, mode)])
                pairs.append((o, h))
                n_edges += len(hub_cands[h])
            table[a] = tuple(pairs)
        moves[v] = table
    return BeliefObsPomdp(model, mode, annotations, index, moves, hubs, hub_cands,
                          initial_choices, n_nodes, n_edges)


def prune_consistent(g: BeliefObsPomdp, order: str = "forward") -> BeliefObsPomdp:
    """Restrict ``g`` to the largest set of observations in which every
    observation keeps at least one base action whose successor choices all
    stay inside the set."""
    alive = set(g.observations())
    hub_users = [[] for _ in g.hubs]
    hub_live = [0] * len(g.hubs)
    live_actions = {}
    for v in alive:
        live_actions[v] = set(g.moves[v])
        for a, pairs in g.moves[v].items():
            for _, h in pairs:
                hub_users[h].append((v, a))
    cand_hubs = [[] for _ in g.annotations]
    for h, cands in enumerate(g.hub_cands):
        for c in cands:
            if c in alive:
                hub_live[h] += 1
                cand_hubs[c].append(h)
    queue = deque(v for v in g.observations() if not live_actions[v])
    if order == "reverse":
        queue = deque(reversed(queue))
    removed = set()
    while queue:
        v = queue.popleft()
        if v in removed:
            continue
        removed.add(v)
        for h in cand_hubs[v]:
            hub_live[h] -= 1
            if hub_live[h] == 0:
                users = hub_users[h] if order == "forward" else reversed(hub_users[h])
                for u, a in users:
                    if u in removed:
                        continue
                    live_actions[u].discard(a)
                    if not live_actions[u]:
                        queue.append(u)
    return g.restrict(alive - removed)


def _uniform_chain_failures(g: BeliefObsPomdp, alive: set, target: dict) -> set:
    """Observations containing a node that does not reach ``target`` with
    probability 1 under uniform play of the allowed composite actions.

    The chain is encoded with intermediate hub vertices ``(t, hub)`` so that
    edges stay linear in the size of the construction.
    """
    model = g.model
    vid = {}
    owner = []
    pred = []

    def vertex(key, obs):
        i = vid.get(key)
        if i is None:
            i = vid[key] = len(owner)
            owner.append(obs)
            pred.append([])
        return i

    targets = []
    for v in alive:
        tmask = target.get(v, 0)
        allowed = g.allowed_actions(v, alive)
        for s in bits(g.annotations[v].belief):
            x = vertex((s, v), v)
            if tmask >> s & 1:
                targets.append(x)
                continue
            for a in allowed:
                hub_of = dict(g.moves[v][a])
                for t in bits(model.succ_mask[s][a]):
                    h = hub_of[model.obs_of[t]]
                    hv_new = ("h", t, h) not in vid
                    hv = vertex(("h", t, h), None)
                    pred[hv].append(x)
                    if hv_new:
                        for c in g.hub_cands[h]:
                            if c in alive:
                                pred[vertex((t, c), c)].append(hv)
    can = set(targets)
    stack = list(targets)
    while stack:
        x = stack.pop()
        for u in pred[x]:
            if u not in can:
                can.add(u)
                stack.append(u)
    fail = [x for x in range(len(owner)) if x not in can]
    failed = set(fail)
    stack = list(fail)
    while stack:
        x = stack.pop()
        for u in pred[x]:
            if u not in failed:
                failed.add(u)
                stack.append(u)
    return {owner[x] for x in failed if owner[x] is not None}


@dataclass
class ReachResult:
    observations: frozenset
    iterations: int
    history: list


def almost_sure_reach_obs(g: BeliefObsPomdp, target: Optional[dict] = None) -> ReachResult:
    """Greatest fixpoint of observation sets from which uniform play of the
    composite actions that never leave the set reaches ``target`` with
    probability 1.

    ``target`` maps observation index to a bitmask of target states; the
    default is the set of winning collapsed-recurrent nodes.
    """
    if target is None:
        target = g.target()
    alive = set(g.observations())
    history = [len(alive)]
    iterations = 0
    while True:
        iterations += 1
        alive = set(prune_consistent(g.restrict(alive)).alive)
        bad = _uniform_chain_failures(g, alive, target)
        alive -= bad
        history.append(len(alive))
        if not bad:
            break
    return ReachResult(frozenset(alive), iterations, history)


@dataclass
class SolveResult:
    decision: str                      # "YES" or "NO"
    strategy: Optional[FiniteStrategy]
    certificate: Optional[Certificate]
    annotations: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def winning(self) -> bool:
        return self.decision == "YES"

    def to_dict(self) -> dict:
        return {
            "decision": self.decision,
            "memory_size": self.strategy.size if self.strategy else 0,
            "node_count": self.stats.get("nodes", 0),
            "iterations": self.stats.get("iterations", 0),
            "certificate": self.certificate.to_dict() if self.certificate else None,
            "wall_ms": self.stats.get("wall_ms", 0.0),
            "stats": self.stats,
        }


def extract_strategy(g: BeliefObsPomdp, alive, start: int, name="synthesized"):
    """Finite-memory strategy whose memory is the set of surviving
    annotations reachable from ``start``."""
    model = g.model
    alive = set(alive)
    seen = {start}
    queue = deque([start])
    allowed = {}
    while queue:
        v = queue.popleft()
        allowed[v] = g.allowed_actions(v, alive)
        for a in allowed[v]:
            for _, h in g.moves[v][a]:
                for c in g.hub_cands[h]:
                    if c in alive and c not in seen:
                        seen.add(c)
                        queue.append(c)
    order = sorted(seen, key=lambda v: g.annotations[v])
    pos = {v: i for i, v in enumerate(order)}
    next_action = tuple(Distribution.uniform(allowed[v]) for v in order)
    update = {}
    for v in order:
        i = pos[v]
        for a in range(model.n_actions):
            hub_of = dict(g.moves[v].get(a, ())) if a in allowed[v] else {}
            for o in range(model.n_observations):
                h = hub_of.get(o)
                targets = [pos[c] for c in g.hub_cands[h] if c in alive] if h is not None else []
                update[(i, o, a)] = Distribution.uniform(sorted(targets)) if targets else Distribution.point(i)
    anns = [g.annotations[v] for v in order]
    sigma = FiniteStrategy(tuple(x.label() for x in anns), pos[start], next_action, update,
                           model.actions, model.observations, name=name)
    return sigma, anns


def solve_limavg1(model: Pomdp, mode: str = "reduced", node_cap: int = DEFAULT_NODE_CAP) -> SolveResult:
    """Decide whether a finite-memory almost-sure winning strategy for
    LimAvg=1 exists; on YES, return one together with its certificate."""
    t0 = time.perf_counter()
    g = build_belief_obs(model, mode=mode, node_cap=node_cap)
    consistent = prune_consistent(g)
    reach = almost_sure_reach_obs(consistent)
    stats = {
        "mode": mode,
        "annotations": len(g.annotations),
        "nodes": g.n_nodes + 1,
        "edges": g.n_edges,
        "hubs": len(g.hubs),
        "consistent": len(consistent.alive),
        "winning_observations": len(reach.observations),
        "iterations": reach.iterations,
        "history": reach.history,
    }
    starts = sorted((v for v in g.initial_choices if v in reach.observations),
                    key=lambda v: g.annotations[v])
    if not starts:
        stats["wall_ms"] = (time.perf_counter() - t0) * 1e3
        return SolveResult("NO", None, None, [], stats)
    sigma, anns = extract_strategy(g, reach.observations, starts[0], name=f"{model.name}-limavg1")
    cert = certify_limavg1(model, sigma)
    stats["memory_size"] = sigma.size
    stats["wall_ms"] = (time.perf_counter() - t0) * 1e3
    if not cert.winning:
        raise InternalError(f"synthesized strategy failed certification: {cert.witness}")
    return SolveResult("YES", sigma, cert, anns, stats)
