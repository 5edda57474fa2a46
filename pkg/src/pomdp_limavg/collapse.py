"""Memory annotations, the collapsed graph and the collapsed strategy.

Every memory element ``m`` of a strategy is annotated with three bitmasks
over states/actions: W (states ``s`` with ``(s, m)`` almost-sure winning for
LimAvg=1), R (states with ``(s, m)`` recurrent) and A (support of the action
distribution at ``m``).  The collapsed strategy keeps only the belief and
these annotations as memory.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .chain import bottom_sccs, full_product_chain
from .model import (REWARD_ONE_TOL, Distribution, FiniteStrategy, Pomdp, bits,
                    require_valid)


@dataclass(frozen=True, order=True)
class MemoryAnnotation:
    """Collapsed-graph vertex (Y, W, R, A); all four components are bitmasks.

    Field order doubles as the canonical lexicographic order.
    """

    belief: int
    winning: int
    recurrent: int
    actions: int

    def label(self) -> str:
        return f"y{self.belief:x}w{self.winning:x}r{self.recurrent:x}a{self.actions:x}"

    def describe(self, model: Pomdp) -> str:
        def names(mask, table):
            return "{" + ",".join(table[i] for i in bits(mask)) + "}"
        return (f"Y={names(self.belief, model.states)} W={names(self.winning, model.states)} "
                f"R={names(self.recurrent, model.states)} A={names(self.actions, model.actions)}")


def memory_bound(model: Pomdp) -> int:
    return 2 ** (3 * model.n_states + model.n_actions)


def annotate(model: Pomdp, sigma: FiniteStrategy) -> list:
    """``(W, R, A)`` bitmask triple for every memory element of ``sigma``.

    W and R are evaluated on the product over all of S x M, so pairs that are
    unreachable from the initial configuration get their own answer.
    """
    require_valid(model, sigma)
    chain = full_product_chain(model, sigma, check=False)
    classes = bottom_sccs(chain)
    recurrent = set()
    losing = set()
    for cls in classes:
        recurrent |= cls
        for n in cls:
            s, m = chain.nodes[n]
            if any(model.reward[s][a] < 1.0 - REWARD_ONE_TOL for a in sigma.next_action[m].support):
                losing |= cls
                break
    # a node is winning iff it cannot reach a losing recurrent class
    pred = chain.predecessors()
    doomed = set(losing)
    queue = list(losing)
    while queue:
        v = queue.pop()
        for u in pred[v]:
            if u not in doomed:
                doomed.add(u)
                queue.append(u)
    W = [0] * sigma.size
    R = [0] * sigma.size
    for n, (s, m) in enumerate(chain.nodes):
        if n not in doomed:
            W[m] |= 1 << s
        if n in recurrent:
            R[m] |= 1 << s
    return [(W[m], R[m], sigma.action_support(m)) for m in range(sigma.size)]


@dataclass
class CollapsedGraph:
    vertices: list          # sorted MemoryAnnotation list
    initial: MemoryAnnotation
    edges: set              # {(MemoryAnnotation, action index, MemoryAnnotation)}

    def successors(self, v, a=None):
        return sorted({w for (u, b, w) in self.edges if u == v and (a is None or b == a)})

    def to_dot(self, model: Pomdp) -> str:
        ids = {v: i for i, v in enumerate(self.vertices)}
        out = ["digraph collapsed {", "  rankdir=LR;"]
        for v in self.vertices:
            shape = "doublecircle" if v == self.initial else "box"
            out.append(f'  v{ids[v]} [shape={shape}, label="{v.describe(model)}"];')
        for u, a, w in sorted(self.edges):
            out.append(f'  v{ids[u]} -> v{ids[w]} [label="{model.actions[a]}"];')
        out.append("}")
        return "\n".join(out) + "\n"


def collapsed_graph(model: Pomdp, sigma: FiniteStrategy, annotation=None) -> CollapsedGraph:
    """Collapsed graph restricted to vertices reachable from
    ({s0}, W(m0), R(m0), A(m0))."""
    if annotation is None:
        annotation = annotate(model, sigma)
    by_ann = {}
    for m, ann in enumerate(annotation):
        by_ann.setdefault(ann, []).append(m)
    init = MemoryAnnotation(1 << model.initial, *annotation[sigma.initial_memory])
    seen = {init}
    edges = set()
    queue = deque([init])
    while queue:
        v = queue.popleft()
        for m in by_ann[(v.winning, v.recurrent, v.actions)]:
            for a in sigma.next_action[m].support:
                post = model.post(v.belief, a)
                for o, omask in enumerate(model.obs_mask):
                    y2 = post & omask
                    if not y2:
                        continue
                    for m2 in sigma.update[(m, o, a)].support:
                        w = MemoryAnnotation(y2, *annotation[m2])
                        edges.add((v, a, w))
                        if w not in seen:
                            seen.add(w)
                            queue.append(w)
    return CollapsedGraph(sorted(seen), init, edges)


def strategy_from_graph(model: Pomdp, graph: CollapsedGraph, name="collapsed") -> FiniteStrategy:
    """Uniform next-action over the labels of outgoing edges, uniform memory
    update over the matching edge targets.  Triples with no matching edge
    (unused by the strategy) keep the memory unchanged."""
    verts = graph.vertices
    idx = {v: i for i, v in enumerate(verts)}
    out = {}
    for u, a, w in graph.edges:
        out.setdefault((idx[u], a), set()).add(idx[w])
    next_action = []
    for i in range(len(verts)):
        acts = sorted(a for (j, a) in out if j == i)
        next_action.append(Distribution.uniform(acts))
    update = {}
    for i, v in enumerate(verts):
        for a in range(model.n_actions):
            targets = out.get((i, a), ())
            for o, omask in enumerate(model.obs_mask):
                ts = sorted(t for t in targets if verts[t].belief & ~omask == 0)
                update[(i, o, a)] = Distribution.uniform(ts) if ts else Distribution.point(i)
    return FiniteStrategy(tuple(v.label() for v in verts), idx[graph.initial], tuple(next_action),
                          update, model.actions, model.observations, name=name)


def collapsed_strategy(model: Pomdp, sigma: FiniteStrategy) -> FiniteStrategy:
    return strategy_from_graph(model, collapsed_graph(model, sigma), name=f"{sigma.name}-collapsed")
