from oracles import collapsed_violations, isomorphic, load_model, load_strategy, winning_pairs
from pomdp_limavg import (Pomdp, annotate, certify_limavg1, collapsed_graph, collapsed_strategy,
                          memory_bound, memoryless_strategy)
from pomdp_limavg.chain import bottom_sccs, full_product_chain
from pomdp_limavg.collapse import strategy_from_graph
from pomdp_limavg.generators import random_pomdp, random_strategy
from pomdp_limavg.model import Distribution, FiniteStrategy


def test_annotate_all_rewards_one():
    for seed in range(10):
        m = random_pomdp(seed, n_states=4, p_reward_one=1.0)
        sigma = random_strategy(seed, m, memory=3)
        c = full_product_chain(m, sigma)
        rec = set().union(*bottom_sccs(c))
        full = (1 << m.n_states) - 1
        for mem, (W, R, A) in enumerate(annotate(m, sigma)):
            assert W == full
            assert R == sum(1 << s for i, (s, mm) in enumerate(c.nodes) if mm == mem and i in rec)
            assert A == sigma.action_support(mem)


def test_annotate_recurrent_winning_node():
    m = Pomdp.build(["s", "t"], ["a"], {("s", "a"): {"t": 1.0}, ("t", "a"): {"t": 1.0}},
                    initial="s", rewards={("t", "a"): 1.0})
    [(W, R, A)] = annotate(m, memoryless_strategy(m, {"a": 1}))
    assert W == 0b11 and R == 0b10 and A == 0b1


def test_annotate_w_successor_closed():
    for _, m, sigma in winning_pairs(40):
        ann = annotate(m, sigma)
        c = full_product_chain(m, sigma)
        for i, (s, mem) in enumerate(c.nodes):
            if ann[mem][0] >> s & 1:
                for j in c.successors(i):
                    t, m2 = c.nodes[j]
                    assert ann[m2][0] >> t & 1


def test_one_state_graph():
    m = Pomdp.build(["s"], ["a", "b"], {("s", "a"): {"s": 1.0}, ("s", "b"): {"s": 1.0}},
                    initial="s", rewards={("s", "a"): 1.0, ("s", "b"): 1.0})
    g = collapsed_graph(m, memoryless_strategy(m, {"a": 0.5, "b": 0.5}))
    assert len(g.vertices) == 1
    v = g.initial
    assert g.edges == {(v, 0, v), (v, 1, v)}


def test_identical_annotations_merge():
    m = Pomdp.build(["s"], ["a"], {("s", "a"): {"s": 1.0}}, initial="s", rewards={("s", "a"): 1.0})
    sigma = FiniteStrategy(("p", "q"), 0, (Distribution.point(0), Distribution.point(0)),
                           {(0, 0, 0): Distribution.point(1), (1, 0, 0): Distribution.point(0)},
                           m.actions, m.observations)
    g = collapsed_graph(m, sigma)
    assert len(g.vertices) == 1


def test_vertex_bound_and_edge_actions():
    for seed in range(50):
        m = random_pomdp(seed, n_states=4)
        sigma = random_strategy(seed, m, memory=3)
        g = collapsed_graph(m, sigma)
        assert len(g.vertices) <= memory_bound(m)
        for u, a, w in g.edges:
            assert u.actions >> a & 1
            assert w.belief


def test_example1_collapse():
    m = load_model("example1.pomdp")
    sigma = load_strategy("alternate.strat", m)
    g = collapsed_graph(m, sigma)
    cs = strategy_from_graph(m, g)
    assert certify_limavg1(m, cs).winning
    assert collapsed_violations(m, g, cs) == []
    g2 = collapsed_graph(m, cs)
    assert isomorphic(g2, collapsed_graph(m, strategy_from_graph(m, g2)))


def test_collapse_preserves_winning():
    for _, m, sigma in winning_pairs(60, start=500):
        g = collapsed_graph(m, sigma)
        cs = strategy_from_graph(m, g)
        assert cs.size <= memory_bound(m)
        assert certify_limavg1(m, cs).winning
        assert collapsed_violations(m, g, cs) == []


def test_iterated_collapse_stabilizes():
    for _, m, sigma in winning_pairs(40, start=2000):
        g = collapsed_graph(m, collapsed_strategy(m, sigma))
        for _ in range(4):
            nxt = collapsed_graph(m, strategy_from_graph(m, g))
            if isomorphic(g, nxt):
                break
            g = nxt
        else:
            raise AssertionError("iterated collapse did not stabilize")


def test_collapsed_strategy_uniform_choices():
    m = load_model("example1.pomdp")
    cs = collapsed_strategy(m, load_strategy("alternate.strat", m))
    for d in list(cs.next_action) + list(cs.update.values()):
        probs = set(round(p, 12) for p in d.values())
        assert len(probs) == 1
