import time

import numpy as np
import pytest

from oracles import load_model, oracle_search, random_instance, reach_obs_by_chain
from pomdp_limavg import (CapacityError, Pomdp, almost_sure_reach_obs,
                          build_belief_obs, certify_limavg1, prune_consistent, solve_limavg1)
from pomdp_limavg.chain import product_chain
from pomdp_limavg.generators import random_pomdp
from pomdp_limavg.model import Belief, belief_update, bits, initial_belief


def fixtures():
    yield load_model("example1.pomdp")
    for seed in (3, 8, 21):
        yield random_pomdp(seed, n_states=4, n_actions=2, n_obs=2, max_support=3)


def test_single_state_build():
    m = Pomdp.build(["s"], ["a"], {("s", "a"): {"s": 1.0}}, initial="s", rewards={("s", "a"): 1.0})
    g = build_belief_obs(m)
    assert any(g.target_mask(v) for v in g.initial_choices)
    assert solve_limavg1(m).winning


def test_nodes_inside_belief():
    for m in fixtures():
        for mode in ("reduced", "exact"):
            g = build_belief_obs(m, mode=mode)
            for s, v in g.all_nodes()[1:]:
                assert g.annotations[v].belief >> s & 1


def test_belief_observation_property_sampling():
    rng = np.random.default_rng(5)
    for m in fixtures():
        g = build_belief_obs(m)
        for _ in range(1000):
            v = int(rng.choice(g.initial_choices))
            s = m.initial
            b = initial_belief(m)
            assert b.bits == g.annotations[v].belief
            for _ in range(int(rng.integers(1, 12))):
                acts = sorted(g.moves[v])
                if not acts:
                    break
                a = acts[int(rng.integers(len(acts)))]
                choice = {o: g.hub_cands[h][int(rng.integers(len(g.hub_cands[h])))]
                          for o, h in g.moves[v][a]}
                d = m.transition[s][a]
                ts = sorted(d)
                s = ts[int(rng.choice(len(ts), p=[d[t] for t in ts]))]
                v = choice[m.obs_of[s]]
                b = belief_update(m, b, a, m.obs_of[s])
                assert b == Belief(g.annotations[v].belief)


def test_prune_all_rewards_one_keeps_everything():
    m = random_pomdp(4, n_states=4, p_reward_one=1.0)
    g = build_belief_obs(m)
    assert prune_consistent(g).alive == frozenset(range(len(g.annotations)))


def test_prune_clause_c2():
    m = Pomdp.build(["s"], ["a", "b"], {("s", "a"): {"s": 1.0}, ("s", "b"): {"s": 1.0}},
                    initial="s")
    g = build_belief_obs(m)
    committed = [v for v in g.initial_choices if g.target_mask(v)]
    assert committed and not any(g.moves[v] for v in committed)
    alive = prune_consistent(g).alive
    assert not set(committed) & alive
    assert solve_limavg1(m).decision == "NO"


def test_prune_order_independent():
    for seed in range(60):
        g = build_belief_obs(random_instance(seed))
        assert prune_consistent(g, "forward").alive == prune_consistent(g, "reverse").alive


def test_reach_all_target():
    m = random_pomdp(9, n_states=4)
    g = prune_consistent(build_belief_obs(m))
    everything = {v: g.annotations[v].belief for v in g.observations()}
    assert almost_sure_reach_obs(g, everything).observations == g.alive


def test_reach_unreachable_target_excluded():
    m = Pomdp.build(["s", "t"], ["a"], {("s", "a"): {"s": 1.0}, ("t", "a"): {"t": 1.0}},
                    initial="s", rewards={("t", "a"): 1.0}, obs_of={"s": "o", "t": "p"})
    g = build_belief_obs(m)
    res = almost_sure_reach_obs(g)
    assert not set(g.initial_choices) & res.observations


def test_reach_matches_explicit_chain_fixpoint():
    for seed in range(80):
        m = random_instance(seed) if seed % 2 else random_pomdp(seed, n_states=3, n_obs=3)
        g = build_belief_obs(m)
        assert almost_sure_reach_obs(g).observations == reach_obs_by_chain(g)


def test_fixpoint_monotone_and_bounded():
    for seed in range(60):
        g = build_belief_obs(random_instance(seed))
        res = almost_sure_reach_obs(g)
        h = res.history
        assert all(x >= y for x, y in zip(h, h[1:]))
        assert res.iterations <= len(g.annotations) + 1


def test_target_closure():
    for seed in range(60):
        m = random_instance(seed)
        g = build_belief_obs(m)
        alive = almost_sure_reach_obs(g).observations
        for v in alive:
            tmask = g.target_mask(v)
            for a in g.allowed_actions(v, alive):
                for s in bits(tmask):
                    for t in bits(m.succ_mask[s][a]):
                        for c in g.successor_annotations(v, a, m.obs_of[t], alive):
                            assert g.target_mask(c) >> t & 1


def test_all_zero_rewards_no():
    m = random_pomdp(2, n_states=4, p_reward_one=0.0)
    res = solve_limavg1(m)
    assert res.decision == "NO" and res.strategy is None and res.certificate is None


def test_example1_yes():
    m = load_model("example1.pomdp")
    t0 = time.perf_counter()
    res = solve_limavg1(m)
    assert time.perf_counter() - t0 < 1.0
    assert res.decision == "YES" and res.certificate.winning
    assert certify_limavg1(m, res.strategy).winning
    assert solve_limavg1(m, mode="exact").decision == "YES"


def test_true_state_inside_annotation_belief():
    for seed in range(40):
        m = random_instance(seed)
        res = solve_limavg1(m)
        if not res.winning:
            continue
        c = product_chain(m, res.strategy)
        for s, mem in c.nodes:
            assert res.annotations[mem].belief >> s & 1


def test_soundness_and_oracle_agreement_sample():
    for seed in range(40):
        m = random_instance(seed)
        res = solve_limavg1(m)
        if res.winning:
            assert certify_limavg1(m, res.strategy).winning
        if oracle_search(m).found:
            assert res.winning, f"construction gap on seed {seed}"


def test_modes_agree():
    for seed in range(40):
        m = random_instance(seed)
        assert solve_limavg1(m).decision == solve_limavg1(m, mode="exact").decision


def test_capacity_error():
    with pytest.raises(CapacityError):
        solve_limavg1(load_model("example1.pomdp"), node_cap=5)


def test_solve_result_dict():
    d = solve_limavg1(load_model("example1.pomdp")).to_dict()
    assert {"decision", "memory_size", "node_count", "iterations", "certificate", "wall_ms"} <= set(d)

