import math

import numpy as np
import pytest

import sketchbench.agm as agm
from sketchbench.agm import (
    DecodeError,
    SketchConfig,
    agm_decide_kconn,
    agm_encode,
    budget_bits,
    make_agm_protocol,
)
from sketchbench.mincut import is_k_edge_connected
from sketchbench.model import Decision, MultiGraph, SharedRandomness, execute, node_view

SEEDS = SharedRandomness(99)


def test_isolated_node_all_zero():
    g = MultiGraph(8, [(1, 2, 1), (2, 3, 2)])
    cells = agm.node_sketch(node_view(g, 5, None, 1), SEEDS, 1, 0.1)
    assert not cells.any()


def test_encode_deterministic():
    g = MultiGraph(8, [(1, 2, 1), (2, 3, 2)])
    view = node_view(g, 2, None, 1)
    assert agm_encode(view, SEEDS, 1, 0.1) == agm_encode(view, SEEDS, 1, 0.1)
    other = SharedRandomness(100)
    assert agm_encode(view, SEEDS, 1, 0.1) != agm_encode(view, other, 1, 0.1)


def test_linearity():
    g_both = MultiGraph(8, [(1, 2, 1), (2, 3, 2)])
    g_one = MultiGraph(8, [(1, 2, 1)])
    g_two = MultiGraph(8, [(2, 3, 2)])
    s_one = agm.node_sketch(node_view(g_one, 2, None, 1), SEEDS, 1, 0.1)
    s_two = agm.node_sketch(node_view(g_two, 2, None, 1), SEEDS, 1, 0.1)
    s_both = agm.node_sketch(node_view(g_both, 2, None, 1), SEEDS, 1, 0.1)
    assert np.array_equal(agm.combine(s_one, s_two), s_both)


def test_budget_exact_and_scaling():
    g = MultiGraph(8, [(1, 2, 1)])
    bits = agm_encode(node_view(g, 1, None, 1), SEEDS, 1, 0.1)
    assert len(bits) == budget_bits(8, 1, 0.1)
    # stays within a fixed multiple of k * log^3 n across the supported range
    for n in (16, 256, 4096, 65536):
        for k in (1, 4, 16):
            assert budget_bits(n, k, 0.05) <= 2000 * k * math.log2(n) ** 3


def test_pair_recovery_roundtrip():
    n = 16
    for u in (1, 3, 7):
        for v in (9, 12, 16):
            slot = agm.slot_of(u, v, n)
            assert agm.pair_of_slot(slot, n) == (u, v)
    assert agm.pair_of_slot(agm.slot_of(2, 3, 16) - 1, 16) != (2, 3)


def test_sampler_attempt_success_rate():
    # Monte Carlo estimate of one-attempt boundary recovery vs the configured bound.
    rng = np.random.default_rng(5)
    n, k, delta = 32, 1, 0.05
    seeds = SharedRandomness(123)
    cfg = SketchConfig.make(n, k, delta)
    _, powers = agm._config_tables(seeds, cfg)
    g = MultiGraph(n)
    for _ in range(80):
        u, v = int(rng.integers(1, n + 1)), int(rng.integers(1, n + 1))
        if u != v:
            g.add_edge(u, v, 1)
    sketches = {
        u: agm.node_sketch(node_view(g, u, None, k), seeds, k, delta)
        for u in range(1, n + 1)
    }
    succ = trials = 0
    for t in range(1000):
        size = int(rng.integers(1, n))
        side = set(int(x) for x in rng.choice(np.arange(1, n + 1), size=size, replace=False))
        if not any((u in side) != (v in side) for u, v, _ in g.edges()):
            continue
        total = None
        for u in side:
            total = sketches[u][0] if total is None else agm.combine(total, sketches[u][0])
        slot = agm.extract_edge(total[t % cfg.rounds], powers, n)
        trials += 1
        if slot is not None:
            u, v = agm.pair_of_slot(slot, n)
            if ((u in side) != (v in side)) and g.multiplicity(u, v) > 0:
                succ += 1
    assert trials > 900
    assert succ / trials >= 1 - agm.SAMPLER_ATTEMPT_FAILURE


def test_path_connected():
    g = MultiGraph(6, [(i, i + 1, 1) for i in range(1, 6)])
    t = execute(make_agm_protocol(6, 1, 0.05), g, randomness=SharedRandomness(7))
    assert t.decision is Decision.CONNECTED


def test_two_triangles_disconnected():
    g = MultiGraph(6, [(1, 2, 1), (2, 3, 1), (1, 3, 1), (4, 5, 1), (5, 6, 1), (4, 6, 1)])
    t = execute(make_agm_protocol(6, 1, 0.05), g, randomness=SharedRandomness(7))
    assert t.decision is Decision.NOT_CONNECTED


def test_parallel_edges_counted():
    # Two nodes joined by three parallel edges are 3- but not 4-edge connected.
    g = MultiGraph(2, [(1, 2, 3)])
    t3 = execute(make_agm_protocol(2, 3, 0.05), g, randomness=SharedRandomness(1)).decision
    t4 = execute(make_agm_protocol(2, 4, 0.05), g, randomness=SharedRandomness(1)).decision
    assert t3 is Decision.CONNECTED
    assert t4 is Decision.NOT_CONNECTED


def test_decode_rejects_malformed():
    with pytest.raises(DecodeError):
        agm_decide_kconn([(1, "01")], SEEDS, 2, 1, 0.1)
    g = MultiGraph(3, [(1, 2, 1), (2, 3, 1)])
    t = execute(make_agm_protocol(3, 1, 0.1), g, randomness=SEEDS)
    msgs = list(t.messages)
    msgs[0] = (msgs[0][0], msgs[0][1][:-1])
    with pytest.raises(DecodeError):
        agm_decide_kconn(msgs, SEEDS, 3, 1, 0.1)


def test_single_node_decides_connected():
    g = MultiGraph(1)
    t = execute(make_agm_protocol(1, 1, 0.1), g, randomness=SEEDS)
    assert t.decision is Decision.CONNECTED
