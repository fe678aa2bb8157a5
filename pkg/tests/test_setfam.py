import math

import pytest

from sketchbench.lbgraph import layout
from sketchbench.protocols import constant, full_information, parity, toy_two_bit, truncation
from sketchbench.setfam import (
    DeterminismRequired,
    FamilyTooSparse,
    NoGoodPartition,
    SetFamily,
    choose_partition,
    common_block,
    complete_family,
    find_separated_pair,
    message_partitions,
    random_family,
    sample_family,
    verify_record,
    PartitionContext,
)

N16 = 256  # canonical node count carrying a 16-element W
V16, W16, _, _ = layout(N16)


def fam40(seed=11) -> SetFamily:
    return random_family(W16, 3, 40, seed=seed)


def test_sampler_disjoint_triples():
    fam = sample_family(range(1, 21), 3, 0.6, 6, seed=3)
    assert len(fam.members) == 6
    assert fam.intersection_bound == 0
    fam.verify()
    seen = set()
    for member in fam.members:
        assert not (set(member) & seen)
        seen |= set(member)


def test_sampler_too_sparse():
    with pytest.raises(FamilyTooSparse) as err:
        sample_family(range(1, 11), 5, 0.4, 30, seed=3, max_attempts=3000)
    assert err.value.achieved < 30


def test_sampler_64_ground():
    fam = sample_family(range(1, 65), 5, 0.8, 40, seed=7)
    assert len(fam.members) == 40
    assert fam.intersection_bound == 2
    worst = max(
        len(set(a) & set(b))
        for i, a in enumerate(fam.members)
        for b in fam.members[i + 1 :]
    )
    assert worst <= 2


def test_sampler_deterministic():
    a = sample_family(range(1, 65), 5, 0.8, 40, seed=7)
    b = sample_family(range(1, 65), 5, 0.8, 40, seed=7)
    assert a.members == b.members


def test_family_verify_catches_violation():
    bad = SetFamily(ground=(1, 2, 3, 4), d=3, epsilon=0.5, members=((1, 2, 3), (1, 2, 4)))
    with pytest.raises(ValueError):
        bad.verify()


def test_partitions_full_information_singletons():
    fam = fam40()
    a_side = frozenset(list(W16)[:8])
    b_side = frozenset(W16) - a_side
    ps, pa, pb = message_partitions(full_information(N16, 2), 5, fam, a_side, b_side, N16, 2)
    assert all(len(block) == 1 for block in ps.blocks.values())
    assert all(len(block) == 1 for block in pa.blocks.values())
    assert len(common_block(ps, pa, pb, fam)) == 1


def test_partitions_constant_single_block():
    fam = fam40()
    a_side = frozenset(list(W16)[:8])
    b_side = frozenset(W16) - a_side
    ps, pa, pb = message_partitions(constant(2), 5, fam, a_side, b_side, N16, 2)
    assert ps.block_count() == pa.block_count() == pb.block_count() == 1
    assert set(common_block(ps, pa, pb, fam)) == set(fam.members)


def test_partitions_truncation_block_budget():
    fam = fam40()
    a_side = frozenset(list(W16)[:8])
    b_side = frozenset(W16) - a_side
    ps, pa, pb = message_partitions(truncation(2, N16, 2), 5, fam, a_side, b_side, N16, 2)
    for part, keys in ((ps, fam.members), (pa, None), (pb, None)):
        assert part.block_count() <= 4
        covered = sum(len(block) for block in part.blocks.values())
        expect = len(keys) if keys is not None else len({k for b in part.blocks.values() for k in b})
        assert covered == expect
    assert sum(len(b) for b in ps.blocks.values()) == len(fam.members)


def test_pigeonhole_floor_parity():
    fam = fam40()
    a_side = frozenset(list(W16)[:8])
    b_side = frozenset(W16) - a_side
    proto = parity(2)
    ps, pa, pb = message_partitions(proto, 5, fam, a_side, b_side, N16, 2)
    block = common_block(ps, pa, pb, fam)
    floor = math.ceil(len(fam.members) / 2 ** (3 * proto.max_bits))
    assert len(block) >= floor == 5


def test_partitions_require_determinism():
    from sketchbench.agm import make_agm_protocol

    fam = fam40()
    a_side = frozenset(list(W16)[:8])
    with pytest.raises(DeterminismRequired):
        message_partitions(
            make_agm_protocol(N16, 2, 0.1), 5, fam, a_side, frozenset(W16) - a_side, N16, 2
        )


def test_blocks_are_message_consistent():
    from sketchbench.model import EMPTY_RANDOMNESS
    from sketchbench.setfam import _role_view
    from sketchbench.model import Advice

    fam = fam40()
    a_side = frozenset(list(W16)[:8])
    b_side = frozenset(W16) - a_side
    proto = truncation(3, N16, 2)
    ps, pa, pb = message_partitions(proto, 9, fam, a_side, b_side, N16, 2)
    _, _, u_a, u_b = layout(N16)
    for bits, members in ps.blocks.items():
        for member in members:
            view = _role_view(9, member, u_a, Advice.SIGMA, N16, 2)
            assert proto.encode(view, EMPTY_RANDOMNESS) == bits
    for bits, keys in pb.blocks.items():
        for key in keys:
            view = _role_view(9, key, u_b, Advice.B_RESTRICTED, N16, 2)
            assert proto.encode(view, EMPTY_RANDOMNESS) == bits


def test_find_separated_pair_cases():
    a_side = frozenset({1, 2, 3})
    b_side = frozenset({4, 5, 6})
    # all members inside A: no connected-side witness
    assert find_separated_pair([(1, 2, 3)], a_side, b_side, 2) is None
    # one member of each kind
    pair = find_separated_pair([(1, 2, 4), (1, 4, 5)], a_side, b_side, 2)
    assert pair == ((1, 2, 4), (1, 4, 5))
    # preference: S0 keeping a nonempty B-projection wins over an all-A one
    pair = find_separated_pair([(1, 2, 3), (2, 3, 4), (1, 4, 5)], a_side, b_side, 2)
    assert pair == ((2, 3, 4), (1, 4, 5))


def test_find_separated_pair_classification_sweep():
    import itertools

    a_side = frozenset({1, 2, 3})
    b_side = frozenset({4, 5, 6, 7})
    members = list(itertools.combinations(range(1, 8), 3))
    for size in (1, 2, 3):
        for chosen in itertools.combinations(members, size):
            has_c0 = any(len(set(s) & a_side) >= 2 for s in chosen)
            has_c1 = any(len(set(s) & a_side) <= 1 for s in chosen)
            pair = find_separated_pair(chosen, a_side, b_side, 2)
            assert (pair is not None) == (has_c0 and has_c1)
            if pair:
                s0, s1 = pair
                assert len(set(s0) & a_side) >= 2 >= 1 >= len(set(s1) & a_side)


def test_choose_partition_constant_all_good():
    fam = fam40()
    ctx = choose_partition(constant(2), fam, W16, 2, trials=2, seed=5)
    assert len(ctx.good) == len(V16)


def test_choose_partition_full_information_fails():
    fam = fam40()
    with pytest.raises(NoGoodPartition):
        choose_partition(full_information(N16, 2), fam, W16, 2, trials=2, seed=5)


def test_choose_partition_toy_records_reverify():
    fam = fam40()
    proto = toy_two_bit(2)
    ctx = choose_partition(proto, fam, W16, 2, trials=32, seed=5)
    assert len(ctx.good) >= 1
    assert all(
        verify_record(rec, proto, ctx.a_side, ctx.b_side, N16, 2)
        for rec in ctx.good.values()
    )


def test_choose_partition_deterministic():
    fam = fam40()
    proto = toy_two_bit(2)
    a = choose_partition(proto, fam, W16, 2, trials=4, seed=9)
    b = choose_partition(proto, fam, W16, 2, trials=4, seed=9)
    assert a.a_side == b.a_side and a.good.keys() == b.good.keys()


def test_record_mutation_fails_reverify():
    fam = fam40()
    proto = toy_two_bit(2)
    ctx = choose_partition(proto, fam, W16, 2, trials=8, seed=5)
    node, rec = next(iter(ctx.good.items()))
    from dataclasses import replace

    broken = replace(rec, message_sigma=("1" if rec.message_sigma[0] == "0" else "0") + rec.message_sigma[1:])
    assert not verify_record(broken, proto, ctx.a_side, ctx.b_side, N16, 2)


def test_partition_context_json_roundtrip():
    fam = fam40()
    proto = toy_two_bit(2)
    ctx = choose_partition(proto, fam, W16, 2, trials=4, seed=9)
    again = PartitionContext.from_json(ctx.to_json())
    assert again.a_side == ctx.a_side
    assert again.family.members == ctx.family.members
    assert again.good == ctx.good


def test_complete_family():
    fam = complete_family(range(11, 15), 3)
    assert len(fam.members) == 4
    fam.verify()
