import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sketchbench.overlap import (
    BlockPropertyViolated,
    CyclePartition,
    HypothesisViolated,
    InvalidInstance,
    OverlapInstance,
    TernaryVector,
    answer,
    appb_encode,
    appb_protocol,
    attack,
    build_blocks,
    enumerate_valid_instances,
    full_support_protocol,
    truncated_protocol,
    validate_instance,
    vector_on,
)


def test_validate_figure_instance():
    x = TernaryVector.from_string("10**1***")
    y = TernaryVector.from_string("****0*01")
    assert validate_instance(x, y, 8, 3) == 5
    inst = OverlapInstance.make(x, y, 8, 3)
    assert answer(inst) is False  # (1, 0) at the shared index means no


def test_validate_rejects_double_overlap():
    x = vector_on(8, {1: 0, 2: 0, 5: 1})
    y = vector_on(8, {2: 1, 5: 0, 7: 0})
    with pytest.raises(InvalidInstance) as err:
        validate_instance(x, y, 8, 3)
    assert err.value.name == "P2"


def test_validate_rejects_equal_bits():
    x = vector_on(8, {1: 0, 2: 0, 5: 1})
    y = vector_on(8, {5: 1, 7: 0, 8: 0})
    with pytest.raises(InvalidInstance) as err:
        validate_instance(x, y, 8, 3)
    assert err.value.name == "P1"


def test_validate_rejects_wrong_support_size():
    x = vector_on(8, {1: 0, 2: 0})
    y = vector_on(8, {5: 1, 7: 0, 8: 0})
    with pytest.raises(InvalidInstance) as err:
        validate_instance(x, y, 8, 3)
    assert err.value.name == "support"


def test_answer_cases():
    yes = OverlapInstance.make(vector_on(8, {1: 0, 2: 0, 5: 0}), vector_on(8, {5: 1, 7: 0, 8: 0}), 8, 3)
    assert answer(yes) is True
    no = OverlapInstance.make(vector_on(8, {1: 0, 2: 0, 5: 1}), vector_on(8, {5: 0, 7: 0, 8: 0}), 8, 3)
    assert answer(no) is False


def test_vector_string_roundtrip():
    v = TernaryVector.from_string("10**1***")
    assert v.to_string() == "10**1***"
    assert v.support == (1, 2, 5)
    assert v.support_bits() == "101"


def test_cycle_partition_m8():
    cp = CyclePartition.build(8)
    assert cp.intervals == ((1, 2, 3), (4, 5, 6), (7, 8))
    assert cp.phi(1) == 2 and cp.phi(2) == 3 and cp.phi(3) == 1
    assert cp.phi(7) == 8 and cp.phi(8) == 7


def test_cycle_partition_tail_singleton():
    cp = CyclePartition.build(7)
    assert cp.intervals[-1] == (7,)
    assert cp.phi(7) == 1
    for b, succ in cp.successors.items():
        assert succ != b


def test_build_blocks_total_m9():
    blocks = build_blocks(9, 4)
    assert len(blocks) == math.comb(9, 4)
    cp = CyclePartition.build(9)
    for subset, i in blocks.items():
        assert i in subset and cp.phi(i) in subset


def test_build_blocks_property_b():
    for m in (7, 8, 9):
        blocks = build_blocks(m, 4)
        for left, right in itertools.combinations(blocks, 2):
            if len(set(left) & set(right)) == 1:
                assert blocks[left] != blocks[right]


def test_build_blocks_hypothesis_violated():
    with pytest.raises(HypothesisViolated):
        build_blocks(9, 3)


def test_appb_encode_drop_mechanics():
    v = vector_on(9, {1: 1, 2: 0, 3: 1})
    assert appb_encode(v, {(1, 2, 3): 1}) == "01"
    zero = vector_on(9, {1: 0, 2: 0, 3: 0})
    assert appb_encode(zero, {(1, 2, 3): 2}) == "00"


def test_appb_encode_collisions_two_per_message():
    blocks = build_blocks(9, 4)
    support = (1, 2, 3, 4)
    seen = {}
    for bits in itertools.product((0, 1), repeat=4):
        msg = appb_encode(vector_on(9, dict(zip(support, bits))), blocks)
        seen.setdefault(msg, []).append(bits)
    assert len(seen) == 8
    assert all(len(v) == 2 for v in seen.values())


@pytest.mark.parametrize("m,s", [(7, 4), (8, 4), (9, 4)])
def test_appb_exhaustive_correctness(m, s):
    proto = appb_protocol(m, s)
    count = 0
    for inst in enumerate_valid_instances(m, s):
        count += 1
        msg_a = proto.alice_encode(inst.x)
        msg_b = proto.bob_encode(inst.y)
        assert len(msg_a) == s - 1 and len(msg_b) == s - 1
        assert proto.charlie_decode(inst.x.support, inst.y.support, msg_a, msg_b) == answer(inst)
    assert count > 0


def test_appb_role_swap_flips_answer():
    proto = appb_protocol(9, 4)
    x = vector_on(9, {1: 0, 2: 0, 3: 0, 9: 0})
    y = vector_on(9, {4: 0, 5: 0, 6: 0, 9: 1})
    inst = OverlapInstance.make(x, y, 9, 4)
    swapped = OverlapInstance.make(y, x, 9, 4)
    assert answer(inst) != answer(swapped)
    decoded = proto.charlie_decode(x.support, y.support, proto.alice_encode(x), proto.bob_encode(y))
    decoded_swap = proto.charlie_decode(y.support, x.support, proto.alice_encode(y), proto.bob_encode(x))
    assert decoded != decoded_swap


@given(st.integers(min_value=7, max_value=12), st.data())
@settings(max_examples=40, deadline=None)
def test_appb_message_length_property(m, data):
    s = data.draw(st.integers(min_value=math.ceil(m / 3) + 1, max_value=math.ceil(m / 2)))
    blocks = build_blocks(m, s)
    support = tuple(sorted(data.draw(
        st.sets(st.integers(min_value=1, max_value=m), min_size=s, max_size=s)
    )))
    bits = data.draw(st.tuples(*([st.integers(0, 1)] * s)))
    msg = appb_encode(vector_on(m, dict(zip(support, bits))), blocks)
    assert len(msg) == s - 1


def test_attack_appb_finds_nothing():
    assert attack(appb_protocol(9, 4), 9, 4) is None


def test_attack_truncation_replays():
    proto = truncated_protocol(9, 4)
    cex = attack(proto, 9, 4)
    assert cex is not None
    assert cex.wrong
    assert len(set(cex.supp_x) & set(cex.supp_y)) == 1
    for x_str, y_str in cex.wrong:
        inst = OverlapInstance.make(
            TernaryVector.from_string(x_str), TernaryVector.from_string(y_str), 9, 4
        )
        msg_a = proto.alice_encode(inst.x)
        msg_b = proto.bob_encode(inst.y)
        assert msg_a == cex.msg_a and msg_b == cex.msg_b
        assert proto.charlie_decode(inst.x.support, inst.y.support, msg_a, msg_b) != answer(inst)


def test_attack_full_support_finds_nothing():
    assert attack(full_support_protocol(9, 4), 9, 4) is None


def test_instance_json_roundtrip():
    inst = OverlapInstance.make(
        vector_on(8, {1: 0, 2: 0, 5: 1}), vector_on(8, {5: 0, 7: 1, 8: 0}), 8, 3
    )
    again = OverlapInstance.from_json(inst.to_json())
    assert again == inst
