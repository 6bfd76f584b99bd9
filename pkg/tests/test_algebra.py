import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from blind_distill.algebra import (
    ALL_ANGLES,
    ALL_LABELS,
    Angle8,
    BellLabel,
    Gf2Vec,
    add,
    bell_string,
    compose_delta,
    dot,
    reflect,
    string_bits,
    string_from_bits,
    string_from_mask,
    string_mask,
)
from blind_distill.errors import LengthMismatch

angles = st.integers(0, 7).map(Angle8)
labels = st.sampled_from(ALL_LABELS)


@pytest.mark.parametrize("a,b,want", [(0, 5, 5), (7, 1, 0), (3, 6, 1)])
def test_add_examples(a, b, want):
    assert add(Angle8(a), Angle8(b)) == Angle8(want)


def test_angle_normalizes_and_rejects_floats():
    assert Angle8(-1).k == 7
    assert Angle8(12).k == 4
    with pytest.raises(TypeError):
        Angle8(1.0)
    assert Angle8(3).plus_pi().k == 7
    assert Angle8(3).plus_pi(0).k == 3


@given(angles, angles, angles)
def test_angles_form_cyclic_group(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a + b == b + a
    assert a + Angle8(0) == a
    assert a + (-a) == Angle8(0)


@pytest.mark.parametrize("k,label,want", [(0, (0, 0), 0), (1, (1, 1), 3), (3, (0, 1), 5)])
def test_reflect_examples(k, label, want):
    assert reflect(Angle8(k), BellLabel(*label)) == Angle8(want)


def test_reflect_self_inverse_all_cases():
    for theta, lab in itertools.product(ALL_ANGLES, ALL_LABELS):
        assert reflect(reflect(theta, lab), lab) == theta


def test_reflect_is_bijection_per_label():
    for lab in ALL_LABELS:
        assert sorted(reflect(t, lab).k for t in ALL_ANGLES) == list(range(8))


@pytest.mark.parametrize("args,want", [((0, 0, 0, 0), 0), ((1, 1, 2, 1), 3), ((7, 0, 1, 0), 0)])
def test_compose_delta_examples(args, want):
    t, b, p, r = args
    assert compose_delta(Angle8(t), b, Angle8(p), r) == Angle8(want)


V = bell_string([(1, 1), (0, 1)])


@pytest.mark.parametrize("s", ["0000", "1100", "0101"])
def test_dot_examples(s):
    assert dot(Gf2Vec.from_str(s), V) == 0


def test_dot_picks_single_bits():
    assert dot(Gf2Vec.from_str("1000"), V) == 1
    assert dot(Gf2Vec.from_str("0010"), V) == 0
    assert dot(Gf2Vec.from_str("0001"), V) == 1


def test_dot_length_mismatch():
    with pytest.raises(LengthMismatch):
        dot(Gf2Vec.from_str("101"), V)


def test_dot_is_linear_exhaustive():
    for n in (1, 2):
        vecs = [Gf2Vec.from_mask(m, 2 * n) for m in range(4**n)]
        for v_bits in vecs:
            v = string_from_bits(v_bits.bits)
            for s, t in itertools.product(vecs, repeat=2):
                assert dot(s ^ t, v) == dot(s, v) ^ dot(t, v)


@given(st.lists(st.integers(0, 3), min_size=1, max_size=8))
def test_string_encodings_round_trip(codes):
    v = tuple(BellLabel.from_int(c) for c in codes)
    assert string_from_bits(string_bits(v)) == v
    assert string_from_mask(string_mask(v), len(v)) == v
    assert Gf2Vec(string_bits(v)).to_mask() == string_mask(v)


def test_bit_order_is_z_before_x():
    assert string_bits(bell_string([(1, 0), (0, 1)])) == (1, 0, 0, 1)
    assert BellLabel(1, 0).to_int() == 2


@given(st.lists(st.integers(0, 1), max_size=40))
def test_gf2_hex_round_trip(bits):
    v = Gf2Vec(tuple(bits))
    assert Gf2Vec.from_hex(v.to_hex(), len(v)) == v


def test_gf2_hex_reads_left_to_right():
    assert Gf2Vec.from_str("1000").to_hex() == "8"
    assert Gf2Vec.from_str("10001").to_hex() == "88"
    with pytest.raises(LengthMismatch):
        Gf2Vec.from_hex("ff", 5)


def test_gf2_xor_length_checked():
    with pytest.raises(LengthMismatch):
        Gf2Vec.from_str("10") ^ Gf2Vec.from_str("1")
    assert (Gf2Vec.from_str("1010") ^ Gf2Vec.from_str("1010")).is_zero()
