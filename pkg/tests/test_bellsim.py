import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blind_distill import bellsim
from blind_distill import statevec as sv
from blind_distill.algebra import ALL_LABELS, BellLabel
from blind_distill.bellsim import PairRegister, WernerParams, werner_dist
from blind_distill.errors import EqualIndices, FidelityOutOfRange, IndexOutOfRange, InvalidDistribution

TOL = 1e-9
L = BellLabel


def bilateral(label, gates):
    state = sv.prepare_bell(label)
    state = sv.apply_local(state, 0, gates[0])
    return sv.apply_local(state, 1, gates[1])


def reg(*labels):
    return PairRegister(tuple(L(*lab) for lab in labels))


def test_werner_examples():
    assert werner_dist(WernerParams(1.0)).probs == (0, 0, 0, 1)
    assert werner_dist(WernerParams(0.25)).probs == pytest.approx((0.25,) * 4)
    d = werner_dist(WernerParams(0.95))
    assert d.p11 == 0.95 and d.p00 == pytest.approx(0.0166667, abs=1e-7)
    for bad in (-0.1, 1.1, float("nan")):
        with pytest.raises(FidelityOutOfRange):
            WernerParams(bad)
    with pytest.raises(InvalidDistribution):
        bellsim.PairDist(0.5, 0.5, 0.5, 0.0)


def test_sample_register_examples():
    rng = np.random.default_rng(1)
    assert bellsim.sample_register(werner_dist(1.0), 5, rng).labels == (L(1, 1),) * 5
    with pytest.raises(ValueError):
        bellsim.sample_register(werner_dist(1.0), 0, rng)
    n = 10_000
    counts = Counter(bellsim.sample_register(werner_dist(0.25), n, rng).labels)
    sigma = np.sqrt(n * 0.25 * 0.75)
    for lab in ALL_LABELS:
        assert abs(counts[lab] - n / 4) < 3 * sigma


@pytest.mark.parametrize("before,after", [((0, 0), (0, 0)), ((1, 0), (0, 1)), ((1, 1), (1, 1)), ((0, 1), (1, 0))])
def test_swap_zx_examples(before, after):
    assert bellsim.apply_swap_zx(reg(before), 0).labels == (L(*after),)


@pytest.mark.parametrize("before,after", [((0, 0), (0, 0)), ((0, 1), (1, 1)), ((1, 0), (1, 0)), ((1, 1), (0, 1))])
def test_shear_examples(before, after):
    assert bellsim.apply_shear(reg(before), 0).labels == (L(*after),)


@pytest.mark.parametrize("src,tgt,new_src,new_tgt", [
    ((0, 0), (0, 0), (0, 0), (0, 0)),
    ((1, 1), (0, 1), (1, 1), (0, 0)),
    ((0, 1), (1, 0), (1, 1), (1, 1)),
])
def test_bxor_examples(src, tgt, new_src, new_tgt):
    assert bellsim.apply_bxor(reg(src, tgt), 0, 1).labels == (L(*new_src), L(*new_tgt))


def test_generator_errors():
    r = reg((0, 0), (1, 1))
    with pytest.raises(IndexOutOfRange):
        bellsim.apply_swap_zx(r, 2)
    with pytest.raises(IndexOutOfRange):
        bellsim.apply_shear(r, -1)
    with pytest.raises(EqualIndices):
        bellsim.apply_bxor(r, 1, 1)
    with pytest.raises(IndexOutOfRange):
        bellsim.measure_pair(r, 5, np.random.default_rng(0))


def test_single_pair_rules_match_statevector():
    for rule, gates in ((bellsim.apply_swap_zx, bellsim.SWAP_ZX_GATES), (bellsim.apply_shear, bellsim.SHEAR_GATES)):
        for lab in ALL_LABELS:
            (want,) = rule(PairRegister((lab,)), 0).labels
            assert sv.fidelity_mod_phase(bilateral(lab, gates), sv.prepare_bell(want)) > 1 - TOL


def bxor_statevector(src, tgt):
    # qubits: src Bob1, src Bob2, tgt Bob1, tgt Bob2
    state = sv.prepare_bell(src).tensor(sv.prepare_bell(tgt))
    state = sv.apply_cnot(state, 0, 2)
    return sv.apply_cnot(state, 1, 3)


def test_bxor_matches_statevector_all_16():
    for src, tgt in itertools.product(ALL_LABELS, repeat=2):
        new_src, new_tgt = bellsim.apply_bxor(PairRegister((src, tgt)), 0, 1).labels
        want = sv.prepare_bell(new_src).tensor(sv.prepare_bell(new_tgt))
        assert sv.fidelity_mod_phase(bxor_statevector(src, tgt), want) > 1 - TOL


def test_bxor_works_on_any_pair_order():
    r = reg((0, 1), (0, 0), (1, 0))
    assert bellsim.apply_bxor(r, 2, 0).labels == (L(0, 1), L(0, 0), L(1, 0))
    assert bellsim.apply_bxor(r, 0, 2).labels == (L(1, 1), L(0, 0), L(1, 1))


def test_generators_are_gf2_linear():
    def as_bits(labels):
        return np.array([b for lab in labels for b in lab])

    ops = [lambda r: bellsim.apply_swap_zx(r, 0), lambda r: bellsim.apply_shear(r, 1),
           lambda r: bellsim.apply_bxor(r, 0, 1)]
    pairs = list(itertools.product(ALL_LABELS, repeat=2))
    for op in ops:
        for a, b in itertools.product(pairs, repeat=2):
            s = tuple(L(x.z ^ y.z, x.x ^ y.x) for x, y in zip(a, b))
            lhs = as_bits(op(PairRegister(s)).labels)
            rhs = as_bits(op(PairRegister(a)).labels) ^ as_bits(op(PairRegister(b)).labels)
            assert (lhs == rhs).all()


def test_measure_pair_examples():
    rng = np.random.default_rng(3)
    for lab, parity in ((L(0, 0), 0), (L(1, 1), 1), (L(0, 1), 1), (L(1, 0), 0)):
        r = PairRegister((lab, L(0, 0)))
        b1, b2, after = bellsim.measure_pair(r, 0, rng)
        assert b1 ^ b2 == parity
        assert after.live_count == 1


def test_measure_pair_b1_uniform():
    rng = np.random.default_rng(4)
    bits = [bellsim.measure_pair(reg((0, 0)), 0, rng)[0] for _ in range(2000)]
    assert abs(np.mean(bits) - 0.5) < 3 * np.sqrt(0.25 / 2000)


def test_twirl_words_realize_perms_on_statevector():
    assert len(set(tuple(sorted(p.items())) for p in bellsim.TWIRL_PERMS)) == 6
    for pid in range(len(bellsim.TWIRL_WORDS)):
        u = bellsim.twirl_word_unitary(pid)
        for lab in ALL_LABELS:
            want = bellsim.TWIRL_PERMS[pid][lab]
            assert sv.fidelity_mod_phase(bilateral(lab, (u, u)), sv.prepare_bell(want)) > 1 - TOL


def test_twirl_fixes_singlet():
    rng = np.random.default_rng(5)
    r = PairRegister((L(1, 1),) * 50)
    assert bellsim.twirl_to_werner(r, rng)[0] == r


def test_twirl_average_of_pure_label_is_uniform_on_others():
    counts = Counter(bellsim.TWIRL_PERMS[p][L(0, 1)] for p in range(6))
    assert counts == {L(0, 0): 2, L(0, 1): 2, L(1, 0): 2}


def test_twirl_preserves_werner_distribution_exactly():
    for f in (0.25, 0.7, 0.95):
        d = werner_dist(f)
        out = dict.fromkeys(ALL_LABELS, 0.0)
        for lab in ALL_LABELS:
            for p in range(6):
                out[bellsim.TWIRL_PERMS[p][lab]] += d.prob(lab) / 6
        assert [out[lab] for lab in ALL_LABELS] == pytest.approx(d.probs, abs=1e-15)


@given(st.lists(st.integers(0, 3), min_size=1, max_size=6), st.integers(0, 2**31))
def test_twirls_commute_and_keep_singlet_count(codes, seed):
    r = PairRegister(tuple(L.from_int(c) for c in codes))
    rng = np.random.default_rng(seed)
    ids_a = rng.integers(0, 6, len(codes))
    ids_b = rng.integers(0, 6, len(codes))
    ab = bellsim.twirl(bellsim.twirl(r, ids_a), ids_b)
    ba = bellsim.twirl(bellsim.twirl(r, ids_b), ids_a)
    singlets = [lab == L(1, 1) for lab in r.labels]
    assert [lab == L(1, 1) for lab in ab.labels] == singlets == [lab == L(1, 1) for lab in ba.labels]
    with pytest.raises(ValueError):
        bellsim.twirl(r, list(ids_a) + [0])
