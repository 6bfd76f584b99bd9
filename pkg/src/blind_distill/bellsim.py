"""Bit-level simulation of Bell-diagonal pair strings.

A :class:`PairRegister` carries the hidden ground-truth label of every live
pair. Bilateral local operations act on labels as GF(2)-affine maps; each
generator below has a declared physical realization (``*_GATES``) that the
test-suite checks against :mod:`blind_distill.statevec`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import statevec as sv
from .algebra import ALL_LABELS, BellLabel
from .errors import (
    EqualIndices,
    FidelityOutOfRange,
    IndexOutOfRange,
    InvalidDistribution,
)


@dataclass(frozen=True)
class PairDist:
    """Probability of each Bell label, indexed by ``2z + x``."""

    p00: float
    p01: float
    p10: float
    p11: float

    def __post_init__(self):
        probs = self.probs
        if any(p < 0 or p > 1 for p in probs) or abs(sum(probs) - 1.0) > 1e-12:
            raise InvalidDistribution(f"label probabilities {probs} are not a distribution")

    @property
    def probs(self) -> tuple[float, float, float, float]:
        return (self.p00, self.p01, self.p10, self.p11)

    def prob(self, label: BellLabel) -> float:
        return self.probs[label.to_int()]


@dataclass(frozen=True)
class WernerParams:
    fidelity: float

    def __post_init__(self):
        if not 0.0 <= self.fidelity <= 1.0 or math.isnan(self.fidelity):
            raise FidelityOutOfRange(f"fidelity {self.fidelity} outside [0, 1]")


def werner_dist(w: WernerParams) -> PairDist:
    """Weight F on the singlet label (1, 1), (1-F)/3 on each other label."""
    if not isinstance(w, WernerParams):
        w = WernerParams(float(w))
    rest = (1.0 - w.fidelity) / 3.0
    return PairDist(rest, rest, rest, w.fidelity)


@dataclass(frozen=True)
class PairRegister:
    labels: tuple[BellLabel, ...]

    @property
    def live_count(self) -> int:
        return len(self.labels)

    def _check(self, j: int):
        if not 0 <= j < len(self.labels):
            raise IndexOutOfRange(f"pair {j} is not live (live_count={len(self.labels)})")

    def _replace(self, updates: dict[int, BellLabel]) -> PairRegister:
        labels = list(self.labels)
        for j, lab in updates.items():
            labels[j] = lab
        return PairRegister(tuple(labels))


def sample_register(dist: PairDist, n: int, rng) -> PairRegister:
    if n < 1:
        raise ValueError(f"need at least one pair, got n={n}")
    codes = rng.choice(4, size=n, p=np.array(dist.probs) / sum(dist.probs))
    return PairRegister(tuple(BellLabel.from_int(int(c)) for c in codes))


# --- twirling -------------------------------------------------------------

# Permutations of the non-singlet labels, keyed by twirl id. Each is realized
# by the same single-qubit Clifford word applied by both Bobs: bilateral H
# swaps (0,1)<->(1,0); bilateral S swaps (0,0)<->(1,0). Both fix the singlet.
TWIRL_WORDS: tuple[tuple[str, ...], ...] = (
    (),
    ("H",),
    ("S",),
    ("H", "S", "H"),
    ("H", "S"),
    ("S", "H"),
)

_WORD_GATES = {"H": sv.H, "S": sv.S}


def _label_after_bilateral(gate: np.ndarray, label: BellLabel) -> BellLabel:
    # (U ⊗ U)(I ⊗ P)|Phi+> = (I ⊗ U P U^T)|Phi+>; read P' off up to phase.
    pauli = np.linalg.matrix_power(sv.X, label.x) @ np.linalg.matrix_power(sv.Z, label.z)
    image = gate @ pauli @ gate.T
    for cand in ALL_LABELS:
        ref = np.linalg.matrix_power(sv.X, cand.x) @ np.linalg.matrix_power(sv.Z, cand.z)
        if abs(abs(np.trace(ref.conj().T @ image)) - 2) < 1e-9:
            return cand
    raise AssertionError("bilateral gate is not Clifford on Bell labels")


def twirl_word_unitary(perm_id: int) -> np.ndarray:
    """The 2x2 unitary each Bob applies for twirl ``perm_id`` (word applied left to right)."""
    u = np.eye(2, dtype=complex)
    for letter in TWIRL_WORDS[perm_id]:
        u = _WORD_GATES[letter] @ u
    return u


def _twirl_table() -> tuple[dict[BellLabel, BellLabel], ...]:
    table = []
    for pid in range(len(TWIRL_WORDS)):
        u = twirl_word_unitary(pid)
        table.append({lab: _label_after_bilateral(u, lab) for lab in ALL_LABELS})
    return tuple(table)


TWIRL_PERMS = _twirl_table()


def twirl(reg: PairRegister, perm_ids) -> PairRegister:
    perm_ids = list(perm_ids)
    if len(perm_ids) != reg.live_count:
        raise ValueError("one twirl id per live pair is required")
    return PairRegister(tuple(TWIRL_PERMS[p][lab] for p, lab in zip(perm_ids, reg.labels)))


def twirl_to_werner(reg: PairRegister, rng) -> tuple[PairRegister, tuple[int, ...]]:
    """Apply a uniformly random twirl per pair; returns the ids for Alice's broadcast."""
    ids = tuple(int(i) for i in rng.integers(0, len(TWIRL_WORDS), size=reg.live_count))
    return twirl(reg, ids), ids


# --- hashing generators ---------------------------------------------------

# (Bob1 gate, Bob2 gate) realizing each single-pair generator.
SWAP_ZX_GATES = (sv.H, sv.H)
SHEAR_GATES = (sv.SDG, sv.S)


def apply_swap_zx(reg: PairRegister, j: int) -> PairRegister:
    reg._check(j)
    lab = reg.labels[j]
    return reg._replace({j: BellLabel(lab.x, lab.z)})


def apply_shear(reg: PairRegister, j: int) -> PairRegister:
    reg._check(j)
    lab = reg.labels[j]
    return reg._replace({j: BellLabel(lab.z ^ lab.x, lab.x)})


def apply_bxor(reg: PairRegister, src: int, tgt: int) -> PairRegister:
    """Bilateral CNOT from pair ``src`` to pair ``tgt``.

    Both Bobs apply CNOT(control=own half of src, target=own half of tgt):
    ``x_tgt ^= x_src`` and ``z_src ^= z_tgt``.
    """
    reg._check(src)
    reg._check(tgt)
    if src == tgt:
        raise EqualIndices(f"BXOR needs distinct pairs, got {src} twice")
    s, t = reg.labels[src], reg.labels[tgt]
    return reg._replace({src: BellLabel(s.z ^ t.z, s.x), tgt: BellLabel(t.z, t.x ^ s.x)})


def measure_pair(reg: PairRegister, j: int, rng) -> tuple[int, int, PairRegister]:
    """Both Bobs measure their half of pair ``j`` in Z; the pair is consumed."""
    reg._check(j)
    b1 = int(rng.integers(0, 2))
    b2 = b1 ^ reg.labels[j].x
    return b1, b2, PairRegister(reg.labels[:j] + reg.labels[j + 1:])
