"""Small dense state-vector simulator used as the exact physical oracle.

Qubit 0 is the leftmost (most significant) tensor factor. Measurements remove
the measured qubit from the returned post-state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import Angle8, BellLabel
from .errors import (
    DimensionMismatch,
    EqualIndices,
    IndexOutOfRange,
    NotUnitary,
    TooManyQubits,
)

MAX_QUBITS = 12
TOL = 1e-9

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S = np.array([[1, 0], [0, 1j]], dtype=complex)
SDG = S.conj().T


def phase(angle: Angle8 | float) -> np.ndarray:
    """diag(1, e^{i angle}); ``phase(theta) @ |+>`` is ``|theta>``."""
    a = angle.radians if isinstance(angle, Angle8) else float(angle)
    return np.array([[1, 0], [0, np.exp(1j * a)]], dtype=complex)


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        n = int(round(np.log2(amps.size))) if amps.size else -1
        if n < 0 or 2**n != amps.size:
            raise DimensionMismatch(f"{amps.size} amplitudes is not a power of two")
        if n > MAX_QUBITS:
            raise TooManyQubits(f"{n} qubits exceeds cap of {MAX_QUBITS}")
        norm = np.vdot(amps, amps).real
        if abs(norm - 1.0) > TOL:
            raise ValueError(f"state not normalized (norm^2={norm})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def qubit_count(self) -> int:
        return int(np.log2(self.amplitudes.size))

    @classmethod
    def zeros(cls, n: int) -> StateVector:
        amps = np.zeros(2**n, dtype=complex)
        amps[0] = 1
        return cls(amps)

    @classmethod
    def basis(cls, bits: str) -> StateVector:
        amps = np.zeros(2 ** len(bits), dtype=complex)
        amps[int(bits, 2)] = 1
        return cls(amps)

    def tensor(self, other: StateVector) -> StateVector:
        return StateVector(np.kron(self.amplitudes, other.amplitudes))

    def __repr__(self):
        return f"StateVector(n={self.qubit_count})"


@dataclass(frozen=True)
class Outcome:
    bit: int
    post_state: StateVector
    probability: float


def tensor_all(states) -> StateVector:
    amps = np.ones(1, dtype=complex)
    for st in states:
        amps = np.kron(amps, st.amplitudes)
    return StateVector(amps)


def _check_qubit(state: StateVector, q: int):
    if not 0 <= q < state.qubit_count:
        raise IndexOutOfRange(f"qubit {q} out of range for {state.qubit_count}-qubit state")


def prepare_plus_theta(theta: Angle8) -> StateVector:
    return StateVector(np.array([1, np.exp(1j * theta.radians)]) / np.sqrt(2))


def prepare_bell(label: BellLabel) -> StateVector:
    phi = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    pauli = np.linalg.matrix_power(X, label.x) @ np.linalg.matrix_power(Z, label.z)
    return StateVector(np.kron(I2, pauli) @ phi)


def apply_cz(state: StateVector, i: int, j: int) -> StateVector:
    _check_qubit(state, i)
    _check_qubit(state, j)
    if i == j:
        raise EqualIndices(f"CZ needs two distinct qubits, got {i} twice")
    n = state.qubit_count
    psi = state.amplitudes.reshape([2] * n).copy()
    idx = [slice(None)] * n
    idx[i] = 1
    idx[j] = 1
    psi[tuple(idx)] *= -1
    return StateVector(psi.reshape(-1))


def apply_local(state: StateVector, q: int, gate) -> StateVector:
    _check_qubit(state, q)
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (2, 2) or not np.allclose(gate.conj().T @ gate, I2, atol=TOL):
        raise NotUnitary("gate must be a 2x2 unitary")
    n = state.qubit_count
    psi = state.amplitudes.reshape([2] * n)
    psi = np.moveaxis(np.tensordot(gate, psi, axes=([1], [q])), 0, q)
    return StateVector(psi.reshape(-1))


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    """CNOT compiled as H(target) CZ H(target)."""
    state = apply_local(state, target, H)
    state = apply_cz(state, control, target)
    return apply_local(state, target, H)


def _project(state: StateVector, q: int, bra: np.ndarray) -> tuple[np.ndarray, float]:
    n = state.qubit_count
    psi = state.amplitudes.reshape([2] * n)
    rest = np.tensordot(bra, psi, axes=([0], [q])).reshape(-1)
    return rest, float(np.vdot(rest, rest).real)


def _measure(state, q, bras, rng, outcome):
    _check_qubit(state, q)
    branches = [_project(state, q, bra) for bra in bras]
    p0 = branches[0][1]
    if outcome is None:
        bit = 0 if rng.random() < p0 else 1
    else:
        bit = int(outcome)
        if branches[bit][1] < TOL:
            raise ValueError(f"forced outcome {bit} has zero probability")
    rest, p = branches[bit]
    return Outcome(bit, StateVector(rest / np.sqrt(p)), p)


def measure_xy(state: StateVector, q: int, delta: Angle8, rng=None, outcome=None) -> Outcome:
    """Measure qubit ``q`` in {|0> + e^{i delta}|1>, |0> - e^{i delta}|1>}.

    Outcome 0 is the ``+`` vector. Pass ``outcome`` to select a branch
    deterministically (it must have nonzero probability).
    """
    e = np.exp(-1j * delta.radians)
    bras = [np.array([1, e]) / np.sqrt(2), np.array([1, -e]) / np.sqrt(2)]
    return _measure(state, q, bras, rng, outcome)


def measure_z(state: StateVector, q: int, rng=None, outcome=None) -> Outcome:
    bras = [np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)]
    return _measure(state, q, bras, rng, outcome)


def fidelity_mod_phase(a: StateVector, b: StateVector) -> float:
    if a.qubit_count != b.qubit_count:
        raise DimensionMismatch(f"{a.qubit_count} vs {b.qubit_count} qubits")
    f = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    return float(min(1.0, max(0.0, f)))


def reduced_density(state: StateVector, keep: list[int]) -> np.ndarray:
    """Partial trace onto the qubits in ``keep`` (in the given order)."""
    n = state.qubit_count
    psi = state.amplitudes.reshape([2] * n)
    traced = [q for q in range(n) if q not in keep]
    psi = np.transpose(psi, list(keep) + traced).reshape(2 ** len(keep), -1)
    return psi @ psi.conj().T
