"""Hashing distillation mediated by Alice.

Each round Alice broadcasts a random nonzero query ``s`` over the live pairs.
The Bobs run the compiled parity program (single-pair rotations, then
bilateral XORs into one target pair) and both measure the target in Z; the
xor of their two bits is ``s . v`` for the pre-round label string ``v``.
Alice tracks every live label as a GF(2) row over the original string, so
after maximum-likelihood decoding she knows the labels of the survivors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import bellsim
from .algebra import BellLabel, Gf2Vec, string_from_mask, string_mask
from .bellsim import PairDist, PairRegister, WernerParams, werner_dist
from .errors import BelowThreshold, ConfigError, IndexOutOfRange, LengthMismatch, ZeroQuery

DEFAULT_MARGIN = 0.125
DEFAULT_DECODE_CAP = 10


def _xlog2x(p: float) -> float:
    return 0.0 if p <= 0.0 else p * math.log2(p)


def entropy(w: WernerParams | float) -> float:
    """Von Neumann entropy (bits) of the Werner state, i.e. Shannon entropy of its label weights."""
    f = w.fidelity if isinstance(w, WernerParams) else WernerParams(float(w)).fidelity
    rest = (1.0 - f) / 3.0
    return 0.0 - _xlog2x(f) - 3.0 * _xlog2x(rest)


def hashing_threshold(tol: float = 1e-6) -> float:
    """Fidelity where the entropy crosses one bit; below it hashing yields nothing."""
    lo, hi = 0.25, 1.0  # entropy is 2 at lo, 0 at hi, strictly decreasing between
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if entropy(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def expected_yield(w: WernerParams | float, n: int) -> float:
    s = entropy(w)
    if s >= 1.0:
        f = w.fidelity if isinstance(w, WernerParams) else float(w)
        raise BelowThreshold(f"entropy {s:.6f} >= 1 at F={f}; hashing yields no pairs")
    return n * (1.0 - s)


@dataclass(frozen=True)
class HashingConfig:
    n: int
    margin: float = DEFAULT_MARGIN
    decode_cap: int = DEFAULT_DECODE_CAP

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError(f"need n >= 2 pairs, got {self.n}")
        if self.margin < 0:
            raise ConfigError(f"margin must be >= 0, got {self.margin}")

    def rounds(self, w: WernerParams | float) -> int:
        s = entropy(w)
        if s >= 1.0:
            raise BelowThreshold(f"entropy {s:.6f} >= 1; hashing cannot distill")
        r = math.ceil(self.n * (s + self.margin) - 1e-12)
        if r > self.n - 1:
            raise ConfigError(f"{r} hashing rounds would consume all {self.n} pairs")
        return max(r, 0)


def draw_query(rng, length: int) -> Gf2Vec:
    """Uniform nonzero query; all-zero draws are discarded and redrawn."""
    while True:
        bits = rng.integers(0, 2, size=length)
        if bits.any():
            return Gf2Vec(tuple(int(b) for b in bits))


# --- parity programs --------------------------------------------------------

NONE, SWAP, SHEAR_SWAP = "none", "swap_zx", "shear_swap_zx"


@dataclass(frozen=True)
class ParityProgram:
    query: Gf2Vec
    prefixes: tuple[tuple[int, str], ...]
    sources: tuple[int, ...]
    target: int

    def steps(self) -> list[tuple]:
        out: list[tuple] = []
        for j, kind in self.prefixes:
            if kind == SHEAR_SWAP:
                out.append(("SHEAR", j))
            if kind in (SWAP, SHEAR_SWAP):
                out.append(("SWAP_ZX", j))
        out.extend(("BXOR", j, self.target) for j in self.sources)
        out.append(("MEASURE", self.target))
        return out


def compile_parity_program(s: Gf2Vec, live_count: int) -> ParityProgram:
    """Route each selected pair's bit combination into its x slot, then xor all into the target.

    Selection per pair (s_z, s_x): (0,1) needs nothing, (1,0) a ZX swap,
    (1,1) a shear followed by a swap. The target is the highest selected pair.
    """
    if len(s) != 2 * live_count:
        raise LengthMismatch(f"query length {len(s)} != 2 * {live_count} live pairs")
    if s.is_zero():
        raise ZeroQuery("the all-zero query carries no information")
    prefixes, selected = [], []
    for j in range(live_count):
        sz, sx = s[2 * j], s[2 * j + 1]
        if not (sz or sx):
            continue
        selected.append(j)
        prefixes.append((j, SHEAR_SWAP if sz and sx else SWAP if sz else NONE))
    target = selected[-1]
    return ParityProgram(s, tuple(prefixes), tuple(selected[:-1]), target)


def execute_on_register(prog: ParityProgram, reg: PairRegister, rng) -> tuple[int, int, PairRegister]:
    """Both Bobs' local actions for one round; returns their measured bits."""
    for step in prog.steps():
        op = step[0]
        if op == "SHEAR":
            reg = bellsim.apply_shear(reg, step[1])
        elif op == "SWAP_ZX":
            reg = bellsim.apply_swap_zx(reg, step[1])
        elif op == "BXOR":
            reg = bellsim.apply_bxor(reg, step[1], step[2])
        else:
            return bellsim.measure_pair(reg, step[1], rng)
    raise AssertionError("program has no measurement")


@dataclass(frozen=True)
class LinearModel:
    """Alice's record of every quantity as a row (int bitmask) over the original string.

    Bit ``i`` of a row refers to position ``i`` of (z1, x1, z2, x2, ...).
    """

    n: int
    parity_rows: tuple[int, ...]
    live_rows: tuple[tuple[int, int], ...]

    @classmethod
    def initial(cls, n: int) -> LinearModel:
        return cls(n, (), tuple((1 << (2 * j), 1 << (2 * j + 1)) for j in range(n)))

    @property
    def live_count(self) -> int:
        return len(self.live_rows)

    def after(self, prog: ParityProgram) -> LinearModel:
        rows = [list(r) for r in self.live_rows]
        if not 0 <= prog.target < len(rows):
            raise IndexOutOfRange(f"target pair {prog.target} is not live")
        for step in prog.steps():
            op = step[0]
            if op == "SHEAR":
                zr, xr = rows[step[1]]
                rows[step[1]] = [zr ^ xr, xr]
            elif op == "SWAP_ZX":
                zr, xr = rows[step[1]]
                rows[step[1]] = [xr, zr]
            elif op == "BXOR":
                src, tgt = step[1], step[2]
                rows[tgt][1] ^= rows[src][1]
                rows[src][0] ^= rows[tgt][0]
        parity_row = rows[prog.target][1]
        del rows[prog.target]
        return LinearModel(self.n, self.parity_rows + (parity_row,), tuple(map(tuple, rows)))

    def parity_vec(self, i: int) -> Gf2Vec:
        return Gf2Vec.from_mask(self.parity_rows[i], 2 * self.n)

    def live_labels(self, v_mask: int) -> tuple[BellLabel, ...]:
        return tuple(BellLabel(_par(zr & v_mask), _par(xr & v_mask)) for zr, xr in self.live_rows)


def _par(x: int) -> int:
    return bin(x).count("1") & 1


def hashing_round(reg: PairRegister, s: Gf2Vec, model: LinearModel, rng):
    """One round: returns (parity, register after, model after)."""
    if reg.live_count != model.live_count:
        raise LengthMismatch("register and model disagree on the live pair count")
    prog = compile_parity_program(s, reg.live_count)
    b1, b2, reg = execute_on_register(prog, reg, rng)
    return b1 ^ b2, reg, model.after(prog)


# --- decoding ---------------------------------------------------------------

@dataclass(frozen=True)
class Decoded:
    """Result of exact ML decoding. ``ambiguous`` is set when the maximum is tied."""

    string: tuple[BellLabel, ...] | None
    ambiguous: bool
    consistent: int
    ties: int
    log_prob: float

    @property
    def mask(self) -> int:
        return string_mask(self.string)


def _solve_gf2(rows: Sequence[int], values: Sequence[int], nbits: int) -> tuple[int | None, list[int]]:
    """Particular solution and null-space basis of ``row . v = value`` over GF(2)."""
    pivots: list[tuple[int, int, int]] = []  # (pivot bit, row, value)
    for row, val in zip(rows, values):
        for pbit, prow, pval in pivots:
            if row >> pbit & 1:
                row ^= prow
                val ^= pval
        if row == 0:
            if val:
                return None, []
            continue
        pbit = row.bit_length() - 1
        # keep the reduced form: clear this pivot from earlier rows
        pivots = [(b, r ^ row, v ^ val) if r >> pbit & 1 else (b, r, v) for b, r, v in pivots]
        pivots.append((pbit, row, val))
    particular = 0
    for pbit, _row, val in pivots:
        if val:
            particular |= 1 << pbit
    pivot_bits = {b for b, _, _ in pivots}
    basis = []
    for free in range(nbits):
        if free in pivot_bits:
            continue
        vec = 1 << free
        for pbit, prow, _ in pivots:
            if prow >> free & 1:
                vec |= 1 << pbit
        basis.append(vec)
    return particular, basis


def _label_codes(cands: np.ndarray, n: int) -> np.ndarray:
    z = (cands[:, None] >> (2 * np.arange(n))) & 1
    x = (cands[:, None] >> (2 * np.arange(n) + 1)) & 1
    return 2 * z + x


def decode_ml(parities: Sequence[int], model: LinearModel, prior: PairDist, n: int | None = None,
              decode_cap: int = DEFAULT_DECODE_CAP) -> Decoded:
    """Most probable i.i.d.-prior string consistent with every recorded parity."""
    n = model.n if n is None else n
    if n > decode_cap:
        raise ConfigError(f"exact decoding is capped at n={decode_cap}, got {n}")
    if len(parities) != len(model.parity_rows):
        raise LengthMismatch("one recorded parity per model row is required")
    nbits = 2 * n
    particular, basis = _solve_gf2(model.parity_rows, parities, nbits)
    if particular is None:
        return Decoded(None, True, 0, 0, -math.inf)
    cands = np.array([particular], dtype=np.int64)
    for b in basis:
        cands = np.concatenate([cands, cands ^ b])
    with np.errstate(divide="ignore"):
        logp = np.log(np.array(prior.probs, dtype=float))
    scores = logp[_label_codes(cands, n)].sum(axis=1)
    best = scores.max()
    if not np.isfinite(best):
        return Decoded(None, True, len(cands), len(cands), best)
    ties = int(np.count_nonzero(scores >= best - 1e-9 * max(1.0, abs(best))))
    winner = int(cands[int(np.argmax(scores))])
    return Decoded(string_from_mask(winner, n), ties > 1, len(cands), ties, float(best))


# --- full runs ----------------------------------------------------------------

@dataclass(frozen=True)
class DistillStats:
    fidelity: float
    entropy: float
    pairs: int
    rounds: int
    yield_pairs: int
    decode_success: bool


@dataclass(frozen=True)
class HashingRun:
    stats: DistillStats
    inferred_labels: tuple[BellLabel, ...] | None
    register: PairRegister
    initial: PairRegister
    queries: tuple[Gf2Vec, ...]
    parities: tuple[int, ...]
    model: LinearModel
    decoded: Decoded

    @property
    def recovered(self) -> bool:
        """Whether the decoded string equals the hidden ground truth (harness-only knowledge)."""
        return not self.decoded.ambiguous and self.decoded.string == self.initial.labels

    @property
    def labels_correct(self) -> bool:
        return self.inferred_labels == self.register.labels


def run_hashing(cfg: HashingConfig, w: WernerParams | float, rng, register: PairRegister | None = None,
                query_rng=None) -> HashingRun:
    """Sample ``n`` Werner pairs (unless given), hash for ``R`` rounds and decode.

    ``query_rng`` lets the caller keep Alice's query stream separate from the
    physical randomness; by default both come from ``rng``.
    """
    w = w if isinstance(w, WernerParams) else WernerParams(float(w))
    rounds = cfg.rounds(w)
    if cfg.n > cfg.decode_cap:
        raise ConfigError(f"exact decoding is capped at n={cfg.decode_cap}, got n={cfg.n}")
    prior = werner_dist(w)
    reg = register if register is not None else bellsim.sample_register(prior, cfg.n, rng)
    if reg.live_count != cfg.n:
        raise LengthMismatch(f"register has {reg.live_count} pairs, config says {cfg.n}")
    initial = reg
    query_rng = rng if query_rng is None else query_rng
    model = LinearModel.initial(cfg.n)
    queries, parities = [], []
    for _ in range(rounds):
        s = draw_query(query_rng, 2 * reg.live_count)
        parity, reg, model = hashing_round(reg, s, model, rng)
        queries.append(s)
        parities.append(parity)
    decoded = decode_ml(parities, model, prior, cfg.n, cfg.decode_cap)
    inferred = None if decoded.ambiguous else model.live_labels(decoded.mask)
    stats = DistillStats(w.fidelity, entropy(w), cfg.n, rounds, cfg.n - rounds, not decoded.ambiguous)
    return HashingRun(stats, inferred, reg, initial, tuple(queries), tuple(parities), model, decoded)
