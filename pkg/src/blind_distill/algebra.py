"""Exact arithmetic on angles k*pi/4, Bell labels and GF(2) vectors.

Angles never touch floating point here; conversion to radians happens only
in :mod:`blind_distill.statevec`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import LengthMismatch


@dataclass(frozen=True, order=True)
class Angle8:
    """The angle ``k*pi/4`` with ``k`` taken mod 8."""

    k: int

    def __post_init__(self):
        if not isinstance(self.k, int) or isinstance(self.k, bool):
            raise TypeError(f"Angle8.k must be int, got {type(self.k).__name__}")
        object.__setattr__(self, "k", self.k % 8)

    def __add__(self, other: Angle8) -> Angle8:
        return add(self, other)

    def __neg__(self) -> Angle8:
        return Angle8(-self.k)

    def plus_pi(self, bit: int = 1) -> Angle8:
        return Angle8(self.k + 4 * (bit & 1))

    @property
    def radians(self) -> float:
        return self.k * math.pi / 4

    def __repr__(self):
        return f"Angle8({self.k})"


ZERO = Angle8(0)
PI = Angle8(4)
ALL_ANGLES = tuple(Angle8(k) for k in range(8))


def add(a: Angle8, b: Angle8) -> Angle8:
    return Angle8(a.k + b.k)


@dataclass(frozen=True, order=True)
class BellLabel:
    """Index ``(z, x)`` of the Bell state ``(I ⊗ X^x Z^z)(|00> + |11>)/sqrt2``."""

    z: int
    x: int

    def __post_init__(self):
        if self.z not in (0, 1) or self.x not in (0, 1):
            raise ValueError(f"Bell label bits must be 0/1, got ({self.z}, {self.x})")

    def to_int(self) -> int:
        return 2 * self.z + self.x

    @classmethod
    def from_int(cls, value: int) -> BellLabel:
        if not 0 <= value <= 3:
            raise ValueError(f"Bell label code must be in 0..3, got {value}")
        return cls(value >> 1, value & 1)

    def __iter__(self):
        yield self.z
        yield self.x

    def __repr__(self):
        return f"BellLabel({self.z},{self.x})"


ALL_LABELS = tuple(BellLabel.from_int(i) for i in range(4))
SINGLET = BellLabel(1, 1)

# Ordered sequence of pair labels; bit order when flattened is z1, x1, z2, x2, ...
BellString = tuple


def bell_string(labels: Iterable) -> tuple[BellLabel, ...]:
    return tuple(lab if isinstance(lab, BellLabel) else BellLabel(*lab) for lab in labels)


def string_bits(v: Sequence[BellLabel]) -> tuple[int, ...]:
    bits = []
    for lab in v:
        bits.extend((lab.z, lab.x))
    return tuple(bits)


def string_from_bits(bits: Sequence[int]) -> tuple[BellLabel, ...]:
    if len(bits) % 2:
        raise LengthMismatch(f"odd bit count {len(bits)} cannot form a Bell string")
    return tuple(BellLabel(bits[i], bits[i + 1]) for i in range(0, len(bits), 2))


def string_mask(v: Sequence[BellLabel]) -> int:
    """Pack a Bell string into an int; bit ``i`` is position ``i`` of (z1, x1, ...)."""
    mask = 0
    for j, lab in enumerate(v):
        mask |= (lab.z << (2 * j)) | (lab.x << (2 * j + 1))
    return mask


def string_from_mask(mask: int, n: int) -> tuple[BellLabel, ...]:
    return tuple(BellLabel((mask >> (2 * j)) & 1, (mask >> (2 * j + 1)) & 1) for j in range(n))


@dataclass(frozen=True)
class Gf2Vec:
    """A bit vector over GF(2), e.g. a hashing query over the live pairs."""

    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError("Gf2Vec entries must be 0/1")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_str(cls, text: str) -> Gf2Vec:
        return cls(tuple(int(c) for c in text))

    def __len__(self):
        return len(self.bits)

    def __iter__(self):
        return iter(self.bits)

    def __getitem__(self, i):
        return self.bits[i]

    def __xor__(self, other: Gf2Vec) -> Gf2Vec:
        if len(self) != len(other):
            raise LengthMismatch(f"cannot xor vectors of length {len(self)} and {len(other)}")
        return Gf2Vec(tuple(a ^ b for a, b in zip(self.bits, other.bits)))

    def is_zero(self) -> bool:
        return not any(self.bits)

    def to_mask(self) -> int:
        mask = 0
        for i, b in enumerate(self.bits):
            mask |= b << i
        return mask

    @classmethod
    def from_mask(cls, mask: int, length: int) -> Gf2Vec:
        return cls(tuple((mask >> i) & 1 for i in range(length)))

    def to_hex(self) -> str:
        """Hex of the bit string read left to right, zero-padded to whole nibbles."""
        if not self.bits:
            return ""
        text = "".join(map(str, self.bits))
        text += "0" * (-len(text) % 4)
        return format(int(text, 2), f"0{len(text) // 4}x")

    @classmethod
    def from_hex(cls, text: str, length: int) -> Gf2Vec:
        if length == 0:
            return cls(())
        raw = format(int(text, 16), f"0{4 * len(text)}b")
        if len(raw) < length or any(c != "0" for c in raw[length:]):
            raise LengthMismatch(f"hex {text!r} does not encode a {length}-bit vector")
        return cls(tuple(int(c) for c in raw[:length]))

    def __str__(self):
        return "".join(map(str, self.bits))


def reflect(theta: Angle8, label: BellLabel) -> Angle8:
    """Angle Bob1 must use on his half of a Bell pair with the given label.

    ``(-1)^x * theta + z*pi``. Measuring the pair at ``-reflect(theta, label)``
    leaves the partner qubit in ``|theta + b*pi>``.
    """
    k = -theta.k if label.x else theta.k
    return Angle8(k + 4 * label.z)


def compose_delta(theta: Angle8, b: int, phi_adapted: Angle8, r: int) -> Angle8:
    return Angle8(theta.k + 4 * (b & 1) + phi_adapted.k + 4 * (r & 1))


def dot(s: Gf2Vec, v: Sequence[BellLabel]) -> int:
    bits = string_bits(v)
    if len(s) != len(bits):
        raise LengthMismatch(f"query has {len(s)} bits but string has {len(bits)}")
    return sum(a & b for a, b in zip(s.bits, bits)) & 1
