"""Signed multi-qubit Pauli strings with exact phase tracking.

A string on ``n`` sites is stored as two Python integers used as bitsets
(bit ``j-1`` belongs to site ``j``) plus the exponent ``k`` of the global
phase ``i**k``.  Letters follow the usual symplectic encoding::

    I = (x=0, z=0)   X = (1, 0)   Y = (1, 1)   Z = (0, 1)

where the letter Y denotes the Hermitian Pauli matrix itself, so the
operator is ``i**k * P_1 (x) ... (x) P_n``.  Python integers make products
and commutation checks on 10^4-site strings cheap and keep every value
immutable and hashable.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

LETTERS = "IXYZ"
_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_PHASE_TEXT = {0: "", 1: "+i", 2: "-", 3: "-i"}
_PHASE_VALUE = (1, 1j, -1, -1j)

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class DimensionError(ValueError):
    """Raised when two operators live on different numbers of sites."""


class PauliParseError(ValueError):
    """Raised for malformed Pauli text; ``position`` is 1-indexed."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


def _popcount(v: int) -> int:
    return v.bit_count()


def _letter_index(x: int, z: int) -> str:
    if x:
        return "Y" if z else "X"
    return "Z" if z else "I"


@dataclass(frozen=True)
class PauliString:
    """Pauli operator ``i**power * P_1 ... P_n`` on ``num_sites`` qubits."""

    num_sites: int
    x_bits: int = 0
    z_bits: int = 0
    power: int = 0

    def __post_init__(self):
        if self.num_sites < 0:
            raise ValueError("num_sites must be non-negative")
        mask = (1 << self.num_sites) - 1
        if self.x_bits & ~mask or self.z_bits & ~mask:
            raise ValueError("support bits exceed num_sites")
        object.__setattr__(self, "power", self.power % 4)

    # construction

    @classmethod
    def identity(cls, num_sites: int) -> PauliString:
        return cls(num_sites)

    @classmethod
    def single(cls, num_sites: int, site: int, letter: str) -> PauliString:
        return cls.from_sites(num_sites, {site: letter})

    @classmethod
    def from_sites(
        cls, num_sites: int, letters: Mapping[int, str], power: int = 0
    ) -> PauliString:
        """Build from a ``{site: letter}`` map with 1-indexed sites."""
        x = z = 0
        for site, letter in letters.items():
            if not 1 <= site <= num_sites:
                raise IndexError(f"site {site} outside 1..{num_sites}")
            bx, bz = _BITS[letter]
            bit = 1 << (site - 1)
            if (x | z) & bit:
                raise ValueError(f"site {site} listed twice")
            x |= bit * bx
            z |= bit * bz
        return cls(num_sites, x, z, power)

    # views

    @property
    def phase(self) -> complex:
        return _PHASE_VALUE[self.power]

    @property
    def sign(self) -> int:
        """+1 or -1 for Hermitian strings."""
        if self.power % 2:
            raise ValueError("string with phase +-i has no real sign")
        return 1 if self.power == 0 else -1

    @property
    def is_hermitian(self) -> bool:
        return self.power % 2 == 0

    @property
    def x_support(self) -> np.ndarray:
        return np.array([(self.x_bits >> j) & 1 for j in range(self.num_sites)], dtype=bool)

    @property
    def z_support(self) -> np.ndarray:
        return np.array([(self.z_bits >> j) & 1 for j in range(self.num_sites)], dtype=bool)

    def letter(self, site: int) -> str:
        if not 1 <= site <= self.num_sites:
            raise IndexError(f"site {site} outside 1..{self.num_sites}")
        bit = site - 1
        return _letter_index((self.x_bits >> bit) & 1, (self.z_bits >> bit) & 1)

    def support(self) -> tuple[int, ...]:
        bits = self.x_bits | self.z_bits
        out = []
        while bits:
            low = bits & -bits
            out.append(low.bit_length())
            bits ^= low
        return tuple(out)

    @property
    def weight(self) -> int:
        return _popcount(self.x_bits | self.z_bits)

    def items(self) -> list[tuple[int, str]]:
        """Non-identity ``(site, letter)`` pairs in ascending site order."""
        return [(s, self.letter(s)) for s in self.support()]

    def is_identity(self) -> bool:
        return not (self.x_bits | self.z_bits)

    def unsigned(self) -> PauliString:
        return PauliString(self.num_sites, self.x_bits, self.z_bits, 0)

    # algebra

    def _check(self, other: PauliString):
        if self.num_sites != other.num_sites:
            raise DimensionError(
                f"operators on {self.num_sites} and {other.num_sites} sites"
            )

    def __mul__(self, other: PauliString) -> PauliString:
        self._check(other)
        x1, z1, x2, z2 = self.x_bits, self.z_bits, other.x_bits, other.z_bits
        y1 = x1 & z1
        xo = x1 & ~z1
        zo = z1 & ~x1
        y2 = x2 & z2
        xo2 = x2 & ~z2
        zo2 = z2 & ~x2
        # per-site phases of the single-qubit tables: XY=iZ, YZ=iX, ZX=iY
        pos = _popcount(xo & y2) + _popcount(y1 & zo2) + _popcount(zo & xo2)
        neg = _popcount(y1 & xo2) + _popcount(xo & zo2) + _popcount(zo & y2)
        return PauliString(
            self.num_sites, x1 ^ x2, z1 ^ z2, self.power + other.power + pos - neg
        )

    def __neg__(self) -> PauliString:
        return PauliString(self.num_sites, self.x_bits, self.z_bits, self.power + 2)

    def times_phase(self, power: int) -> PauliString:
        """Multiply by ``i**power``."""
        return PauliString(self.num_sites, self.x_bits, self.z_bits, self.power + power)

    def adjoint(self) -> PauliString:
        return PauliString(self.num_sites, self.x_bits, self.z_bits, -self.power)

    def commutes(self, other: PauliString) -> bool:
        self._check(other)
        overlap = (self.x_bits & other.z_bits) ^ (self.z_bits & other.x_bits)
        return _popcount(overlap) % 2 == 0

    def overlaps(self, other: PauliString) -> bool:
        return bool((self.x_bits | self.z_bits) & (other.x_bits | other.z_bits))

    def restricted(self, sites: Iterable[int]) -> PauliString:
        """Keep only the letters on ``sites`` (phase dropped to +1)."""
        mask = 0
        for s in sites:
            mask |= 1 << (s - 1)
        return PauliString(self.num_sites, self.x_bits & mask, self.z_bits & mask)

    def to_matrix(self) -> np.ndarray:
        """Dense matrix, site 1 most significant; only for small strings."""
        if self.num_sites > 12:
            raise ValueError("dense form limited to 12 sites")
        m = np.array([[1.0 + 0j]])
        for s in range(1, self.num_sites + 1):
            m = np.kron(m, PAULI_MATRICES[self.letter(s)])
        return self.phase * m

    # text

    def __str__(self) -> str:
        body = "".join(self.letter(s) for s in range(1, self.num_sites + 1))
        return _PHASE_TEXT[self.power] + body

    def compact(self) -> str:
        """Sparse spelling such as ``-Z2X3X5``; identity prints as ``I``."""
        body = "".join(f"{letter}{site}" for site, letter in self.items()) or "I"
        return _PHASE_TEXT[self.power] + body

    def __repr__(self) -> str:
        return f"PauliString({str(self)!r})"


def parse_pauli(text: str, num_sites: int | None = None) -> PauliString:
    """Parse ``[+|-|+i|-i]`` followed by letters from ``IXYZ``.

    Positions in error messages count characters of ``text`` from 1.
    """
    power = 0
    offset = 0
    for prefix, p in (("+i", 1), ("-i", 3), ("+", 0), ("-", 2)):
        if text.startswith(prefix):
            power, offset = p, len(prefix)
            break
    body = text[offset:]
    x = z = 0
    for j, ch in enumerate(body):
        if ch not in _BITS:
            raise PauliParseError(f"invalid Pauli symbol {ch!r}", offset + j + 1)
        bx, bz = _BITS[ch]
        x |= bx << j
        z |= bz << j
    if num_sites is None:
        num_sites = len(body)
    if len(body) != num_sites:
        raise PauliParseError(
            f"expected {num_sites} symbols, found {len(body)}",
            offset + min(len(body), num_sites) + 1,
        )
    if num_sites == 0:
        raise PauliParseError("empty Pauli string", offset + 1)
    return PauliString(num_sites, x, z, power)


def format_pauli(p: PauliString) -> str:
    return str(p)


def pauli_mul(p: PauliString, q: PauliString) -> PauliString:
    return p * q


def commutes(p: PauliString, q: PauliString) -> bool:
    return p.commutes(q)


def support(p: PauliString) -> tuple[int, ...]:
    return p.support()


def product(paulis: Iterable[PauliString], num_sites: int) -> PauliString:
    out = PauliString.identity(num_sites)
    for p in paulis:
        out = out * p
    return out


@dataclass(frozen=True)
class DilatedPauli:
    """Physical Pauli string times ``Z~`` on the listed outcome registers."""

    physical: PauliString
    outcome_z: frozenset[str] = field(default_factory=frozenset)

    def toggle_outcomes(self, ids: Iterable[str]) -> DilatedPauli:
        return DilatedPauli(self.physical, self.outcome_z.symmetric_difference(ids))

    def with_physical(self, physical: PauliString) -> DilatedPauli:
        return DilatedPauli(physical, self.outcome_z)

    def default_record(self) -> PauliString:
        """Project the outcome registers onto the all-zero record (Z~ -> 1)."""
        return self.physical

    def __str__(self) -> str:
        tail = "".join(f" Z~[{m}]" for m in sorted(self.outcome_z))
        return self.physical.compact() + tail
