"""Named gates shared by both simulation backends and the protocol format.

Sites are 1-indexed.  For multi-site gates the first listed site is the
most significant tensor factor of the dense matrix (control first for CNOT
and for the Bell encoder ``BELL = CNOT(a->b) . H_a``).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

_SQ2 = 1 / np.sqrt(2)
_I2 = np.eye(2, dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) * _SQ2
_CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)

MATRICES: dict[str, np.ndarray] = {
    "I": _I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
    "H": _H,
    "S": np.diag([1, 1j]),
    "SDG": np.diag([1, -1j]),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "CNOT": _CNOT,
    "SWAP": np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
    ),
    "CCZ": np.diag([1, 1, 1, 1, 1, 1, 1, -1]).astype(complex),
    "BELL": _CNOT @ np.kron(_H, _I2),
    "BELLDG": np.kron(_H, _I2) @ _CNOT,
}

ARITY = {name: int(np.log2(m.shape[0])) for name, m in MATRICES.items()}
CLIFFORD = frozenset(ARITY) - {"CCZ"}
DIAGONAL = frozenset({"I", "Z", "S", "SDG", "CZ", "CCZ"})
INVERSE = {"S": "SDG", "SDG": "S", "BELL": "BELLDG", "BELLDG": "BELL"}
ALIASES = {"CX": "CNOT", "SD": "SDG", "SDAG": "SDG", "B": "BELL", "BDG": "BELLDG"}


class GateError(ValueError):
    """Unknown gate name, wrong arity or repeated site."""


@dataclass(frozen=True)
class Gate:
    """A named gate acting on an ordered tuple of 1-indexed sites."""

    name: str
    sites: tuple[int, ...]

    def __post_init__(self):
        name = ALIASES.get(self.name.upper(), self.name.upper())
        if name not in ARITY:
            raise GateError(f"unknown gate {self.name!r}")
        sites = tuple(int(s) for s in self.sites)
        if len(sites) != ARITY[name]:
            raise GateError(f"{name} acts on {ARITY[name]} sites, got {len(sites)}")
        if len(set(sites)) != len(sites):
            raise GateError(f"{name} lists a site twice: {sites}")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "sites", sites)

    @property
    def is_clifford(self) -> bool:
        return self.name in CLIFFORD

    @property
    def matrix(self) -> np.ndarray:
        return MATRICES[self.name]

    def inverse(self) -> Gate:
        return Gate(INVERSE.get(self.name, self.name), self.sites)

    def to_dict(self) -> dict:
        return {"g": self.name, "sites": list(self.sites)}


def kron_all(mats) -> np.ndarray:
    return reduce(np.kron, mats, np.eye(1, dtype=complex))


def cz_triangle(a: int, b: int, c: int) -> tuple[tuple[int, ...], np.ndarray]:
    """Product of CZ on the three edges of a triangle as a 3-site operator."""
    diag = np.ones(8, dtype=complex)
    for idx in range(8):
        bits = [(idx >> 2) & 1, (idx >> 1) & 1, idx & 1]
        parity = bits[0] * bits[1] + bits[1] * bits[2] + bits[0] * bits[2]
        diag[idx] = (-1) ** parity
    return (a, b, c), np.diag(diag)
