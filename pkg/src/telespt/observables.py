"""Two-outcome single-site observables reduced to their involutory part.

Any nondegenerate 2x2 Hermitian ``A`` with eigenvalues ``l0 > l1`` has the
same spectral projectors as ``Abar = (2A - (l0 + l1) I) / (l0 - l1)``, a unit
Bloch axis contracted with the Pauli vector.  Measuring ``A`` and ``Abar``
is the same operation, so only the axis is kept.  Outcome 0 is the larger
eigenvalue (``Abar = +1``).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TrivialObservableError
from .pauli import PAULI_MATRICES, PauliString

GAP_TOLERANCE = 1e-10
_AXES = {"X": (1.0, 0.0, 0.0), "Y": (0.0, 1.0, 0.0), "Z": (0.0, 0.0, 1.0)}


@dataclass(frozen=True)
class InvolutoryObservable:
    """Single-site observable ``axis . (X, Y, Z)`` with a unit axis."""

    site: int
    axis: tuple[float, float, float]

    def __post_init__(self):
        axis = tuple(float(a) for a in self.axis)
        norm = float(np.linalg.norm(axis))
        if abs(norm - 1) > GAP_TOLERANCE:
            raise ValueError(f"axis {axis} is not a unit vector")
        object.__setattr__(self, "axis", axis)

    @classmethod
    def pauli_axis(cls, site: int, letter: str, sign: int = 1) -> InvolutoryObservable:
        return cls(site, tuple(sign * a for a in _AXES[letter.upper()]))

    @property
    def matrix(self) -> np.ndarray:
        x, y, z = self.axis
        return x * PAULI_MATRICES["X"] + y * PAULI_MATRICES["Y"] + z * PAULI_MATRICES["Z"]

    @property
    def pauli_letter(self) -> tuple[str, int] | None:
        """``(letter, sign)`` when the axis is exactly a signed Pauli axis."""
        for letter, ref in _AXES.items():
            for sign in (1, -1):
                if all(a == sign * r for a, r in zip(self.axis, ref)):
                    return letter, sign
        return None

    def to_pauli(self, num_sites: int) -> PauliString | None:
        tag = self.pauli_letter
        if tag is None:
            return None
        letter, sign = tag
        p = PauliString.single(num_sites, self.site, letter)
        return p if sign > 0 else -p

    def describe(self) -> str:
        tag = self.pauli_letter
        if tag is not None:
            return f"{'-' if tag[1] < 0 else ''}{tag[0]}{self.site}"
        x, y, z = self.axis
        return f"({x:.6g},{y:.6g},{z:.6g}).sigma{self.site}"


def involutory_part(a: np.ndarray, site: int = 1) -> InvolutoryObservable:
    """Return the involutory observable sharing eigenvectors with ``a``."""
    a = np.asarray(a, dtype=complex)
    if a.shape != (2, 2) or not np.allclose(a, a.conj().T, atol=1e-12):
        raise ValueError("expected a 2x2 Hermitian matrix")
    evals = np.linalg.eigvalsh(a)
    l1, l0 = float(evals[0]), float(evals[1])
    gap = l0 - l1
    if gap <= GAP_TOLERANCE * max(1.0, abs(l0), abs(l1)):
        raise TrivialObservableError("degenerate spectrum: measurement is uninformative")
    abar = (2 * a - (l0 + l1) * np.eye(2)) / gap
    axis = np.real(
        [np.trace(abar @ PAULI_MATRICES[k]) / 2 for k in "XYZ"]
    )
    axis = axis / np.linalg.norm(axis)
    # snap to an exact Pauli axis when the input already was one
    for ref in _AXES.values():
        for sign in (1, -1):
            if np.allclose(axis, sign * np.array(ref), atol=1e-14, rtol=0):
                axis = sign * np.array(ref)
    return InvolutoryObservable(site, tuple(float(c) for c in axis))


def hermitian_from_bloch(bloch, trace: float, gap: float) -> np.ndarray:
    """``trace/2 * I + gap/2 * (b . sigma)`` for the protocol file format."""
    b = np.asarray(bloch, dtype=float)
    sigma = b[0] * PAULI_MATRICES["X"] + b[1] * PAULI_MATRICES["Y"] + b[2] * PAULI_MATRICES["Z"]
    return trace / 2 * np.eye(2) + gap / 2 * sigma
