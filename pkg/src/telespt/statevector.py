"""Dense statevector backend.

Amplitudes are indexed with site 1 as the most significant bit.  Outcomes of
measurements are kept as a classical record of ``(id, bit, probability)``;
bit 0 is the +1 eigenvalue of the involutory observable.  For small
protocols ``DilatedState`` keeps the outcome registers as real qubits so the
classical record can be checked against the dilated channel itself.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import ImpossibleOutcomeError
from .gates import Gate
from .observables import InvolutoryObservable
from .pauli import PAULI_MATRICES, PauliString

ZERO_PROBABILITY = 1e-12
MAX_DENSE_SITES = 26

_SQ2 = 1 / np.sqrt(2)
LABEL_VECTORS = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([_SQ2, _SQ2], dtype=complex),
    "-": np.array([_SQ2, -_SQ2], dtype=complex),
    "y+": np.array([_SQ2, 1j * _SQ2], dtype=complex),
    "y-": np.array([_SQ2, -1j * _SQ2], dtype=complex),
}


def normalize_label(label: str) -> str:
    label = str(label).strip().replace("−", "-")
    return {"+y": "y+", "-y": "y-", "x+": "+", "x-": "-", "z+": "0", "z-": "1"}.get(
        label, label
    )


def logical_slot(label: str) -> int | None:
    """Slot number of a ``logical:n`` label, else None."""
    label = normalize_label(label)
    if label.startswith("logical:"):
        return int(label.split(":", 1)[1])
    return None


@dataclass(frozen=True)
class Forced:
    bit: int


@dataclass
class Sampled:
    """Draw outcomes from ``rng``; one uniform variate per measurement."""

    rng: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> Sampled:
        return cls(np.random.default_rng(np.uint64(seed % 2**64)))

    def draw(self, p0: float) -> int:
        return 0 if self.rng.random() < p0 else 1


MeasureMode = Union[Forced, Sampled]


@dataclass(frozen=True)
class DenseOperator:
    """Small dense operator on an ordered site list (first site most significant)."""

    sites: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        sites = tuple(int(s) for s in self.sites)
        m = np.asarray(self.matrix, dtype=complex)
        if len(sites) > 4:
            raise ValueError("dense operators are limited to 4 sites")
        if m.shape != (2 ** len(sites),) * 2:
            raise ValueError("matrix shape does not match site count")
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_gate(cls, gate: Gate) -> DenseOperator:
        return cls(gate.sites, gate.matrix)

    def is_unitary(self, tol: float = 1e-12) -> bool:
        m = self.matrix
        return np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=tol, rtol=0)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return np.allclose(self.matrix, self.matrix.conj().T, atol=tol, rtol=0)

    def adjoint(self) -> DenseOperator:
        return DenseOperator(self.sites, self.matrix.conj().T)


Operator = Union[PauliString, DenseOperator, Gate]


class StateVector:
    """Pure state on ``num_sites`` qubits plus its outcome record."""

    def __init__(self, amplitudes: np.ndarray, outcome_record=None):
        amplitudes = np.asarray(amplitudes, dtype=complex).reshape(-1)
        n = int(round(np.log2(amplitudes.size)))
        if 2**n != amplitudes.size:
            raise ValueError("amplitude count is not a power of two")
        self.num_sites = n
        self.amplitudes = amplitudes
        self.outcome_record: list[tuple[str, int, float]] = list(outcome_record or [])

    def copy(self) -> StateVector:
        return StateVector(self.amplitudes.copy(), self.outcome_record)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def _check_sites(self, sites: Iterable[int]):
        for s in sites:
            if not 1 <= s <= self.num_sites:
                raise IndexError(f"site {s} outside 1..{self.num_sites}")

    # unitaries

    def apply_matrix(self, sites: Sequence[int], matrix: np.ndarray) -> StateVector:
        sites = tuple(sites)
        self._check_sites(sites)
        k = len(sites)
        n = self.num_sites
        psi = self.amplitudes.reshape((2,) * n)
        op = np.asarray(matrix, dtype=complex).reshape((2,) * (2 * k))
        axes = [s - 1 for s in sites]
        out = np.tensordot(op, psi, axes=(list(range(k, 2 * k)), axes))
        out = np.moveaxis(out, list(range(k)), axes)
        self.amplitudes = np.ascontiguousarray(out).reshape(-1)
        return self

    def apply_gate(self, gate: Gate) -> StateVector:
        if gate.name in ("CZ", "CCZ"):
            return self._apply_controlled_phase(gate.sites)
        return self.apply_matrix(gate.sites, gate.matrix)

    def _apply_controlled_phase(self, sites: Sequence[int]) -> StateVector:
        self._check_sites(sites)
        psi = self.amplitudes.reshape((2,) * self.num_sites)
        index = [slice(None)] * self.num_sites
        for s in sites:
            index[s - 1] = 1
        psi[tuple(index)] *= -1
        return self

    def apply_pauli(self, p: PauliString) -> StateVector:
        self.amplitudes = _pauli_apply(p, self.amplitudes, self.num_sites)
        return self

    def apply(self, op: Operator) -> StateVector:
        if isinstance(op, PauliString):
            return self.apply_pauli(op)
        if isinstance(op, Gate):
            return self.apply_gate(op)
        return self.apply_matrix(op.sites, op.matrix)

    # measurement

    def observable_image(self, observable) -> np.ndarray:
        """Amplitudes of ``Abar |psi>`` for a measured observable."""
        if isinstance(observable, PauliString):
            return _pauli_apply(observable, self.amplitudes, self.num_sites)
        if isinstance(observable, InvolutoryObservable):
            image = self.copy()
            image.apply_matrix((observable.site,), observable.matrix)
            return image.amplitudes
        raise TypeError(f"unsupported observable {observable!r}")

    def _single_site(self, observable):
        """(site, 2x2 matrix) when the observable acts on one site, else None."""
        if isinstance(observable, InvolutoryObservable):
            return observable.site, observable.matrix
        if isinstance(observable, PauliString) and observable.weight == 1:
            (site, letter), = observable.items()
            return site, observable.sign * PAULI_MATRICES[letter]
        return None

    def _site_view(self, site: int) -> np.ndarray:
        self._check_sites((site,))
        return self.amplitudes.reshape(2 ** (site - 1), 2, -1)

    def branch_probabilities(self, observable) -> tuple[float, float]:
        local = self._single_site(observable)
        if local is not None:
            view = self._site_view(local[0])
            v0, v1 = view[:, 0, :], view[:, 1, :]
            r00 = float(np.sum(v0.real**2 + v0.imag**2))
            r11 = float(np.sum(v1.real**2 + v1.imag**2))
            r01 = complex(np.vdot(v1, v0))
            rho = np.array([[r00, r01], [np.conj(r01), r11]])
            mean = float(np.real(np.trace(local[1] @ rho)))
        else:
            image = self.observable_image(observable)
            mean = float(np.real(np.vdot(self.amplitudes, image)))
        p0 = min(max((1 + mean) / 2, 0.0), 1.0)
        return p0, 1 - p0

    def measure(
        self, observable, mode: MeasureMode, outcome_id: str = "m", p0: float | None = None
    ) -> tuple[int, float]:
        """Project onto a sampled or forced outcome; ``p0`` skips recomputing Prob(0)."""
        local = self._single_site(observable)
        if local is None:
            image = self.observable_image(observable)
            plus = (self.amplitudes + image) / 2
            if p0 is None:
                p0 = float(np.real(np.vdot(plus, plus)))
        elif p0 is None:
            p0 = self.branch_probabilities(observable)[0]
        p0 = min(max(p0, 0.0), 1.0)
        if isinstance(mode, Forced):
            bit = int(mode.bit)
        else:
            bit = mode.draw(p0)
        prob = p0 if bit == 0 else 1 - p0
        if prob <= ZERO_PROBABILITY:
            raise ImpossibleOutcomeError(
                f"outcome {bit} of {outcome_id} has probability {prob:.3g}"
            )
        if local is None:
            projected = plus if bit == 0 else (self.amplitudes - image) / 2
            self.amplitudes = projected / np.sqrt(prob)
        else:
            sign = 1 if bit == 0 else -1
            proj = (np.eye(2) + sign * local[1]) / (2 * np.sqrt(prob))
            view = self._site_view(local[0])
            v0, v1 = view[:, 0, :], view[:, 1, :]
            out = np.empty_like(view)
            out[:, 0, :] = proj[0, 0] * v0 + proj[0, 1] * v1
            out[:, 1, :] = proj[1, 0] * v0 + proj[1, 1] * v1
            self.amplitudes = out.reshape(-1)
        self.outcome_record.append((outcome_id, bit, prob))
        return bit, prob

    # readout

    def expectation(self, *ops: Operator) -> complex:
        """``<psi| O_1 O_2 ... |psi>`` for a product of operators."""
        # adjacent Pauli factors collapse into one pass over the amplitudes
        merged: list = []
        for op in ops:
            if merged and isinstance(op, PauliString) and isinstance(merged[-1], PauliString):
                merged[-1] = merged[-1] * op
            else:
                merged.append(op)
        if merged and isinstance(merged[-1], PauliString):
            # the Pauli kernel returns a fresh array, so no defensive copy is needed
            work = StateVector(_pauli_apply(merged.pop(), self.amplitudes, self.num_sites))
        else:
            work = self.copy()
        for op in reversed(merged):
            work.apply(op)
        return complex(np.vdot(self.amplitudes, work.amplitudes))

    def reduced_density_matrix(self, sites: Sequence[int]) -> np.ndarray:
        sites = tuple(sites)
        self._check_sites(sites)
        n = self.num_sites
        psi = self.amplitudes.reshape((2,) * n)
        keep = [s - 1 for s in sites]
        rest = [j for j in range(n) if j not in keep]
        m = np.transpose(psi, keep + rest).reshape(2 ** len(keep), -1)
        return m @ m.conj().T

    def fidelity_with(self, other: StateVector) -> float:
        return float(abs(np.vdot(self.amplitudes, other.amplitudes)) ** 2)


def _index_masks(p: PauliString, n: int) -> tuple[int, int]:
    xm = zm = 0
    for site, letter in p.items():
        bit = 1 << (n - site)
        if letter in "XY":
            xm |= bit
        if letter in "YZ":
            zm |= bit
    return xm, zm


def _pauli_apply(p: PauliString, amps: np.ndarray, n: int) -> np.ndarray:
    """``coef * X^x Z^z`` as an axis flip plus sign slices on the site tensor."""
    if p.num_sites != n:
        raise ValueError(f"Pauli on {p.num_sites} sites applied to {n}-site state")
    n_y = (p.x_bits & p.z_bits).bit_count()
    coef = (1, 1j, -1, -1j)[(p.power + n_y) % 4]
    items = list(p.items())
    flips = tuple(site - 1 for site, letter in items if letter in "XY")
    t = amps.reshape((2,) * n)
    out = coef * (np.flip(t, axis=flips) if flips else t)
    for site, letter in items:
        if letter in "YZ":
            # Z acts before X, so a flipped site reads its input bit as 1 - output bit
            bit = 0 if letter == "Y" else 1
            out[(slice(None),) * (site - 1) + (bit,)] *= -1
    return out.reshape(-1)


def init_product_state(labels: Sequence[str], logical_inputs=()) -> StateVector:
    """Product state from site labels; ``logical:n`` takes ``logical_inputs[n-1]``."""
    labels = [normalize_label(lab) for lab in labels]
    if len(labels) > MAX_DENSE_SITES:
        raise ValueError(f"{len(labels)} sites exceed the dense limit {MAX_DENSE_SITES}")
    slots = [logical_slot(lab) for lab in labels]
    used = sorted(s for s in slots if s is not None)
    if len(set(used)) != len(used):
        raise ValueError("a logical slot appears more than once")
    if used and used != list(range(1, len(logical_inputs) + 1)):
        raise ValueError(
            f"logical slots {used} do not match {len(logical_inputs)} inputs"
        )
    if not used and logical_inputs:
        raise ValueError("logical inputs given but no logical slot declared")
    vec = np.ones(1, dtype=complex)
    for lab, slot in zip(labels, slots):
        if slot is not None:
            a, b = logical_inputs[slot - 1]
            if abs(abs(a) ** 2 + abs(b) ** 2 - 1) > 1e-10:
                raise ValueError(f"logical input {slot} is not normalized")
            v = np.array([a, b], dtype=complex)
        else:
            if lab not in LABEL_VECTORS:
                raise ValueError(f"unsupported state label {lab!r}")
            v = LABEL_VECTORS[lab]
        vec = np.kron(vec, v)
    return StateVector(vec)


def apply_unitary(state: StateVector, op: DenseOperator | Gate) -> StateVector:
    if isinstance(op, DenseOperator) and not op.is_unitary():
        raise ValueError("operator is not unitary")
    return state.apply(op)


def measure(
    state: StateVector, observable, mode: MeasureMode, outcome_id: str = "m"
) -> tuple[int, float, StateVector]:
    bit, prob = state.measure(observable, mode, outcome_id)
    return bit, prob, state


def expectation(state: StateVector, *ops: Operator) -> complex:
    return state.expectation(*ops)


@dataclass(frozen=True)
class Tomography:
    bloch: tuple[float, float, float]
    fidelity: float


def logical_tomography(state: StateVector, site: int, reference=(1, 0)) -> Tomography:
    rho = state.reduced_density_matrix((site,))
    bloch = (
        float(2 * np.real(rho[0, 1])),
        float(-2 * np.imag(rho[0, 1])),
        float(np.real(rho[0, 0] - rho[1, 1])),
    )
    ref = np.asarray(reference, dtype=complex)
    fid = float(np.real(ref.conj() @ rho @ ref))
    return Tomography(bloch, fid)


@dataclass
class DilatedState:
    """Physical qubits followed by explicit outcome-register qubits.

    Registers start in |0>; a measurement of ``Abar`` on register ``r`` is
    the controlled map ``P0 (x) 1 + P1 (x) X_r`` and a recovery is
    ``1 (x) Pbar0 + chi (x) Pbar1`` on the parity of the listed registers.
    """

    physical_sites: int
    registers: list[str]
    state: StateVector = field(repr=False)
    MAX_REGISTERS = 6

    @classmethod
    def from_physical(cls, physical: StateVector, registers: Sequence[str]) -> DilatedState:
        registers = list(registers)
        if len(registers) > cls.MAX_REGISTERS:
            raise ValueError("explicit dilation is limited to 6 registers")
        amps = np.kron(physical.amplitudes, np.eye(1, 2 ** len(registers), dtype=complex)[0])
        return cls(physical.num_sites, registers, StateVector(amps))

    def _register_site(self, rid: str) -> int:
        return self.physical_sites + self.registers.index(rid) + 1

    def _lift(self, p: PauliString) -> PauliString:
        total = self.state.num_sites
        return PauliString(total, p.x_bits, p.z_bits, p.power)

    def apply_gate(self, gate: Gate):
        self.state.apply_gate(gate)

    def measure(self, observable, rid: str):
        site = self._register_site(rid)
        if isinstance(observable, PauliString):
            image = _pauli_apply(self._lift(observable), self.state.amplitudes, self.state.num_sites)
        else:
            work = self.state.copy()
            work.apply_matrix((observable.site,), observable.matrix)
            image = work.amplitudes
        p0_part = (self.state.amplitudes + image) / 2
        p1_part = (self.state.amplitudes - image) / 2
        flipped = StateVector(p1_part).apply_pauli(
            PauliString.single(self.state.num_sites, site, "X")
        )
        self.state = StateVector(p0_part + flipped.amplitudes)

    def recover(self, chi: PauliString, rids: Sequence[str]):
        total = self.state.num_sites
        parity = PauliString.from_sites(total, {self._register_site(r): "Z" for r in rids})
        amps = self.state.amplitudes
        even = (amps + _pauli_apply(parity, amps, total)) / 2
        odd = amps - even
        self.state = StateVector(even + _pauli_apply(self._lift(chi), odd, total))

    def branch(self, bits: Sequence[int]) -> np.ndarray:
        """Unnormalized physical amplitudes for the register record ``bits``."""
        m = len(self.registers)
        index = int("".join(str(b) for b in bits), 2) if m else 0
        return self.state.amplitudes.reshape(-1, 2**m)[:, index]
