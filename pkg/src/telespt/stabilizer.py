"""Stabilizer backend: Clifford conjugation, a packed tableau, Heisenberg tracking.

The tableau follows the Aaronson-Gottesman layout (destabilizers in rows
``0..n-1``, stabilizers in rows ``n..2n-1``) but stores each row as packed
``uint64`` words so a gate touches one word column and a 10^4-site state
fits in a few tens of megabytes.  Row signs are bits (1 means a leading -1).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .errors import BackendUnsupportedError, ImpossibleOutcomeError
from .gates import Gate
from .pauli import DilatedPauli, PauliString, _popcount
from .statevector import Forced, MeasureMode, logical_slot, normalize_label

if TYPE_CHECKING:  # pragma: no cover
    from .protocol import CanonicalProtocol

# single-site stabilizer (letter, sign) of each product-state label
LABEL_STABILIZERS = {
    "0": ("Z", 1),
    "1": ("Z", -1),
    "+": ("X", 1),
    "-": ("X", -1),
    "y+": ("Y", 1),
    "y-": ("Y", -1),
}
_DESTABILIZER = {"Z": "X", "X": "Z", "Y": "Z"}


# Pauli conjugation


def _bit(v: int, j: int) -> int:
    return (v >> j) & 1


def conjugate(gate: Gate, p: PauliString) -> PauliString:
    """Return ``g p g^dagger`` for a Clifford gate ``g``."""
    name = gate.name
    if name == "BELL":
        a, b = gate.sites
        return conjugate(Gate("CNOT", (a, b)), conjugate(Gate("H", (a,)), p))
    if name == "BELLDG":
        a, b = gate.sites
        return conjugate(Gate("H", (a,)), conjugate(Gate("CNOT", (a, b)), p))
    if not gate.is_clifford:
        raise BackendUnsupportedError(f"{name} is not a Clifford gate")
    for s in gate.sites:
        if not 1 <= s <= p.num_sites:
            raise IndexError(f"site {s} outside 1..{p.num_sites}")
    x, z, power = p.x_bits, p.z_bits, p.power
    mask = 0
    for s in gate.sites:
        mask |= 1 << (s - 1)
    if not (x | z) & mask or name == "I":
        return p
    if len(gate.sites) == 1:
        j = gate.sites[0] - 1
        xj, zj = _bit(x, j), _bit(z, j)
        if name == "H":
            power += 2 * (xj & zj)
            x ^= (xj ^ zj) << j
            z ^= (xj ^ zj) << j
        elif name == "S":
            power += 2 * (xj & zj)
            z ^= xj << j
        elif name == "SDG":
            power += 2 * (xj & (1 - zj))
            z ^= xj << j
        elif name == "X":
            power += 2 * zj
        elif name == "Z":
            power += 2 * xj
        elif name == "Y":
            power += 2 * (xj ^ zj)
        return PauliString(p.num_sites, x, z, power)
    a, b = gate.sites[0] - 1, gate.sites[1] - 1
    xa, za, xb, zb = _bit(x, a), _bit(z, a), _bit(x, b), _bit(z, b)
    if name == "CNOT":
        power += 2 * (xa & zb & (xb ^ za ^ 1))
        x ^= xa << b
        z ^= zb << a
    elif name == "CZ":
        power += 2 * (xa & xb & (za ^ zb))
        z ^= (xb << a) | (xa << b)
    elif name == "SWAP":
        if xa != xb:
            x ^= (1 << a) | (1 << b)
        if za != zb:
            z ^= (1 << a) | (1 << b)
    return PauliString(p.num_sites, x, z, power)


class LayeredCircuit:
    """Clifford circuit whose conjugations only visit gates inside the light cone.

    Gates within a layer must act on disjoint sites, so they commute and a
    Pauli string only meets the gates touching its current support.
    """

    def __init__(self, layers: Sequence[Sequence[Gate]]):
        self.layers = [tuple(layer) for layer in layers]
        self._disjoint = []
        self._by_site = []
        for layer in self.layers:
            index: dict[int, int] = {}
            ok = True
            for j, g in enumerate(layer):
                for q in g.sites:
                    ok &= q not in index
                    index[q] = j
            self._disjoint.append(ok)
            self._by_site.append(index)

    def _gates(self, t: int, p: PauliString, reverse: bool):
        layer = self.layers[t]
        if not self._disjoint[t] or 4 * p.weight > len(layer):
            return reversed(layer) if reverse else layer
        index = self._by_site[t]
        hits = sorted({index[q] for q in p.support() if q in index})
        return [layer[j] for j in hits]

    def forward(self, p: PauliString) -> PauliString:
        """``U p U^dagger``."""
        for t in range(len(self.layers)):
            for g in self._gates(t, p, False):
                p = conjugate(g, p)
        return p

    def backward(self, p: PauliString) -> PauliString:
        """``U^dagger p U``."""
        for t in reversed(range(len(self.layers))):
            for g in self._gates(t, p, True):
                p = conjugate(g.inverse(), p)
        return p


def conjugate_circuit(layers: Sequence[Sequence[Gate]], p: PauliString) -> PauliString:
    """``U p U^dagger`` for ``U`` = layers applied first to last."""
    return LayeredCircuit(layers).forward(p)


def heisenberg_circuit(layers: Sequence[Sequence[Gate]], p: PauliString) -> PauliString:
    """``U^dagger p U`` for ``U`` = layers applied first to last."""
    return LayeredCircuit(layers).backward(p)


# packed tableau

_ONE = np.uint64(1)


def _to_words(v: int, words: int) -> np.ndarray:
    return np.frombuffer(v.to_bytes(words * 8, "little"), dtype="<u8").astype(np.uint64)


def _from_words(row: np.ndarray) -> int:
    return int.from_bytes(np.ascontiguousarray(row, dtype="<u8").tobytes(), "little")


def _product_power(x1, z1, x2, z2) -> np.ndarray:
    """Exponent of ``i`` picked up by the per-site letter products (row-wise)."""
    y1 = x1 & z1
    xo = x1 & ~z1
    zo = z1 & ~x1
    y2 = x2 & z2
    xo2 = x2 & ~z2
    zo2 = z2 & ~x2
    pos = np.bitwise_count(xo & y2) + np.bitwise_count(y1 & zo2) + np.bitwise_count(zo & xo2)
    neg = np.bitwise_count(y1 & xo2) + np.bitwise_count(xo & zo2) + np.bitwise_count(zo & y2)
    return pos.astype(np.int64).sum(axis=-1) - neg.astype(np.int64).sum(axis=-1)


class Tableau:
    """Stabilizer state on ``num_sites`` qubits with paired destabilizers."""

    def __init__(self, num_sites: int):
        self.num_sites = n = num_sites
        self.words = max(1, (n + 63) // 64)
        self.x = np.zeros((2 * n, self.words), dtype=np.uint64)
        self.z = np.zeros((2 * n, self.words), dtype=np.uint64)
        self.r = np.zeros(2 * n, dtype=np.uint8)
        self.outcome_record: list[tuple[str, int, float]] = []
        for q in range(n):
            w, b = divmod(q, 64)
            self.x[q, w] |= _ONE << np.uint64(b)
            self.z[n + q, w] |= _ONE << np.uint64(b)

    def copy(self) -> Tableau:
        t = Tableau.__new__(Tableau)
        t.num_sites, t.words = self.num_sites, self.words
        t.x, t.z, t.r = self.x.copy(), self.z.copy(), self.r.copy()
        t.outcome_record = list(self.outcome_record)
        return t

    # column access

    def _col(self, q: int):
        w, b = divmod(q, 64)
        sh = np.uint64(b)
        xc = ((self.x[:, w] >> sh) & _ONE).astype(np.uint8)
        zc = ((self.z[:, w] >> sh) & _ONE).astype(np.uint8)
        return w, sh, xc, zc

    def _flip(self, arr: np.ndarray, w: int, sh: np.uint64, bits: np.ndarray):
        arr[:, w] ^= bits.astype(np.uint64) << sh

    def _h(self, q):
        w, sh, xc, zc = self._col(q)
        self.r ^= xc & zc
        d = xc ^ zc
        self._flip(self.x, w, sh, d)
        self._flip(self.z, w, sh, d)

    def _s(self, q):
        w, sh, xc, zc = self._col(q)
        self.r ^= xc & zc
        self._flip(self.z, w, sh, xc)

    def _sdg(self, q):
        w, sh, xc, zc = self._col(q)
        self.r ^= xc & (1 - zc)
        self._flip(self.z, w, sh, xc)

    def _cnot(self, a, b):
        wa, sa, xa, za = self._col(a)
        wb, sb, xb, zb = self._col(b)
        self.r ^= xa & zb & (xb ^ za ^ 1)
        self._flip(self.x, wb, sb, xa)
        self._flip(self.z, wa, sa, zb)

    def _cz(self, a, b):
        wa, sa, xa, za = self._col(a)
        wb, sb, xb, zb = self._col(b)
        self.r ^= xa & xb & (za ^ zb)
        self._flip(self.z, wa, sa, xb)
        self._flip(self.z, wb, sb, xa)

    def _swap(self, a, b):
        wa, sa, xa, za = self._col(a)
        wb, sb, xb, zb = self._col(b)
        dx, dz = xa ^ xb, za ^ zb
        self._flip(self.x, wa, sa, dx)
        self._flip(self.x, wb, sb, dx)
        self._flip(self.z, wa, sa, dz)
        self._flip(self.z, wb, sb, dz)

    def apply_gate(self, gate: Gate) -> Tableau:
        name = gate.name
        q = [s - 1 for s in gate.sites]
        for s in gate.sites:
            if not 1 <= s <= self.num_sites:
                raise IndexError(f"site {s} outside 1..{self.num_sites}")
        if name == "I":
            pass
        elif name == "H":
            self._h(q[0])
        elif name == "S":
            self._s(q[0])
        elif name == "SDG":
            self._sdg(q[0])
        elif name in ("X", "Y", "Z"):
            self.apply_pauli(PauliString.single(self.num_sites, gate.sites[0], name))
        elif name == "CNOT":
            self._cnot(q[0], q[1])
        elif name == "CZ":
            self._cz(q[0], q[1])
        elif name == "SWAP":
            self._swap(q[0], q[1])
        elif name == "BELL":
            self._h(q[0])
            self._cnot(q[0], q[1])
        elif name == "BELLDG":
            self._cnot(q[0], q[1])
            self._h(q[0])
        else:
            raise BackendUnsupportedError(f"{name} is not a Clifford gate")
        return self

    def apply_pauli(self, p: PauliString) -> Tableau:
        """Conjugate by a Pauli: flips the sign of every anticommuting row."""
        px, pz = self._packed(p)
        self.r ^= self._anticommuting(px, pz)
        return self

    # Pauli queries

    def _packed(self, p: PauliString):
        if p.num_sites != self.num_sites:
            raise ValueError(f"Pauli on {p.num_sites} sites, tableau has {self.num_sites}")
        return _to_words(p.x_bits, self.words), _to_words(p.z_bits, self.words)

    def _anticommuting(self, px, pz, rows=slice(None)) -> np.ndarray:
        cols = np.nonzero(px | pz)[0]
        if cols.size == 0:
            return np.zeros(len(self.r[rows]), dtype=np.uint8)
        xs = self.x[rows][:, cols]
        zs = self.z[rows][:, cols]
        overlap = (xs & pz[cols]) ^ (zs & px[cols])
        return (np.bitwise_count(overlap).sum(axis=1) & 1).astype(np.uint8)

    def _rowmul(self, targets: np.ndarray, src: int):
        """row_t <- row_t * row_src for every t in targets (signs tracked)."""
        if targets.size == 0:
            return
        x1, z1 = self.x[targets], self.z[targets]
        x2, z2 = self.x[src], self.z[src]
        total = 2 * self.r[targets].astype(np.int64) + 2 * int(self.r[src])
        total += _product_power(x1, z1, x2, z2)
        self.r[targets] = ((total % 4) // 2).astype(np.uint8)
        self.x[targets] = x1 ^ x2
        self.z[targets] = z1 ^ z2

    def _stabilizer_sign_of(self, px, pz) -> int:
        """Sign s with ``s * |P|`` in the stabilizer group (P must commute)."""
        n = self.num_sites
        rows = n + np.nonzero(self._anticommuting(px, pz, slice(0, n)))[0]
        ax = np.zeros(self.words, dtype=np.uint64)
        az = np.zeros(self.words, dtype=np.uint64)
        power = 0
        if rows.size:
            xs, zs = self.x[rows], self.z[rows]
            # running products before each factor, then one vectorised phase pass
            px_acc = np.bitwise_xor.accumulate(xs, axis=0)
            pz_acc = np.bitwise_xor.accumulate(zs, axis=0)
            power = 2 * int(self.r[rows].sum())
            if rows.size > 1:
                power += int(_product_power(px_acc[:-1], pz_acc[:-1], xs[1:], zs[1:]).sum())
            ax, az = px_acc[-1], pz_acc[-1]
        if not (np.array_equal(ax, px) and np.array_equal(az, pz)):
            raise AssertionError("operator is not generated by the stabilizers")
        power %= 4
        if power % 2:
            raise AssertionError("non-Hermitian stabilizer product")
        return 1 if power == 0 else -1

    def expectation(self, p: PauliString) -> int:
        """Exact ``<P>`` in {-1, 0, +1} for a Hermitian Pauli string."""
        if not p.is_hermitian:
            raise ValueError("expectation needs a Hermitian Pauli string")
        px, pz = self._packed(p)
        n = self.num_sites
        if self._anticommuting(px, pz, slice(n, 2 * n)).any():
            return 0
        return self._stabilizer_sign_of(px, pz) * p.sign

    def measure_pauli(
        self, p: PauliString, mode: MeasureMode, outcome_id: str = "m"
    ) -> tuple[int, bool, float]:
        """Measure a Hermitian Pauli string; returns (bit, deterministic, probability)."""
        if not p.is_hermitian:
            raise ValueError("measured Pauli must have phase +-1")
        n = self.num_sites
        px, pz = self._packed(p)
        anti = self._anticommuting(px, pz)
        stab_hits = np.nonzero(anti[n:])[0]
        if stab_hits.size == 0:
            bit = 0 if self._stabilizer_sign_of(px, pz) * p.sign > 0 else 1
            if isinstance(mode, Forced):
                if mode.bit != bit:
                    raise ImpossibleOutcomeError(
                        f"outcome {mode.bit} of {outcome_id} has probability 0"
                    )
            else:
                mode.draw(1.0 if bit == 0 else 0.0)
            self.outcome_record.append((outcome_id, bit, 1.0))
            return bit, True, 1.0
        pivot = n + int(stab_hits[0])
        others = np.nonzero(anti)[0]
        others = others[others != pivot]
        self._rowmul(others, pivot)
        bit = mode.bit if isinstance(mode, Forced) else mode.draw(0.5)
        self.x[pivot - n], self.z[pivot - n], self.r[pivot - n] = (
            self.x[pivot], self.z[pivot], self.r[pivot]
        )
        self.x[pivot], self.z[pivot] = px, pz
        self.r[pivot] = (0 if p.sign > 0 else 1) ^ bit
        self.outcome_record.append((outcome_id, int(bit), 0.5))
        return int(bit), False, 0.5

    # views

    def _row(self, i: int) -> PauliString:
        return PauliString(
            self.num_sites, _from_words(self.x[i]), _from_words(self.z[i]), 2 * int(self.r[i])
        )

    def stabilizers(self) -> list[PauliString]:
        return [self._row(self.num_sites + i) for i in range(self.num_sites)]

    def destabilizers(self) -> list[PauliString]:
        return [self._row(i) for i in range(self.num_sites)]

    def to_amplitudes(self) -> np.ndarray:
        """Dense state (global phase fixed arbitrarily); small tableaus only."""
        n = self.num_sites
        if n > 12:
            raise ValueError("dense conversion limited to 12 sites")
        rho = np.eye(2**n, dtype=complex)
        for s in self.stabilizers():
            rho = rho @ (np.eye(2**n) + s.to_matrix()) / 2
        col = int(np.argmax(np.linalg.norm(rho, axis=0)))
        v = rho[:, col]
        return v / np.linalg.norm(v)


def tableau_from_product(labels: Sequence[str]) -> Tableau:
    labels = [normalize_label(lab) for lab in labels]
    n = len(labels)
    t = Tableau(n)
    t.x[:] = 0
    t.z[:] = 0
    for q, lab in enumerate(labels):
        if lab not in LABEL_STABILIZERS:
            raise ValueError(f"unsupported product-state label {lab!r}")
        letter, sign = LABEL_STABILIZERS[lab]
        for row, let in ((n + q, letter), (q, _DESTABILIZER[letter])):
            w, b = divmod(q, 64)
            bit = _ONE << np.uint64(b)
            if let in "XY":
                t.x[row, w] |= bit
            if let in "YZ":
                t.z[row, w] |= bit
        t.r[n + q] = 0 if sign > 0 else 1
    return t


def measure_pauli(t: Tableau, p: PauliString, mode: MeasureMode, outcome_id: str = "m"):
    bit, deterministic, prob = t.measure_pauli(p, mode, outcome_id)
    return bit, deterministic, prob, t


class InitialStabilizers:
    """Bit masks of the single-site stabilizers of a product-state label list."""

    def __init__(self, labels: Sequence[str]):
        self.num_sites = len(labels)
        masks = {"X": 0, "Y": 0, "Z": 0}
        negative = logical = 0
        for j, raw in enumerate(labels):
            lab = normalize_label(raw)
            bit = 1 << j
            stab = LABEL_STABILIZERS.get(lab)
            if stab is None:
                logical |= bit
                continue
            masks[stab[0]] |= bit
            if stab[1] < 0:
                negative |= bit
        self._x, self._y, self._z = masks["X"], masks["Y"], masks["Z"]
        self._negative = negative
        self.free = logical

    def _matching(self, p: PauliString) -> int:
        x, z = p.x_bits, p.z_bits
        return (x & ~z & self._x) | (x & z & self._y) | (z & ~x & self._z)

    def reduce(self, p: PauliString) -> PauliString:
        drop = self._matching(p)
        flip = 2 * (_popcount(drop & self._negative) & 1)
        return PauliString(p.num_sites, p.x_bits & ~drop, p.z_bits & ~drop, p.power + flip)

    def contains(self, p: PauliString) -> bool:
        if not p.is_hermitian or p.num_sites != self.num_sites:
            return False
        r = self.reduce(p)
        return r.x_bits == 0 and r.z_bits == 0 and r.power == 0


def is_initial_stabilizer(p: PauliString, labels: Sequence[str]) -> bool:
    """True iff ``p`` is a signed product of the declared single-site stabilizers."""
    if p.num_sites != len(labels):
        return False
    return InitialStabilizers(labels).contains(p)


def reduce_by_initial(p: PauliString, labels: Sequence[str]) -> PauliString:
    """Multiply away every factor that equals its site's product-state stabilizer."""
    return InitialStabilizers(labels).reduce(p)


class TrivializedError(RuntimeError):
    """The tracked operator anticommutes with a measurement and is projected out."""

    def __init__(self, measurement_id: str):
        super().__init__(f"operator anticommutes with measurement {measurement_id}")
        self.measurement_id = measurement_id


AXIS_LETTER = {"x": "X", "y": "Y", "z": "Z"}


def heisenberg_logical(protocol: CanonicalProtocol, which: tuple[int, str]) -> DilatedPauli:
    """Pull the final-site logical Pauli back to time 0 through R, M and U."""
    n, axis = which
    if not protocol.is_clifford:
        raise BackendUnsupportedError(
            "Heisenberg tracking needs a Clifford protocol; use statevector verification"
        )
    f = protocol.logical_out[n - 1]
    op = DilatedPauli(PauliString.single(protocol.num_sites, f, AXIS_LETTER[axis]))
    for rec in reversed(protocol.recoveries):
        if not rec.pauli.commutes(op.physical):
            op = op.toggle_outcomes(rec.parity_of)
    for meas in reversed(protocol.measurements):
        obs = meas.pauli
        if obs.commutes(op.physical):
            if meas.id in op.outcome_z:
                op = op.with_physical(op.physical * obs)
        else:
            raise TrivializedError(meas.id)
    return op.with_physical(heisenberg_circuit(protocol.layers, op.physical))


@dataclass(frozen=True)
class HeisenbergImage:
    """Result of tracking one logical Pauli, with its extracted stabilizer."""

    slot: int
    axis: str
    dilated: DilatedPauli | None
    stabilizer: PauliString | None
    ok: bool
    reason: str = ""
