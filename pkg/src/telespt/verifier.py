"""Verification that a protocol transfers every logical state on every trajectory.

Two Schrödinger-picture backends run the protocol instruction by instruction:
the dense statevector (any gate set, small chains) and the stabilizer tableau
(Clifford protocols, logical inputs restricted to Pauli eigenstates).  A third
check works in the Heisenberg picture on the tableau conjugation rules alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BackendUnsupportedError, CanonicalizationError, ImpossibleOutcomeError
from .observables import InvolutoryObservable
from .pauli import PauliString
from .protocol import CanonicalProtocol, Protocol, Recover, canonicalize, validate_standard
from .stabilizer import (
    AXIS_LETTER,
    HeisenbergImage,
    Tableau,
    TrivializedError,
    heisenberg_logical,
    is_initial_stabilizer,
    tableau_from_product,
)
from .statevector import (
    ZERO_PROBABILITY,
    Forced,
    Sampled,
    StateVector,
    init_product_state,
    logical_slot,
    normalize_label,
)

S2 = 1 / math.sqrt(2)
BATTERY = ((1.0, 0.0), (0.0, 1.0), (S2, S2), (S2, 1j * S2))
BATTERY_LABELS = ("0", "1", "+", "y+")
# Pauli whose +1 eigenstate is the battery state, used by the tableau backend
_BATTERY_PAULI = {"0": ("Z", 1), "1": ("Z", -1), "+": ("X", 1), "y+": ("Y", 1)}
ENUMERATE_CAP = 20
DEFAULT_SHOTS = 256
DEFAULT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Trajectory:
    bits: str
    probability: float
    fidelities: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "bits": self.bits,
            "probability": self.probability,
            "fidelities": list(self.fidelities),
        }


@dataclass(frozen=True)
class InputResult:
    label: str
    trajectories: tuple[Trajectory, ...]

    @property
    def total_probability(self) -> float:
        return float(sum(t.probability for t in self.trajectories))

    @property
    def min_fidelity(self) -> float:
        return min((f for t in self.trajectories for f in t.fidelities), default=1.0)

    def to_dict(self) -> dict:
        return {
            "input": self.label,
            "total_probability": self.total_probability,
            "min_fidelity": self.min_fidelity,
            "trajectories": [t.to_dict() for t in self.trajectories],
        }


@dataclass(frozen=True)
class VerificationReport:
    protocol: str
    mode: str
    backend: str
    results: tuple[InputResult, ...]
    violations: tuple[str, ...]
    tolerance: float = DEFAULT_TOLERANCE
    shots: int | None = None
    seed: int | None = None
    heisenberg: tuple[HeisenbergImage, ...] = ()

    @property
    def min_fidelity(self) -> float:
        return min((r.min_fidelity for r in self.results), default=1.0)

    @property
    def num_trajectories(self) -> int:
        return sum(len(r.trajectories) for r in self.results)

    @property
    def passed(self) -> bool:
        if self.violations:
            return False
        if self.heisenberg and not all(h.ok for h in self.heisenberg):
            return False
        return self.min_fidelity >= 1 - self.tolerance

    def failures(self) -> list[str]:
        out = []
        for r in self.results:
            for t in r.trajectories:
                if min(t.fidelities, default=1.0) < 1 - self.tolerance:
                    out.append(f"input {r.label} trajectory {t.bits or '-'}: fidelity {min(t.fidelities):.12g}")
        out += [f"logical ({h.slot},{h.axis}): {h.reason}" for h in self.heisenberg if not h.ok]
        return out

    def to_dict(self) -> dict:
        doc = {
            "protocol": self.protocol,
            "mode": self.mode,
            "backend": self.backend,
            "tolerance": self.tolerance,
            "shots": self.shots,
            "seed": self.seed,
            "pass": self.passed,
            "min_fidelity": self.min_fidelity,
            "num_trajectories": self.num_trajectories,
            "violations": list(self.violations),
            "failures": self.failures(),
            "results": [r.to_dict() for r in self.results],
        }
        if self.heisenberg:
            doc["heisenberg"] = [
                {
                    "slot": h.slot,
                    "axis": h.axis,
                    "ok": h.ok,
                    "dilated": None if h.dilated is None else str(h.dilated),
                    "stabilizer": None if h.stabilizer is None else str(h.stabilizer),
                    "reason": h.reason,
                }
                for h in self.heisenberg
            ]
        return doc


# engines behind one small interface


class _DenseRun:
    """Statevector trajectory; ``targets`` are reference amplitudes per slot."""

    def __init__(self, state: StateVector, outputs, targets, pair=None):
        self.state = state
        self.outputs = outputs
        self.targets = targets
        self.pair = pair  # (sites, 4-vector) for the Bell spot check

    def copy(self) -> _DenseRun:
        return _DenseRun(self.state.copy(), self.outputs, self.targets, self.pair)

    def gate(self, g):
        self.state.apply_gate(g)

    def pauli(self, p):
        self.state.apply_pauli(p)

    def p0(self, obs) -> float:
        return self.state.branch_probabilities(obs)[0]

    def project(self, obs, bit, mid, p0=None):
        self.state.measure(obs, Forced(bit), mid, p0)

    def fidelities(self) -> tuple[float, ...]:
        if self.pair is not None:
            sites, ref = self.pair
            rho = self.state.reduced_density_matrix(sites)
            return (float(np.real(ref.conj() @ rho @ ref)),)
        out = []
        for f, ref in zip(self.outputs, self.targets):
            rho = self.state.reduced_density_matrix((f,))
            out.append(float(np.real(ref.conj() @ rho @ ref)))
        return tuple(out)


class _TableauRun:
    """Tableau trajectory; ``targets`` are signed Paulis stabilizing the wanted output."""

    def __init__(self, tableau: Tableau, targets):
        self.tableau = tableau
        self.targets = targets

    def copy(self) -> _TableauRun:
        return _TableauRun(self.tableau.copy(), self.targets)

    def gate(self, g):
        self.tableau.apply_gate(g)

    def pauli(self, p):
        self.tableau.apply_pauli(p)

    def p0(self, obs) -> float:
        return (1 + self.tableau.expectation(obs)) / 2

    def project(self, obs, bit, mid, p0=None):
        self.tableau.measure_pauli(obs, Forced(bit), mid)

    def fidelities(self) -> tuple[float, ...]:
        return tuple((1 + self.tableau.expectation(t)) / 2 for t in self.targets)


def _vector(ab) -> np.ndarray:
    return np.asarray(ab, dtype=complex)


def _dense_start(p: Protocol, inputs, bell: bool = False) -> _DenseRun:
    if bell:
        zero = [(1.0, 0.0)] * p.k
        state = init_product_state(p.initial, zero)
        a, b = p.logical_in[0], p.logical_in[1]
        from .gates import Gate

        state.apply_gate(Gate("H", (a,)))
        state.apply_gate(Gate("CNOT", (a, b)))
        ref = np.array([S2, 0, 0, S2], dtype=complex)
        return _DenseRun(state, p.logical_out, (), ((p.logical_out[0], p.logical_out[1]), ref))
    state = init_product_state(p.initial, [tuple(x) for x in inputs])
    return _DenseRun(state, p.logical_out, [_vector(x) for x in inputs])


def _tableau_start(p: Protocol, labels: Sequence[str]) -> _TableauRun:
    init = []
    for lab in p.initial:
        slot = logical_slot(normalize_label(lab))
        init.append(labels[slot - 1] if slot is not None else lab)
    targets = []
    for f, lab in zip(p.logical_out, labels):
        letter, sign = _BATTERY_PAULI[lab]
        t = PauliString.single(p.num_sites, f, letter)
        targets.append(t if sign > 0 else -t)
    return _TableauRun(tableau_from_product(init), targets)


def _pauli_observable(obs, n: int):
    if isinstance(obs, PauliString):
        return obs
    if isinstance(obs, InvolutoryObservable):
        p = obs.to_pauli(n)
        if p is not None:
            return p
    raise BackendUnsupportedError("the stabilizer backend measures Pauli observables only")


def _prepare(p: Protocol, backend: str):
    steps = p.program()
    if backend == "stabilizer":
        if not p.is_clifford:
            raise BackendUnsupportedError(
                "non-Clifford protocol: use the statevector backend"
            )
        steps = [
            (s[0], s[1], _pauli_observable(s[2], p.num_sites)) if s[0] == "measure" else s
            for s in steps
        ]
    # the leading unitary part is shared by every trajectory of one input
    head = 0
    while head < len(steps) and steps[head][0] == "gate":
        head += 1
    return steps[:head], steps[head:]


def _run_head(run, head):
    for _, g in head:
        run.gate(g)
    return run


def _apply_recover(run, step, record: dict):
    _, chi, ids = step
    if sum(record[i] for i in ids) % 2:
        run.pauli(chi)


def _enumerate(run, steps) -> list[Trajectory]:
    """Depth-first over outcomes, skipping branches of probability <= 1e-12."""
    out: list[Trajectory] = []

    def walk(run, i, bits, prob, record):
        while i < len(steps):
            step = steps[i]
            if step[0] == "gate":
                run.gate(step[1])
            elif step[0] == "recover":
                _apply_recover(run, step, record)
            else:
                _, mid, obs = step
                p0 = run.p0(obs)
                live = [(b, q) for b, q in ((0, p0), (1, 1 - p0)) if q > ZERO_PROBABILITY]
                for j, (bit, q) in enumerate(live):
                    branch = run if j == len(live) - 1 else run.copy()
                    branch.project(obs, bit, mid, p0)
                    walk(branch, i + 1, bits + str(bit), prob * q, {**record, mid: bit})
                return
            i += 1
        out.append(Trajectory(bits, prob, run.fidelities()))

    walk(run, 0, "", 1.0, {})
    return out


def _execute(run, steps, chooser, prefix_error: bool = True) -> Trajectory:
    bits, prob, record = "", 1.0, {}
    for step in steps:
        if step[0] == "gate":
            run.gate(step[1])
        elif step[0] == "recover":
            _apply_recover(run, step, record)
        else:
            _, mid, obs = step
            p0 = run.p0(obs)
            bit = chooser(p0)
            q = p0 if bit == 0 else 1 - p0
            if q <= ZERO_PROBABILITY:
                raise ImpossibleOutcomeError(
                    f"outcome {bit} of {mid} has probability {q:.3g} after prefix {bits or '-'}",
                    tuple(int(b) for b in bits),
                )
            run.project(obs, bit, mid, p0)
            bits += str(bit)
            prob *= q
            record[mid] = bit
    return Trajectory(bits, prob, run.fidelities())


@dataclass(frozen=True)
class TrajectoryRun:
    state: StateVector
    probability: float
    fidelities: tuple[float, ...]
    bits: str


def run_trajectory(p: Protocol, inputs, forced_outcomes) -> TrajectoryRun:
    """Run one trajectory on the statevector with every outcome forced."""
    if isinstance(forced_outcomes, (list, tuple)):
        bits = [int(b) for b in forced_outcomes]
    else:
        bits = [int(b) for b in str(forced_outcomes)]
    if len(bits) != p.num_measurements:
        raise ValueError(f"expected {p.num_measurements} outcomes, got {len(bits)}")
    run = _dense_start(p, inputs)
    feed = iter(bits)
    head, steps = _prepare(p, "statevector")
    _run_head(run, head)
    traj = _execute(run, steps, lambda p0: next(feed))
    return TrajectoryRun(run.state, traj.probability, traj.fidelities, traj.bits)


@dataclass(frozen=True)
class Branch:
    probability: float
    node_p0: tuple[float, ...]
    amplitudes: np.ndarray


def branch_table(p: Protocol, labels: Sequence[str] | None = None, backend: str = "statevector"):
    """Every live outcome string with its probability, per-measurement ``p0`` and final state.

    Logical inputs are battery labels (``"0"``, ``"1"``, ``"+"``, ``"y+"``) so both
    backends start from the same stabilizer state.
    """
    labels = list(labels or ["0"] * p.k)
    if backend == "stabilizer":
        run = _tableau_start(p, labels)
    else:
        run = _dense_start(p, [BATTERY[BATTERY_LABELS.index(lab)] for lab in labels])
    head, rest = _prepare(p, backend)
    steps = head + rest
    out: dict[str, Branch] = {}

    def amplitudes(r):
        return r.tableau.to_amplitudes() if isinstance(r, _TableauRun) else r.state.amplitudes

    def walk(run, i, bits, prob, record, p0s):
        while i < len(steps):
            step = steps[i]
            if step[0] == "gate":
                run.gate(step[1])
            elif step[0] == "recover":
                _apply_recover(run, step, record)
            else:
                _, mid, obs = step
                p0 = run.p0(obs)
                live = [(b, q) for b, q in ((0, p0), (1, 1 - p0)) if q > ZERO_PROBABILITY]
                for j, (bit, q) in enumerate(live):
                    branch = run if j == len(live) - 1 else run.copy()
                    branch.project(obs, bit, mid, p0)
                    walk(branch, i + 1, bits + str(bit), prob * q, {**record, mid: bit}, p0s + (p0,))
                return
            i += 1
        out[bits] = Branch(prob, p0s, amplitudes(run).copy())

    walk(run, 0, "", 1.0, {}, ())
    return out


def select_backend(p: Protocol, backend: str = "auto") -> str:
    if backend == "auto":
        return "stabilizer" if p.is_clifford else "statevector"
    if backend not in ("statevector", "stabilizer"):
        raise ValueError(f"unknown backend {backend!r}")
    return backend


def input_battery(k: int) -> list[tuple[str, list, list[str]]]:
    """(label, amplitudes per slot, tableau labels per slot) for the product battery."""
    out = []
    for b in range(4):
        idx = [(b + n) % 4 for n in range(k)]
        labels = [BATTERY_LABELS[i] for i in idx]
        out.append((",".join(labels), [BATTERY[i] for i in idx], labels))
    return out


def audit_violations(p: Protocol) -> list[str]:
    out = list(validate_standard(p))
    try:
        c = canonicalize(p)
    except CanonicalizationError as exc:
        return out + [str(exc)]
    return out + commutation_audit(c)


def verify_state_transfer(
    p: Protocol,
    mode: str = "enumerate",
    backend: str = "auto",
    shots: int = DEFAULT_SHOTS,
    seed: int = 0,
    tolerance: float = DEFAULT_TOLERANCE,
) -> VerificationReport:
    """Run the input battery (plus a Bell check for k >= 2) over all or sampled trajectories."""
    backend = select_backend(p, backend)
    if mode == "enumerate" and p.num_measurements > ENUMERATE_CAP:
        raise ValueError(
            f"{p.num_measurements} measurements exceed the enumeration cap of "
            f"{ENUMERATE_CAP}; use sample mode"
        )
    if mode not in ("enumerate", "sample"):
        raise ValueError(f"unknown mode {mode!r}")
    head, steps = _prepare(p, backend)
    cases = []
    for label, amps, labels in input_battery(p.k):
        if backend == "statevector":
            cases.append((label, _run_head(_dense_start(p, amps), head)))
        else:
            cases.append((label, _run_head(_tableau_start(p, labels), head)))
    if p.k >= 2 and backend == "statevector":
        cases.append(("bell(1,2)", _run_head(_dense_start(p, None, bell=True), head)))
    results = []
    for idx, (label, start) in enumerate(cases):
        if mode == "enumerate":
            trajs = _enumerate(start, steps)
        else:
            trajs = []
            for shot in range(shots):
                rng = Sampled(np.random.default_rng([seed, idx, shot]))
                trajs.append(_execute(start.copy(), steps, rng.draw))
        results.append(InputResult(label, tuple(trajs)))
    if p.k >= 2 and backend == "stabilizer":
        results.append(_tableau_bell_check(p, head, steps, mode, shots, seed))
    return VerificationReport(
        p.name, mode, backend, tuple(results), tuple(audit_violations(p)), tolerance,
        shots if mode == "sample" else None, seed if mode == "sample" else None,
    )


def _tableau_bell_check(p, head, steps, mode, shots, seed) -> InputResult:
    """Bell pair on slots 1, 2; success iff X_f1 X_f2 and Z_f1 Z_f2 both read +1."""
    from .gates import Gate

    labels = ["0"] * p.k
    run = _tableau_start(p, labels)
    a, b = p.logical_in[0], p.logical_in[1]
    run.gate(Gate("H", (a,)))
    run.gate(Gate("CNOT", (a, b)))
    f1, f2 = p.logical_out[0], p.logical_out[1]
    xx = PauliString.from_sites(p.num_sites, {f1: "X", f2: "X"})
    zz = PauliString.from_sites(p.num_sites, {f1: "Z", f2: "Z"})
    run.targets = [xx, zz]
    _run_head(run, head)
    if mode == "enumerate":
        trajs = _enumerate(run, steps)
    else:
        trajs = [
            _execute(run.copy(), steps, Sampled(np.random.default_rng([seed, 99, s])).draw)
            for s in range(shots)
        ]
    # Bell fidelity from the two stabilizer readings: (1 + <XX> + <ZZ> - <YY>) / 4
    fixed = []
    for t in trajs:
        ex, ez = 2 * t.fidelities[0] - 1, 2 * t.fidelities[1] - 1
        fixed.append(Trajectory(t.bits, t.probability, ((1 + ex + ez + ex * ez) / 4,)))
    return InputResult("bell(1,2)", tuple(fixed))


# Heisenberg picture


def _heisenberg_image(c: CanonicalProtocol, n: int, axis: str) -> HeisenbergImage:
    i = c.logical_in[n - 1]
    try:
        op = heisenberg_logical(c, (n, axis))
    except TrivializedError as exc:
        return HeisenbergImage(n, axis, None, None, False, str(exc))
    expected = PauliString.single(c.num_sites, i, AXIS_LETTER[axis])
    stab = expected * op.physical
    ok = is_initial_stabilizer(stab, c.initial)
    reason = "" if ok else f"{stab} is not a stabilizer of the initial product state"
    return HeisenbergImage(n, axis, op, stab, ok, reason)


def heisenberg_verify(c: CanonicalProtocol | Protocol) -> VerificationReport:
    """Check the teleportation conditions for every slot and axis by conjugation."""
    if isinstance(c, Protocol):
        c = canonicalize(c)
    if not c.is_clifford:
        raise BackendUnsupportedError(
            "Heisenberg verification needs a Clifford protocol; use statevector verification"
        )
    images = []
    for n in range(1, c.k + 1):
        hx = _heisenberg_image(c, n, "x")
        hz = _heisenberg_image(c, n, "z")
        hy = _heisenberg_image(c, n, "y")
        if hy.ok and hx.ok and hz.ok and hy.stabilizer != hx.stabilizer * hz.stabilizer:
            hy = HeisenbergImage(
                n, "y", hy.dilated, hy.stabilizer, False, "S_y differs from S_x S_z"
            )
        images += [hx, hz, hy]
    violations = [v for v in validate_standard(c.source)] + commutation_audit(c)
    return VerificationReport(
        c.name, "heisenberg", "stabilizer", (), tuple(violations), 0.0, heisenberg=tuple(images)
    )


# feedback ablation


@dataclass(frozen=True)
class AblationReport:
    protocol: str
    ablated: bool
    bloch: tuple[tuple[float, float, float], ...]
    distances: tuple[float, ...]
    num_trajectories: int

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "ablated": self.ablated,
            "bloch": [list(b) for b in self.bloch],
            "distance_from_mixed": list(self.distances),
            "num_trajectories": self.num_trajectories,
        }


def strip_recoveries(p: Protocol) -> Protocol:
    return p.replace(
        name=f"{p.name}_no_recovery",
        instructions=[i for i in p.instructions if not isinstance(i, Recover)],
    )


def feedback_ablation(
    p: Protocol,
    inputs=None,
    ablate: bool = True,
    mode: str = "auto",
    shots: int = DEFAULT_SHOTS,
    seed: int = 0,
) -> AblationReport:
    """Outcome-averaged output state per slot with recoveries removed.

    Returns the trace distance of each averaged one-site state from I/2, which
    is half the length of its Bloch vector.
    """
    q = strip_recoveries(p) if ablate else p
    inputs = inputs or [(0.6, 0.8)] * p.k
    if mode == "auto":
        mode = "enumerate" if q.num_measurements <= ENUMERATE_CAP else "sample"
    head, steps = _prepare(q, "statevector")
    start = _run_head(_dense_start(q, inputs), head)
    rhos = [np.zeros((2, 2), dtype=complex) for _ in range(q.k)]
    count = 0

    def collect(run, weight):
        for slot, f in enumerate(q.logical_out):
            rhos[slot] += weight * run.state.reduced_density_matrix((f,))

    if mode == "enumerate":
        count = _enumerate_states(start, steps, collect)
    else:
        for shot in range(shots):
            run = start.copy()
            rng = Sampled(np.random.default_rng([seed, shot]))
            _execute(run, steps, rng.draw)
            collect(run, 1 / shots)
        count = shots
    blochs, dists = [], []
    for rho in rhos:
        b = (
            float(2 * np.real(rho[0, 1])),
            float(-2 * np.imag(rho[0, 1])),
            float(np.real(rho[0, 0] - rho[1, 1])),
        )
        blochs.append(b)
        dists.append(float(np.linalg.norm(b) / 2))
    return AblationReport(p.name, ablate, tuple(blochs), tuple(dists), count)


def _enumerate_states(run, steps, visit) -> int:
    """Call ``visit(run, probability)`` on every live final state; returns the count."""
    count = 0

    def walk(run, i, prob, record):
        while i < len(steps):
            step = steps[i]
            if step[0] == "gate":
                run.gate(step[1])
            elif step[0] == "recover":
                _apply_recover(run, step, record)
            else:
                _, mid, obs = step
                p0 = run.p0(obs)
                live = [(b, q) for b, q in ((0, p0), (1, 1 - p0)) if q > ZERO_PROBABILITY]
                for j, (bit, q) in enumerate(live):
                    branch = run if j == len(live) - 1 else run.copy()
                    branch.project(obs, bit, mid, p0)
                    walk(branch, i + 1, prob * q, {**record, mid: bit})
                return
            i += 1
        nonlocal count
        count += 1
        visit(run, prob)

    walk(run, 0, 1.0, {})
    return count


# commutation audit


def _obs_support(obs) -> tuple[int, ...]:
    if isinstance(obs, PauliString):
        return obs.support()
    return (obs.site,)


def _obs_commute(a, b) -> bool:
    if isinstance(a, PauliString) and isinstance(b, PauliString):
        return a.commutes(b)
    if isinstance(a, InvolutoryObservable) and isinstance(b, InvolutoryObservable):
        if a.site != b.site:
            return True
        return bool(np.allclose(np.cross(a.axis, b.axis), 0, atol=1e-12))
    n = a.num_sites if isinstance(a, PauliString) else b.num_sites
    pa = a if isinstance(a, PauliString) else a.to_pauli(n)
    pb = b if isinstance(b, PauliString) else b.to_pauli(n)
    if pa is not None and pb is not None:
        return pa.commutes(pb)
    single = a if isinstance(a, InvolutoryObservable) else b
    other = b if single is a else a
    letter = other.letter(single.site)
    if letter == "I":
        return True
    axis = {"X": (1, 0, 0), "Y": (0, 1, 0), "Z": (0, 0, 1)}[letter]
    return bool(np.allclose(np.cross(single.axis, axis), 0, atol=1e-12))


def commutation_audit(c: CanonicalProtocol) -> list[str]:
    """Pairwise commutation of measured observables and no support on F."""
    out: list[str] = []
    finals = set(c.logical_out)
    by_site: dict[int, list[int]] = {}
    meas = list(c.measurements)
    for j, m in enumerate(meas):
        sup = _obs_support(m.observable)
        hit = sorted(finals & set(sup))
        if hit:
            out.append(f"measurement {m.id} has support on F (site {hit[0]})")
        for s in sup:
            by_site.setdefault(s, []).append(j)
    seen = set()
    for site in sorted(by_site):
        group = by_site[site]
        for x in range(len(group)):
            for y in range(x + 1, len(group)):
                a, b = group[x], group[y]
                if (a, b) in seen:
                    continue
                seen.add((a, b))
                if not _obs_commute(meas[a].observable, meas[b].observable):
                    out.append(f"measurements {meas[a].id} and {meas[b].id} anticommute")
    return out
