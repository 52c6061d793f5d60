"""Protocol IR, document schema, structural validation and canonical form.

A protocol is an ordered list of instructions on a qubit chain:

* ``UnitaryLayer`` -- gates on pairwise-disjoint sites applied at time ``t``;
* ``Measure`` -- a two-outcome single-site measurement, stored by its
  involutory part;
* ``Recover`` -- a Pauli applied when the parity of the listed outcomes is odd.

``canonicalize`` rewrites a protocol into all unitaries, then all
measurements, then all recoveries, pulling Clifford gates back through
earlier measurements and recoveries.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence, Union

import numpy as np

from .errors import CanonicalizationError, ProtocolError, TrivialObservableError
from .gates import Gate, GateError
from .observables import InvolutoryObservable, hermitian_from_bloch, involutory_part
from .pauli import PauliParseError, PauliString, parse_pauli
from .stabilizer import conjugate
from .statevector import LABEL_VECTORS, logical_slot, normalize_label

__all__ = [
    "UnitaryLayer",
    "Measure",
    "Recover",
    "Protocol",
    "CanonicalMeasurement",
    "CanonicalProtocol",
    "parse_protocol",
    "load_protocol",
    "validate_standard",
    "involutory_part",
    "canonicalize",
    "depth_velocity",
    "InvolutoryObservable",
]


@dataclass(frozen=True)
class UnitaryLayer:
    t: int
    gates: tuple[Gate, ...]

    def sites(self) -> set[int]:
        return {s for g in self.gates for s in g.sites}


@dataclass(frozen=True)
class Measure:
    id: str
    site: int
    observable: InvolutoryObservable
    source: Any = None  # spelling used in the document, kept for round trips

    def obs_document(self):
        if self.source is not None:
            return self.source
        tag = self.observable.pauli_letter
        if tag is not None and tag[1] > 0:
            return tag[0]
        return {"bloch": list(self.observable.axis), "trace": 0.0, "gap": 2.0}


@dataclass(frozen=True)
class Recover:
    pauli: PauliString
    parity_of: tuple[str, ...]

    def document(self) -> dict:
        sites = list(self.pauli.support())
        letters = "".join(self.pauli.letter(s) for s in sites)
        prefix = {0: "", 1: "+i", 2: "-", 3: "-i"}[self.pauli.power]
        return {"pauli": prefix + letters, "sites": sites, "parity_of": list(self.parity_of)}


Instruction = Union[UnitaryLayer, Measure, Recover]


@dataclass(frozen=True)
class Protocol:
    """A teleportation protocol on a chain of ``num_sites`` qubits."""

    name: str
    num_sites: int
    logical_in: tuple[int, ...]
    logical_out: tuple[int, ...]
    initial: tuple[str, ...]
    instructions: tuple[Instruction, ...]
    declared: tuple[int, float] | None = None
    coords: tuple | None = None
    metadata: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def k(self) -> int:
        return len(self.logical_in)

    @property
    def layers(self) -> list[UnitaryLayer]:
        return [i for i in self.instructions if isinstance(i, UnitaryLayer)]

    @property
    def measurements(self) -> list[Measure]:
        return [i for i in self.instructions if isinstance(i, Measure)]

    @property
    def recoveries(self) -> list[Recover]:
        return [i for i in self.instructions if isinstance(i, Recover)]

    @property
    def num_measurements(self) -> int:
        return len(self.measurements)

    @property
    def is_clifford(self) -> bool:
        return all(g.is_clifford for layer in self.layers for g in layer.gates) and all(
            m.observable.pauli_letter is not None for m in self.measurements
        )

    def position(self, site: int) -> np.ndarray:
        if self.coords is None:
            return np.array([float(site)])
        return np.atleast_1d(np.asarray(self.coords[site - 1], dtype=float))

    def distance(self, a: int, b: int) -> float:
        d = float(np.linalg.norm(self.position(a) - self.position(b)))
        return int(d) if d.is_integer() else d

    def replace(self, **changes) -> Protocol:
        fields = {
            "name": self.name,
            "num_sites": self.num_sites,
            "logical_in": self.logical_in,
            "logical_out": self.logical_out,
            "initial": self.initial,
            "instructions": self.instructions,
            "declared": self.declared,
            "coords": self.coords,
            "metadata": dict(self.metadata),
        }
        fields.update(changes)
        fields["instructions"] = tuple(fields["instructions"])
        return Protocol(**fields)

    def program(self) -> list[tuple]:
        """Execution steps: ("gate", Gate) | ("measure", id, obs) | ("recover", pauli, ids)."""
        steps = []
        for ins in self.instructions:
            if isinstance(ins, UnitaryLayer):
                steps.extend(("gate", g) for g in ins.gates)
            elif isinstance(ins, Measure):
                obs = ins.observable.to_pauli(self.num_sites) or ins.observable
                steps.append(("measure", ins.id, obs))
            else:
                steps.append(("recover", ins.pauli, ins.parity_of))
        return steps

    def to_document(self) -> dict:
        doc: dict[str, Any] = {
            "name": self.name,
            "num_sites": self.num_sites,
            "logical_in": list(self.logical_in),
            "logical_out": list(self.logical_out),
            "initial": [
                {"site": s, "state": lab} for s, lab in enumerate(self.initial, start=1)
            ],
            "instructions": [],
        }
        for ins in self.instructions:
            if isinstance(ins, UnitaryLayer):
                doc["instructions"].append(
                    {"layer": ins.t, "gates": [g.to_dict() for g in ins.gates]}
                )
            elif isinstance(ins, Measure):
                doc["instructions"].append(
                    {"measure": {"id": ins.id, "site": ins.site, "obs": ins.obs_document()}}
                )
            else:
                doc["instructions"].append({"recover": ins.document()})
        if self.declared is not None:
            doc["declared"] = {"T": self.declared[0], "v": self.declared[1]}
        if self.coords is not None:
            doc["coords"] = [c if np.ndim(c) == 0 else list(c) for c in self.coords]
        return doc

    def dumps(self) -> str:
        return json.dumps(self.to_document(), indent=2) + "\n"


# parsing

_TOP_KEYS = {
    "name", "num_sites", "logical_in", "logical_out", "initial", "instructions",
    "declared", "coords",
}
_REQUIRED = ("name", "num_sites", "logical_in", "logical_out", "initial", "instructions")


def _expect(cond: bool, message: str, path: str):
    if not cond:
        raise ProtocolError(message, path)


def _int(value, path: str) -> int:
    _expect(isinstance(value, int) and not isinstance(value, bool), "expected an integer", path)
    return value


def _keys(obj, allowed: set, required: Iterable[str], path: str):
    _expect(isinstance(obj, dict), "expected an object", path)
    for key in obj:
        _expect(key in allowed, f"unknown key {key!r}", path)
    for key in required:
        _expect(key in obj, f"missing key {key!r}", path)


def _site(value, n: int, path: str) -> int:
    s = _int(value, path)
    _expect(1 <= s <= n, f"site {s} outside 1..{n}", path)
    return s


def _observable(obs, site: int, path: str) -> InvolutoryObservable:
    if isinstance(obs, str):
        letter = obs.strip().upper()
        _expect(letter in ("X", "Y", "Z"), f"unknown observable {obs!r}", path)
        return InvolutoryObservable.pauli_axis(site, letter)
    _keys(obs, {"bloch", "trace", "gap"}, ("bloch",), path)
    bloch = obs["bloch"]
    _expect(
        isinstance(bloch, list) and len(bloch) == 3
        and all(isinstance(b, (int, float)) for b in bloch),
        "bloch must be three numbers",
        path + ".bloch",
    )
    matrix = hermitian_from_bloch(bloch, float(obs.get("trace", 0.0)), float(obs.get("gap", 2.0)))
    try:
        return involutory_part(matrix, site)
    except TrivialObservableError as exc:
        raise ProtocolError(str(exc), path) from exc


def parse_protocol(document) -> Protocol:
    """Build a Protocol from a JSON string or decoded object; errors carry a path."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"invalid JSON: {exc}") from exc
    _keys(document, _TOP_KEYS, _REQUIRED, "$")
    name = document["name"]
    _expect(isinstance(name, str), "expected a string", "$.name")
    n = _int(document["num_sites"], "$.num_sites")
    _expect(n >= 1, "num_sites must be positive", "$.num_sites")

    def site_list(key):
        vals = document[key]
        _expect(isinstance(vals, list) and vals, "expected a non-empty array", f"$.{key}")
        return tuple(_site(v, n, f"$.{key}[{i}]") for i, v in enumerate(vals))

    logical_in, logical_out = site_list("logical_in"), site_list("logical_out")
    _expect(len(logical_in) == len(logical_out), "logical_in and logical_out differ in length", "$")
    _expect(len(set(logical_in)) == len(logical_in), "repeated logical_in site", "$.logical_in")
    _expect(len(set(logical_out)) == len(logical_out), "repeated logical_out site", "$.logical_out")

    labels: list[str | None] = [None] * n
    initial = document["initial"]
    _expect(isinstance(initial, list), "expected an array", "$.initial")
    for i, entry in enumerate(initial):
        path = f"$.initial[{i}]"
        _keys(entry, {"site", "state"}, ("site", "state"), path)
        s = _site(entry["site"], n, path + ".site")
        _expect(labels[s - 1] is None, f"site {s} listed twice", path)
        state = entry["state"]
        _expect(isinstance(state, str), "expected a string", path + ".state")
        lab = normalize_label(state)
        slot = None
        if lab.startswith("logical:"):
            try:
                slot = logical_slot(lab)
            except ValueError:
                slot = None
            _expect(slot is not None and slot >= 1, f"bad logical label {state!r}", path + ".state")
        else:
            _expect(lab in LABEL_VECTORS, f"unknown state {state!r}", path + ".state")
        labels[s - 1] = lab
    missing = [s for s, lab in enumerate(labels, start=1) if lab is None]
    _expect(not missing, f"no initial state for sites {missing}", "$.initial")

    instructions: list[Instruction] = []
    seen_ids: set[str] = set()
    last_t = 0
    raw = document["instructions"]
    _expect(isinstance(raw, list), "expected an array", "$.instructions")
    for i, ins in enumerate(raw):
        path = f"$.instructions[{i}]"
        _expect(isinstance(ins, dict), "expected an object", path)
        if "layer" in ins:
            _keys(ins, {"layer", "gates"}, ("layer", "gates"), path)
            t = _int(ins["layer"], path + ".layer")
            _expect(t > last_t, "layer indices must increase", path + ".layer")
            last_t = t
            _expect(isinstance(ins["gates"], list), "expected an array", path + ".gates")
            gates = []
            used: set[int] = set()
            for j, g in enumerate(ins["gates"]):
                gpath = f"{path}.gates[{j}]"
                _keys(g, {"g", "sites"}, ("g", "sites"), gpath)
                _expect(isinstance(g["sites"], list), "expected an array", gpath + ".sites")
                sites = tuple(_site(s, n, f"{gpath}.sites") for s in g["sites"])
                try:
                    gate = Gate(str(g["g"]), sites)
                except GateError as exc:
                    raise ProtocolError(str(exc), gpath) from exc
                _expect(not used & set(sites), "gates in one layer overlap", gpath)
                used |= set(sites)
                gates.append(gate)
            instructions.append(UnitaryLayer(t, tuple(gates)))
        elif "measure" in ins:
            _keys(ins, {"measure"}, ("measure",), path)
            m = ins["measure"]
            mpath = path + ".measure"
            _keys(m, {"id", "site", "obs"}, ("id", "site", "obs"), mpath)
            mid = m["id"]
            _expect(isinstance(mid, str) and mid, "expected a non-empty string", mpath + ".id")
            _expect(mid not in seen_ids, f"duplicate measurement id {mid!r}", mpath + ".id")
            s = _site(m["site"], n, mpath + ".site")
            obs = _observable(m["obs"], s, mpath + ".obs")
            seen_ids.add(mid)
            instructions.append(Measure(mid, s, obs, m["obs"]))
        elif "recover" in ins:
            _keys(ins, {"recover"}, ("recover",), path)
            r = ins["recover"]
            rpath = path + ".recover"
            _keys(r, {"pauli", "sites", "parity_of"}, ("pauli", "sites", "parity_of"), rpath)
            _expect(isinstance(r["sites"], list) and r["sites"], "expected a non-empty array", rpath + ".sites")
            sites = [_site(s, n, rpath + ".sites") for s in r["sites"]]
            _expect(len(set(sites)) == len(sites), "repeated site", rpath + ".sites")
            _expect(isinstance(r["pauli"], str), "expected a string", rpath + ".pauli")
            try:
                local = parse_pauli(r["pauli"], len(sites))
            except PauliParseError as exc:
                raise ProtocolError(str(exc), rpath + ".pauli") from exc
            _expect(local.is_hermitian, "recovery Pauli must have phase +-1", rpath + ".pauli")
            pauli = PauliString.from_sites(
                n, {s: local.letter(j + 1) for j, s in enumerate(sites) if local.letter(j + 1) != "I"},
                local.power,
            )
            ids = r["parity_of"]
            _expect(isinstance(ids, list), "expected an array", rpath + ".parity_of")
            for j, mid in enumerate(ids):
                _expect(
                    mid in seen_ids,
                    f"unknown or later measurement id {mid!r}",
                    f"{rpath}.parity_of[{j}]",
                )
            instructions.append(Recover(pauli, tuple(ids)))
        else:
            raise ProtocolError("expected one of layer/measure/recover", path)

    declared = None
    if "declared" in document:
        d = document["declared"]
        _keys(d, {"T", "v"}, ("T", "v"), "$.declared")
        T = _int(d["T"], "$.declared.T")
        v = d["v"]
        _expect(isinstance(v, (int, float)) and v >= 0, "expected a non-negative number", "$.declared.v")
        declared = (T, v)
    coords = None
    if "coords" in document:
        c = document["coords"]
        _expect(isinstance(c, list) and len(c) == n, f"expected {n} positions", "$.coords")
        coords = tuple(tuple(x) if isinstance(x, list) else x for x in c)
    return Protocol(
        name, n, logical_in, logical_out, tuple(labels), tuple(instructions), declared, coords
    )


def load_protocol(path: str | Path) -> Protocol:
    return parse_protocol(Path(path).read_text())


# validation

def validate_standard(p: Protocol) -> list[str]:
    """Violations of the standard-teleportation structure (empty when clean)."""
    violations = []
    measured: set[int] = set()
    final = set(p.logical_out)
    for ins in p.instructions:
        if isinstance(ins, UnitaryLayer):
            for g in ins.gates:
                hit = sorted(measured & set(g.sites))
                if hit:
                    violations.append(
                        f"unitary {g.name}{list(g.sites)} in layer {ins.t} acts on measured site {hit[0]}"
                    )
        elif isinstance(ins, Measure):
            measured.add(ins.site)
        else:
            outside = sorted(set(ins.pauli.support()) - final)
            if outside:
                violations.append(
                    f"recovery {ins.pauli.compact()} acts outside the final sites at {outside}"
                )
            if not ins.parity_of:
                violations.append(f"recovery {ins.pauli.compact()} has an empty parity set")
    for n, site in enumerate(p.logical_in, start=1):
        if logical_slot(p.initial[site - 1]) != n:
            violations.append(f"site {site} should hold logical:{n}")
    slots = [logical_slot(lab) for lab in p.initial]
    extra = [s for s, slot in enumerate(slots, start=1) if slot is not None and s not in p.logical_in]
    if extra:
        violations.append(f"logical labels on non-input sites {extra}")
    if p.num_measurements < 2:
        violations.append("not physical teleportation (M > 1 required)")
    return violations


# canonical form

@dataclass(frozen=True)
class CanonicalMeasurement:
    id: str
    site: int
    observable: PauliString | InvolutoryObservable
    history: tuple[str, ...] = ()

    @property
    def pauli(self) -> PauliString | None:
        return self.observable if isinstance(self.observable, PauliString) else None

    def support(self) -> tuple[int, ...]:
        if isinstance(self.observable, PauliString):
            return self.observable.support()
        return (self.observable.site,)


@dataclass(frozen=True)
class CanonicalProtocol:
    """``W = R M U``: all unitaries, then all measurements, then all recoveries."""

    source: Protocol
    layers: tuple[tuple[Gate, ...], ...]
    measurements: tuple[CanonicalMeasurement, ...]
    recoveries: tuple[Recover, ...]
    provenance: dict

    @property
    def name(self) -> str:
        return self.source.name

    @property
    def num_sites(self) -> int:
        return self.source.num_sites

    @property
    def logical_in(self):
        return self.source.logical_in

    @property
    def logical_out(self):
        return self.source.logical_out

    @property
    def initial(self):
        return self.source.initial

    @property
    def k(self) -> int:
        return self.source.k

    @property
    def is_clifford(self) -> bool:
        return all(g.is_clifford for layer in self.layers for g in layer) and all(
            m.pauli is not None for m in self.measurements
        )

    def program(self) -> list[tuple]:
        steps: list[tuple] = [("gate", g) for layer in self.layers for g in layer]
        steps += [("measure", m.id, m.observable) for m in self.measurements]
        steps += [("recover", r.pauli, r.parity_of) for r in self.recoveries]
        return steps

    def measurement(self, mid: str) -> CanonicalMeasurement:
        for m in self.measurements:
            if m.id == mid:
                return m
        raise KeyError(mid)


def canonicalize(p: Protocol) -> CanonicalProtocol:
    """Pull gates back through earlier measurements and recoveries."""
    for v in validate_standard(p):
        if v.startswith("unitary"):
            raise CanonicalizationError(f"not a standard protocol: {v}")
    layers: list[tuple[Gate, ...]] = []
    meas: list[CanonicalMeasurement] = []
    recs: list[Recover] = []
    provenance: dict[int, tuple[str, int]] = {}
    n = p.num_sites
    for idx, ins in enumerate(p.instructions):
        if isinstance(ins, UnitaryLayer):
            for g in ins.gates:
                gsites = set(g.sites)
                for j, m in enumerate(meas):
                    if not gsites & set(m.support()):
                        continue
                    if not g.is_clifford or m.pauli is None:
                        raise CanonicalizationError(
                            f"{g.name} after measurement {m.id} needs a non-Clifford pull-through"
                        )
                    meas[j] = CanonicalMeasurement(
                        m.id, m.site, conjugate(g, m.pauli), m.history + (f"{g.name}{list(g.sites)}",)
                    )
                for j, r in enumerate(recs):
                    if not gsites & set(r.pauli.support()):
                        continue
                    if not g.is_clifford:
                        raise CanonicalizationError(
                            f"{g.name} after a recovery needs a non-Clifford pull-through"
                        )
                    recs[j] = Recover(conjugate(g, r.pauli), r.parity_of)
            provenance[idx] = ("layer", len(layers))
            layers.append(ins.gates)
        elif isinstance(ins, Measure):
            for r in recs:
                if ins.site in r.pauli.support():
                    raise CanonicalizationError(
                        f"measurement {ins.id} depends on earlier outcomes through a recovery"
                    )
            obs = ins.observable.to_pauli(n) or ins.observable
            provenance[idx] = ("measure", len(meas))
            meas.append(CanonicalMeasurement(ins.id, ins.site, obs))
        else:
            provenance[idx] = ("recover", len(recs))
            recs.append(ins)
    return CanonicalProtocol(p, tuple(layers), tuple(meas), tuple(recs), provenance)


@dataclass(frozen=True)
class DepthVelocity:
    T: int
    v: float
    warnings: tuple[str, ...] = ()

    def __iter__(self):
        return iter((self.T, self.v))


def depth_velocity(p: Protocol) -> DepthVelocity:
    """Circuit depth (non-empty layers) and the largest single-gate span."""
    T = sum(1 for layer in p.layers if layer.gates)
    v = 0
    for layer in p.layers:
        for g in layer.gates:
            for a in g.sites:
                for b in g.sites:
                    v = max(v, p.distance(a, b))
    notes = []
    if p.declared is not None:
        dT, dv = p.declared
        if (dT, dv) != (T, v):
            msg = f"declared (T, v) = ({dT}, {dv}) overrides computed ({T}, {v})"
            warnings.warn(msg, stacklevel=2)
            notes.append(msg)
        T, v = dT, dv
    return DepthVelocity(T, v, tuple(notes))


def task_distance(p: Protocol) -> float:
    return min(p.distance(i, f) for i, f in zip(p.logical_in, p.logical_out))


def protocol_from_parts(
    name: str,
    num_sites: int,
    logical_in: Sequence[int],
    logical_out: Sequence[int],
    initial: Sequence[str],
    instructions: Sequence[Instruction],
    **extra,
) -> Protocol:
    return Protocol(
        name, num_sites, tuple(logical_in), tuple(logical_out), tuple(initial),
        tuple(instructions), **extra,
    )
