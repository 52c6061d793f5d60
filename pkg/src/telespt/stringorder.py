"""String order parameters certifying the (Z2 x Z2)^k order of a resource state.

A recovery that anticommutes with the output Pauli ``P^nu_{f_n}`` attaches the
measurements in its parity set to the logical pair ``(n, nu)``.  Multiplying
the attached observables between two region boundaries, and capping the string
with the conjugated boundary operators, gives the interval string order
parameters ``S^{n,nu}_{a,b}`` whose unit expectation certifies the order.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import BackendUnsupportedError, ProtocolError
from .gates import cz_triangle
from .observables import InvolutoryObservable
from .pauli import PauliString
from .protocol import CanonicalProtocol, Protocol, canonicalize
from .stabilizer import InitialStabilizers, LayeredCircuit, Tableau, tableau_from_product
from .statevector import (
    MAX_DENSE_SITES,
    DenseOperator,
    StateVector,
    init_product_state,
    logical_slot,
    normalize_label,
)
from .verifier import _obs_commute, _obs_support

__all__ = [
    "AXES",
    "AttachmentMap",
    "SPTCertificate",
    "Segmentation",
    "StringOrderParameter",
    "attachment_map",
    "build_sop",
    "certify_spt",
    "end_to_end_sops",
    "evaluate_sop",
    "interval_sops",
    "resource_state",
    "segment_regions",
    "sop_expectation",
    "symmetry_generators",
]

AXES = ("x", "z")
_OTHER = {"x": "z", "z": "x"}
DEFAULT_TOLERANCE = 1e-9
# above this many intervals only adjacent, end-to-end and sampled ones are evaluated
EXHAUSTIVE_INTERVALS = 20000
SAMPLED_INTERVALS = 256
RESOURCE_INPUT = (0.6, 0.8)
FINITE_SIZE_NOTE = (
    "finite chain: the certificate covers this length only; persistence with "
    "length is shown by sweeping the family parameter"
)

Key = tuple[int, str]
Factor = Union[PauliString, DenseOperator, InvolutoryObservable]


def _canonical(p) -> CanonicalProtocol:
    return p if isinstance(p, CanonicalProtocol) else canonicalize(p)


def _key_text(key: Key) -> str:
    return f"{key[0]}:{key[1]}"


def _axis_pauli(num_sites: int, site: int, axis: str) -> PauliString:
    return PauliString.single(num_sites, site, axis.upper())


# attachment


@dataclass(frozen=True, eq=False)
class AttachmentMap:
    """``lambda[j][(n, nu)]``: whether measurement ``j`` feeds the ``(n, nu)`` recovery."""

    ids: tuple[str, ...]
    keys: tuple[Key, ...]
    table: Mapping[str, frozenset]

    def lam(self, mid: str, key: Key) -> int:
        return int(key in self.table[mid])

    def attached(self, key: Key) -> tuple[str, ...]:
        return tuple(m for m in self.ids if key in self.table[m])

    @property
    def unnecessary(self) -> tuple[str, ...]:
        return tuple(m for m in self.ids if not self.table[m])

    @property
    def dual(self) -> tuple[str, ...]:
        """Ids attached to both axes of one slot and to nothing else."""
        out = []
        for m in self.ids:
            keys = self.table[m]
            slots = {n for n, _ in keys}
            if len(keys) == 2 and len(slots) == 1:
                out.append(m)
        return tuple(out)

    def issues(self) -> list[str]:
        out = [f"measurement {m} is attached to no logical operator" for m in self.unnecessary]
        out += [f"measurement {m} is attached to both axes of one slot only" for m in self.dual]
        return out

    def to_dict(self) -> dict:
        return {
            "lambda": {m: sorted(_key_text(k) for k in self.table[m]) for m in self.ids},
            "unnecessary": list(self.unnecessary),
            "dual": list(self.dual),
        }


def attachment_map(p) -> AttachmentMap:
    """Attachments from the recovery parity sets, counting multiplicity mod 2."""
    c = _canonical(p)
    N = c.num_sites
    finals = set(c.logical_out)
    keys = tuple((n, axis) for n in range(1, c.k + 1) for axis in AXES)
    ids = tuple(m.id for m in c.measurements)
    table: dict[str, set] = {m: set() for m in ids}
    for r, rec in enumerate(c.recoveries):
        outside = set(rec.pauli.support()) - finals
        if outside:
            raise ProtocolError(
                f"recovery {r + 1} acts outside the output sites (site {min(outside)})",
                f"recoveries[{r}]",
            )
        for n, f in enumerate(c.logical_out, start=1):
            for axis in AXES:
                if rec.pauli.commutes(_axis_pauli(N, f, axis)):
                    continue
                for mid in rec.parity_of:
                    if mid not in table:
                        raise ProtocolError(f"unknown outcome id {mid!r}", f"recoveries[{r}]")
                    table[mid] ^= {(n, axis)}
    return AttachmentMap(ids, keys, {m: frozenset(v) for m, v in table.items()})


# regions


@dataclass(frozen=True, eq=False)
class Segmentation:
    """Measurement regions with the boundary operators ``Sigma^nu_{n,s}``.

    ``sigma[key][s]`` is the unreduced ``Sigma`` after region ``s`` (index 0 is
    the input Pauli) and ``reduced`` drops factors stabilizing the initial
    product state.  Declared segmentations carry no ``Sigma``.
    """

    regions: tuple[tuple[str, ...], ...]
    source: str
    sigma: Mapping[Key, tuple[PauliString, ...]] = field(default_factory=dict)
    reduced: Mapping[Key, tuple[PauliString, ...]] = field(default_factory=dict)

    @property
    def R(self) -> int:
        return len(self.regions)

    def region_of(self) -> dict[str, int]:
        return {m: s for s, region in enumerate(self.regions, start=1) for m in region}

    def boundaries(self) -> list[list[str]]:
        return [list(r) for r in self.regions]


def _closed_form(c: CanonicalProtocol):
    geo = c.source.metadata.get("hypergraph") if c.source.metadata else None
    return geo if geo is not None and hasattr(geo, "endpoint") else None


def _support_mask(obs) -> int:
    mask = 0
    for s in _obs_support(obs):
        mask |= 1 << (s - 1)
    return mask


def segment_regions(p, amap: AttachmentMap | None = None) -> Segmentation:
    """Greedy left-to-right regions.

    A region closes as soon as every ``(n, nu)`` has a measurement in it that
    is attached to ``(n, nu)`` but not to the other axis of slot ``n``, and
    ``Sigma^x_{n,s}`` anticommutes with ``Sigma^z_{n,s}`` for every slot.
    Trailing measurements join the last region.
    """
    c = _canonical(p)
    if not c.is_clifford:
        geo = _closed_form(c)
        if geo is None:
            raise BackendUnsupportedError(
                "non-Clifford protocol: regions must be declared by its generator"
            )
        return Segmentation(tuple(tuple(r) for r in geo.regions()), "declared")
    amap = amap or attachment_map(c)
    N = c.num_sites
    circuit = LayeredCircuit(c.layers)
    init = InitialStabilizers(c.initial)
    keys = amap.keys
    inputs = dict(zip(range(1, c.k + 1), c.logical_in))
    current = {key: _axis_pauli(N, inputs[key[0]], key[1]) for key in keys}
    sigma = {key: [current[key]] for key in keys}
    reduced = {key: [current[key]] for key in keys}
    regions: list[list[str]] = []
    region: list[str] = []
    touched: set[Key] = set()

    def closable() -> bool:
        if len(touched) < len(keys):
            return False
        for n in range(1, c.k + 1):
            if current[(n, "x")].commutes(current[(n, "z")]):
                return False
        return True

    def close():
        for key in keys:
            sigma[key].append(current[key])
            reduced[key].append(init.reduce(current[key]))
        regions.append(region)

    for m in c.measurements:
        region.append(m.id)
        attached = amap.table[m.id]
        if attached:
            pulled = circuit.backward(m.pauli)
            for key in attached:
                current[key] = current[key] * pulled
                if (key[0], _OTHER[key[1]]) not in attached:
                    touched.add(key)
        if closable():
            close()
            region, touched = [], set()
    if region:
        if regions:
            regions[-1].extend(region)
            for key in keys:
                sigma[key][-1] = current[key]
                reduced[key][-1] = init.reduce(current[key])
        else:
            close()
    return Segmentation(
        tuple(tuple(r) for r in regions),
        "greedy",
        {k: tuple(v) for k, v in sigma.items()},
        {k: tuple(v) for k, v in reduced.items()},
    )


# string order parameters


def _factor_text(op) -> str:
    if isinstance(op, PauliString):
        return op.compact()
    if isinstance(op, InvolutoryObservable):
        return op.describe()
    if len(op.sites) == 3 and np.allclose(op.matrix, cz_triangle(*op.sites)[1]):
        return "CZ" + "".join(f"[{a},{b}]" for a, b in itertools.combinations(op.sites, 2))
    return "U(" + ",".join(str(s) for s in op.sites) + ")"


@dataclass(frozen=True, eq=False)
class StringOrderParameter:
    """``S^{n,nu}_{a,b}`` = left endpoint x ordered bulk x right endpoint."""

    slot: int
    axis: str
    interval: tuple[int, int]
    left: tuple
    bulk: tuple
    right: tuple
    num_sites: int

    def factors(self) -> tuple:
        return self.left + self.bulk + self.right

    @property
    def is_pauli(self) -> bool:
        return all(isinstance(f, PauliString) for f in self.factors())

    @property
    def operator(self) -> PauliString | None:
        """The whole string as one Pauli when every factor is Pauli."""
        if not self.is_pauli:
            return None
        out = PauliString.identity(self.num_sites)
        for f in self.factors():
            out = out * f
        return out

    def describe(self) -> dict:
        op = self.operator
        return {
            "slot": self.slot,
            "axis": self.axis,
            "interval": list(self.interval),
            "left": [_factor_text(f) for f in self.left],
            "bulk": [_factor_text(f) for f in self.bulk],
            "right": [_factor_text(f) for f in self.right],
            "operator": op.compact() if op is not None else None,
        }

    def __str__(self) -> str:
        op = self.operator
        if op is not None:
            return op.compact()
        parts = [" ".join(_factor_text(f) for f in grp) for grp in (self.left, self.bulk, self.right)]
        return " | ".join(p or "I" for p in parts)


class _SOPBuilder:
    """Endpoints and bulk lists shared by every interval of one protocol."""

    def __init__(self, c: CanonicalProtocol, amap: AttachmentMap, seg: Segmentation):
        self.c, self.amap, self.seg = c, amap, seg
        self.N = c.num_sites
        self.R = seg.R
        self.geo = _closed_form(c) if seg.source == "declared" else None
        if seg.source != "declared":
            self.circuit = LayeredCircuit(c.layers)
            self._cache: dict = {}
        region_of = seg.region_of()
        self.bulk = {
            key: [[] for _ in range(self.R + 1)] for key in amap.keys
        }
        for m in c.measurements:
            for key in amap.table[m.id]:
                self.bulk[key][region_of[m.id]].append(m.observable)

    def _boundary(self, key: Key, s: int) -> PauliString:
        if (key, s) not in self._cache:
            self._cache[(key, s)] = self.circuit.forward(self.seg.reduced[key][s])
        return self._cache[(key, s)]

    def left(self, key: Key, a: int) -> tuple:
        if self.geo is not None:
            return self.geo.endpoint(key[1], a)
        return (self._boundary(key, a),)

    def right(self, key: Key, b: int) -> tuple:
        if b == self.R + 1:
            f = self.c.logical_out[key[0] - 1]
            return (_axis_pauli(self.N, f, key[1]),)
        if self.geo is not None:
            return tuple(f.adjoint() for f in reversed(self.geo.endpoint(key[1], b)))
        return (self._boundary(key, b).adjoint(),)

    def bulk_between(self, key: Key, a: int, b: int) -> tuple:
        out: list = []
        for s in range(a + 1, min(b, self.R) + 1):
            out.extend(self.bulk[key][s])
        return tuple(out)

    def pauli_operator(self, key: Key, a: int, b: int) -> PauliString:
        """``S_{a,b}`` as one Pauli string via prefix products of the bulk."""
        if not hasattr(self, "_prefix"):
            self._prefix = {}
            for k in self.amap.keys:
                acc = [PauliString.identity(self.N)]
                for s in range(1, self.R + 1):
                    cur = acc[-1]
                    for obs in self.bulk[k][s]:
                        cur = cur * obs
                    acc.append(cur)
                self._prefix[k] = acc
        pre = self._prefix[key]
        out = self.left(key, a)[0] * pre[a].adjoint() * pre[min(b, self.R)]
        return out * self.right(key, b)[0]

    def sop(self, key: Key, a: int, b: int) -> StringOrderParameter:
        if not 0 <= a < b <= self.R + 1:
            raise ValueError(f"interval ({a}, {b}) outside 0..{self.R + 1}")
        return StringOrderParameter(
            key[0], key[1], (a, b),
            self.left(key, a), self.bulk_between(key, a, b), self.right(key, b), self.N,
        )


def _builder(p, seg: Segmentation | None = None) -> _SOPBuilder:
    c = _canonical(p)
    if not c.is_clifford and _closed_form(c) is None:
        raise BackendUnsupportedError(
            "non-Clifford protocol without closed-form endpoints from its generator"
        )
    amap = attachment_map(c)
    return _SOPBuilder(c, amap, seg or segment_regions(c, amap))


def build_sop(p, slot: int, axis: str, a: int, b: int) -> StringOrderParameter:
    return _builder(p).sop((slot, axis), a, b)


def end_to_end_sops(p) -> list[StringOrderParameter]:
    """The 2k string order parameters over the whole chain, interval (0, R+1)."""
    b = _builder(p)
    return [b.sop(key, 0, b.R + 1) for key in b.amap.keys]


def interval_sops(p) -> list[StringOrderParameter]:
    """Every ``S^{n,nu}_{a,b}`` with ``0 <= a < b <= R+1``."""
    b = _builder(p)
    return [
        b.sop(key, a, e)
        for key in b.amap.keys
        for a in range(b.R + 1)
        for e in range(a + 1, b.R + 2)
    ]


# evaluation


def resource_state(p, backend: str = "auto"):
    """``U`` applied to the initial state, with generic logical inputs."""
    c = _canonical(p)
    if backend == "auto":
        backend = "stabilizer" if c.is_clifford else "statevector"
    gates = [g for layer in c.layers for g in layer]
    if backend == "stabilizer":
        if not c.is_clifford:
            raise BackendUnsupportedError("stabilizer backend needs a Clifford protocol")
        labels = [
            "y+" if logical_slot(normalize_label(lab)) is not None else lab for lab in c.initial
        ]
        t = tableau_from_product(labels)
        for g in gates:
            t.apply_gate(g)
        return t
    if backend != "statevector":
        raise ValueError(f"unknown backend {backend!r}")
    if c.num_sites > MAX_DENSE_SITES:
        raise BackendUnsupportedError(f"{c.num_sites} sites exceed the dense limit")
    state = init_product_state(c.initial, [RESOURCE_INPUT] * c.k)
    for g in gates:
        state.apply_gate(g)
    return state


def _dense_factor(op):
    if isinstance(op, InvolutoryObservable):
        return DenseOperator((op.site,), op.matrix)
    return op


def sop_expectation(resource, s: StringOrderParameter | PauliString) -> complex:
    if isinstance(s, PauliString):
        s = StringOrderParameter(0, "", (0, 0), (), (s,), (), s.num_sites)
    if isinstance(resource, Tableau):
        op = s.operator
        if op is None:
            raise BackendUnsupportedError("tableau evaluation needs a Pauli string")
        if op.power % 2:
            return 0j
        return complex(resource.expectation(op))
    if isinstance(resource, StateVector):
        return resource.expectation(*(_dense_factor(f) for f in s.factors()))
    raise TypeError(f"unsupported resource {type(resource).__name__}")


def evaluate_sop(resource: StateVector | Tableau, s: StringOrderParameter | PauliString) -> float:
    """Real part of ``<Psi| S |Psi>``; exact on a tableau."""
    return float(sop_expectation(resource, s).real)


# structural checks


def _small_matrix(ops: Sequence, sites: Sequence[int]) -> np.ndarray:
    """Dense matrix of a product of factors restricted to ``sites``."""
    pos = {s: j + 1 for j, s in enumerate(sites)}
    m = len(sites)
    local = []
    for op in ops:
        if isinstance(op, PauliString):
            local.append(PauliString.from_sites(m, {pos[s]: l for s, l in op.items()}, op.power))
        else:
            op = _dense_factor(op)
            local.append(DenseOperator(tuple(pos[s] for s in op.sites), op.matrix))
    cols = []
    for j in range(2**m):
        e = np.zeros(2**m, dtype=complex)
        e[j] = 1
        v = StateVector(e)
        for op in reversed(local):
            v.apply(op)
        cols.append(v.amplitudes)
    return np.array(cols).T


def _factor_sites(ops) -> list[int]:
    out = set()
    for op in ops:
        out.update(op.support() if isinstance(op, PauliString) else _dense_factor(op).sites)
    return sorted(out)


def _dense_relation(a: Sequence, b: Sequence) -> int:
    """+1 if the products commute, -1 if they anticommute, 0 otherwise."""
    sites = sorted(set(_factor_sites(a)) | set(_factor_sites(b)))
    if not sites:
        return 1
    ma, mb = _small_matrix(a, sites), _small_matrix(b, sites)
    if np.allclose(ma @ mb, mb @ ma, atol=1e-12):
        return 1
    if np.allclose(ma @ mb, -mb @ ma, atol=1e-12):
        return -1
    return 0


def _bucketed_pairs(supports: Sequence[Sequence[int]]):
    """Index pairs whose supports share a site."""
    by_site: dict[int, list[int]] = {}
    for j, sup in enumerate(supports):
        for s in sup:
            by_site.setdefault(s, []).append(j)
    seen = set()
    for group in by_site.values():
        for x in range(len(group)):
            for y in range(x + 1, len(group)):
                pair = (group[x], group[y])
                if pair not in seen:
                    seen.add(pair)
                    yield pair


def _bulk_commutation(c: CanonicalProtocol, amap: AttachmentMap) -> list[str]:
    attached = [m for m in c.measurements if amap.table[m.id]]
    supports = [_obs_support(m.observable) for m in attached]
    out = []
    for x, y in sorted(_bucketed_pairs(supports)):
        if not _obs_commute(attached[x].observable, attached[y].observable):
            out.append(f"bulk observables {attached[x].id} and {attached[y].id} anticommute")
    return out


def _clifford_endpoints(c: CanonicalProtocol, seg: Segmentation) -> list[str]:
    """Projective-representation witness at every boundary plus locality across boundaries.

    At a fixed boundary the unreduced ``Sigma`` of one slot anticommute and
    those of different slots commute.  Reduced operators of distinct
    boundaries must commute.
    """
    out = []
    keys = list(seg.sigma)
    for s in range(seg.R + 1):
        for a, b in itertools.combinations(keys, 2):
            want = a[0] != b[0]
            if seg.sigma[a][s].commutes(seg.sigma[b][s]) != want:
                rel = "commute" if not want else "anticommute"
                out.append(
                    f"boundary {s}: endpoints {_key_text(a)} and {_key_text(b)} {rel}"
                )
    items = [((key, s), seg.reduced[key][s]) for key in keys for s in range(seg.R + 1)]
    supports = [op.support() for _, op in items]
    for x, y in sorted(_bucketed_pairs(supports)):
        (ka, s1), a = items[x]
        (kb, s2), b = items[y]
        if s1 != s2 and not a.commutes(b):
            out.append(
                f"endpoints {_key_text(ka)} at {s1} and {_key_text(kb)} at {s2} anticommute"
            )
    return out


def _declared_endpoints(geo, R: int) -> list[str]:
    out = []
    for s in range(R + 2):
        x_op, z_op = geo.witness(s)
        if _dense_relation(x_op, z_op) != -1:
            out.append(f"slot 1: x and z endpoints do not anticommute at boundary {s}")
    return out


# symmetry generators


def _pivot(p: PauliString) -> tuple[int, int] | None:
    low = (p.x_bits | p.z_bits) & -(p.x_bits | p.z_bits)
    if not low:
        return None
    return low, 0 if p.x_bits & low else 1


def _has(p: PauliString, col: tuple[int, int]) -> bool:
    bit, part = col
    return bool((p.z_bits if part else p.x_bits) & bit)


def _rref(strings: Sequence[PauliString]) -> list[PauliString]:
    """Reduced row echelon form over GF(2), pivoting on the lowest site (X before Z)."""
    rows: list[tuple[tuple[int, int], PauliString]] = []
    for p in strings:
        for col, row in rows:
            if _has(p, col):
                p = p * row
        col = _pivot(p)
        if col is None:
            continue
        rows = [(c, r * p if _has(r, col) else r) for c, r in rows]
        rows.append((col, p))
    rows.sort(key=lambda cr: (cr[0][0], cr[0][1]))
    return [r.unsigned() for _, r in rows]


def _bulk_string(N: int, observables) -> PauliString:
    out = PauliString.identity(N)
    for obs in observables:
        if not isinstance(obs, PauliString):
            return None
        out = out * obs
    return out


def symmetry_generators(p, seg: Segmentation | None = None) -> dict:
    """Bulk symmetry strings ``U_I(n, nu)`` and their canonical generator forms.

    ``generators`` is the echelon form of the whole-chain strings; ``periodic``
    multiplies the i-th echelon row of every region together, which exposes
    site-periodic generators when each region carries the same pattern.
    """
    b = _builder(p, seg)
    N = b.N
    strings = {}
    for key in b.amap.keys:
        s = _bulk_string(N, b.bulk_between(key, 0, b.R))
        if s is None:
            return {"strings": {}, "generators": [], "periodic": []}
        strings[key] = s
    generators = _rref(list(strings.values()))
    per_region = []
    for s in range(1, b.R + 1):
        local = [_bulk_string(N, b.bulk[key][s]) for key in b.amap.keys]
        per_region.append(_rref(local))
    periodic: list[PauliString] = []
    if per_region and len({len(r) for r in per_region}) == 1:
        for i in range(len(per_region[0])):
            out = PauliString.identity(N)
            for rows in per_region:
                out = out * rows[i]
            periodic.append(out.unsigned())
    return {
        "strings": {_key_text(k): v.compact() for k, v in strings.items()},
        "generators": [str(g) for g in generators],
        "periodic": [str(g) for g in periodic],
        "same_group": _rref(periodic) == generators if periodic else False,
    }


# certificate


@dataclass(frozen=True, eq=False)
class SPTCertificate:
    protocol: str
    symmetry: str
    k: int
    regions: tuple[tuple[str, ...], ...]
    region_source: str
    backend: str
    method: str
    expectations: Mapping[tuple[int, str, int, int], float]
    derived: int
    bulk_commutation: bool
    endpoint_anticommutation: bool
    generators: tuple[str, ...]
    periodic_generators: tuple[str, ...]
    end_to_end: tuple[dict, ...]
    issues: tuple[str, ...]
    tolerance: float
    notes: tuple[str, ...] = ()
    note: str = FINITE_SIZE_NOTE

    @property
    def R(self) -> int:
        return len(self.regions)

    @property
    def expectations_ok(self) -> bool:
        return all(abs(v - 1) <= self.tolerance for v in self.expectations.values())

    @property
    def passed(self) -> bool:
        return self.expectations_ok and self.bulk_commutation and self.endpoint_anticommutation

    def expectation(self, slot: int, axis: str, a: int, b: int) -> float:
        return self.expectations[(slot, axis, a, b)]

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "symmetry": self.symmetry,
            "k": self.k,
            "R": self.R,
            "regions": [list(r) for r in self.regions],
            "region_source": self.region_source,
            "backend": self.backend,
            "method": self.method,
            "evaluated": len(self.expectations),
            "derived": self.derived,
            "expectations": [
                {"slot": n, "axis": ax, "a": a, "b": b, "value": v}
                for (n, ax, a, b), v in sorted(self.expectations.items())
            ],
            "bulk_commutation": self.bulk_commutation,
            "endpoint_anticommutation": self.endpoint_anticommutation,
            "generators": list(self.generators),
            "periodic_generators": list(self.periodic_generators),
            "end_to_end": list(self.end_to_end),
            "issues": list(self.issues),
            "notes": list(self.notes),
            "tolerance": self.tolerance,
            "note": self.note,
            "pass": self.passed,
        }


def _intervals(R: int, keys, seed: int):
    """All intervals when few, else adjacent + end-to-end + a seeded sample.

    Adjacent intervals suffice as a proof: ``S_{a,b}`` equals the product of
    ``S_{s,s+1}`` over ``a <= s < b`` because each inner boundary contributes
    ``V^dagger V = 1``, and a product of unitaries fixing ``|Psi>`` fixes it.
    """
    total = (R + 2) * (R + 1) // 2
    if total * len(keys) <= EXHAUSTIVE_INTERVALS:
        full = [(a, b) for a in range(R + 1) for b in range(a + 1, R + 2)]
        return "exhaustive", [(key, ab) for key in keys for ab in full], 0
    rng = np.random.default_rng(seed)
    chosen = {(s, s + 1) for s in range(R + 1)} | {(0, R + 1)}
    for _ in range(SAMPLED_INTERVALS):
        a, b = sorted(rng.choice(R + 2, size=2, replace=False).tolist())
        chosen.add((a, b))
    picked = sorted(chosen)
    derived = len(keys) * (total - len(picked))
    return "telescoping", [(key, ab) for key in keys for ab in picked], derived


def certify_spt(
    p,
    backend: str = "auto",
    tolerance: float = DEFAULT_TOLERANCE,
    seed: int = 0,
) -> SPTCertificate:
    """Evaluate the interval string order parameters and the structural checks."""
    c = _canonical(p)
    issues: list[str] = []
    amap = attachment_map(c)
    seg = segment_regions(c, amap)
    b = _SOPBuilder(c, amap, seg)
    if backend == "auto":
        backend = "stabilizer" if c.is_clifford else "statevector"
    resource = resource_state(c, backend)
    method, todo, derived = _intervals(seg.R, amap.keys, seed)
    expectations = {}
    fast = isinstance(resource, Tableau) and seg.source != "declared"
    for key, (a, e) in todo:
        if fast:
            op = b.pauli_operator(key, a, e)
            val = 0j if op.power % 2 else complex(resource.expectation(op))
        else:
            val = sop_expectation(resource, b.sop(key, a, e))
        if abs(val.imag) > 1e-10:
            issues.append(f"SOP {_key_text(key)} ({a},{e}) has imaginary part {val.imag:.3g}")
        expectations[(key[0], key[1], a, e)] = float(val.real)
    bad = [k for k, v in expectations.items() if abs(v - 1) > tolerance]
    issues += [f"SOP {n}:{ax} ({a},{e}) = {expectations[(n, ax, a, e)]:.6g}" for n, ax, a, e in bad]

    bulk_issues = _bulk_commutation(c, amap)
    if seg.source == "declared":
        end_issues = _declared_endpoints(b.geo, seg.R)
    else:
        end_issues = _clifford_endpoints(c, seg)
    issues += bulk_issues + end_issues
    gens = symmetry_generators(c, seg)
    e2e = tuple(b.sop(key, 0, seg.R + 1).describe() for key in amap.keys) if seg.R < 64 else ()
    return SPTCertificate(
        protocol=c.name,
        symmetry="(Z2xZ2)" if c.k == 1 else f"(Z2xZ2)^{c.k}",
        k=c.k,
        regions=seg.regions,
        region_source=seg.source,
        backend=backend,
        method=method,
        expectations=expectations,
        derived=derived,
        bulk_commutation=not bulk_issues,
        endpoint_anticommutation=not end_issues,
        generators=tuple(gens["generators"]),
        periodic_generators=tuple(gens["periodic"]),
        end_to_end=e2e,
        issues=tuple(issues),
        tolerance=tolerance,
        notes=tuple(amap.issues()),
    )
