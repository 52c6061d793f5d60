"""Generators for the built-in protocol families.

Every generator is deterministic and returns a ``Protocol``; ``to_document``
on the result gives the file form.  Measurement ids are ``m<site>``.
"""
from __future__ import annotations

from dataclasses import dataclass

from .gates import Gate, cz_triangle
from .observables import InvolutoryObservable
from .pauli import PauliString
from .protocol import Measure, Protocol, Recover, UnitaryLayer
from .statevector import DenseOperator

FAMILIES = ("cluster_x", "cluster_y", "hypergraph", "kfold_cluster", "valence_bond")


class BuiltinParameterError(ValueError):
    """Parameters outside a family's domain."""


@dataclass(frozen=True)
class BuiltinSpec:
    family: str
    params: tuple

    def build(self) -> Protocol:
        return build(self.family, *self.params)


def _measure(site: int, letter: str) -> Measure:
    return Measure(f"m{site}", site, InvolutoryObservable.pauli_axis(site, letter))


def _recover(n: int, site: int, letter: str, sites) -> Recover:
    return Recover(PauliString.single(n, site, letter), tuple(f"m{s}" for s in sites))


def _cz_chain(n: int, first: int, last: int, t0: int) -> list[UnitaryLayer]:
    """Nearest-neighbour CZ on bonds first..last, odd bonds then even bonds."""
    odd = tuple(Gate("CZ", (j, j + 1)) for j in range(first, last) if (j - first) % 2 == 0)
    even = tuple(Gate("CZ", (j, j + 1)) for j in range(first, last) if (j - first) % 2 == 1)
    return [UnitaryLayer(t0 + t, layer) for t, layer in enumerate((odd, even)) if layer]


def gen_cluster_x(N: int) -> Protocol:
    """Cluster-state teleportation of one qubit from site 1 to site N with X measurements."""
    if N < 3 or N % 2 == 0:
        raise BuiltinParameterError(f"cluster_x needs odd N >= 3, got {N}")
    instructions: list = _cz_chain(N, 1, N, 1)
    instructions += [_measure(j, "X") for j in range(1, N)]
    instructions.append(_recover(N, N, "Z", range(1, N, 2)))
    instructions.append(_recover(N, N, "X", range(2, N, 2)))
    initial = ("logical:1",) + ("+",) * (N - 1)
    return Protocol(f"cluster_x_{N}", N, (1,), (N,), initial, tuple(instructions))


def gen_cluster_y(R: int) -> Protocol:
    """Same cluster state, every non-final site measured in Y; regions are site triples."""
    if R < 1:
        raise BuiltinParameterError(f"cluster_y needs R >= 1, got {R}")
    N = 3 * R + 1
    instructions: list = _cz_chain(N, 1, N, 1)
    instructions += [_measure(j, "Y") for j in range(1, N)]
    # bulk patterns Y Y I Y Y I ... (x) and I Y Y I Y Y ... (z)
    instructions.append(_recover(N, N, "Z", [j for j in range(1, N) if j % 3 in (1, 2)]))
    instructions.append(_recover(N, N, "X", [j for j in range(1, N) if j % 3 in (2, 0)]))
    initial = ("logical:1",) + ("+",) * (N - 1)
    return Protocol(f"cluster_y_{N}", N, (1,), (N,), initial, tuple(instructions))


@dataclass(frozen=True)
class HypergraphGeometry:
    """Spine of ``n_tet`` shaded triangles separated by dotted vertices.

    Dots sit at sites ``4s - 3`` (s = 1..n_tet+1) and shaded face ``s`` holds
    sites ``4s - 2, 4s - 1, 4s``.  Each shaded face is capped by the dot on
    either side: the unshaded faces are the three triangles joining each
    neighbouring dot to an edge of the shaded face.  The measurement region
    ``s`` is the tetrahedron formed by dot ``s`` and shaded face ``s``.
    """

    n_tet: int

    @property
    def num_sites(self) -> int:
        return 4 * self.n_tet + 1

    def dot(self, s: int) -> int:
        return 4 * s - 3

    def face(self, s: int) -> tuple[int, int, int]:
        return (4 * s - 2, 4 * s - 1, 4 * s)

    @property
    def dots(self) -> list[int]:
        return [self.dot(s) for s in range(1, self.n_tet + 2)]

    @property
    def shaded_sites(self) -> list[int]:
        return [q for s in range(1, self.n_tet + 1) for q in self.face(s)]

    def unshaded_faces(self, s: int) -> tuple[list, list]:
        a, b, c = self.face(s)
        edges = [(a, b), (b, c), (a, c)]
        left = [(self.dot(s),) + e for e in edges]
        right = [(self.dot(s + 1),) + e for e in edges]
        return left, right

    def coords(self) -> tuple[int, ...]:
        pos = [0] * self.num_sites
        for s in range(1, self.n_tet + 2):
            pos[self.dot(s) - 1] = 2 * (s - 1)
        for s in range(1, self.n_tet + 1):
            for q in self.face(s):
                pos[q - 1] = 2 * s - 1
        return tuple(pos)

    def cz_face(self, s: int) -> DenseOperator:
        sites, matrix = cz_triangle(*self.face(s))
        return DenseOperator(sites, matrix)

    def endpoint(self, axis: str, s: int) -> tuple:
        """Closed-form endpoint factors at boundary ``s`` (0 = input, n_tet + 1 = output).

        Every factor is Hermitian, so the same tuple serves as a left or right endpoint.
        """
        n, N = self.n_tet, self.num_sites
        if not 0 <= s <= n + 1:
            raise ValueError(f"boundary {s} outside 0..{n + 1}")
        if axis == "x":
            if s == 0:
                return (PauliString.single(N, 1, "X"), self.cz_face(1))
            if s <= n:
                return (self.cz_face(s),)
            return (PauliString.single(N, N, "X"),)
        if axis == "z":
            return (PauliString.single(N, self.dot(min(s + 1, n + 1)), "Z"),)
        raise ValueError(f"unknown axis {axis!r}")

    def witness(self, s: int) -> tuple[tuple, tuple]:
        """Anticommuting x/z operator pair localised at boundary ``s``."""
        n, N = self.n_tet, self.num_sites
        if s == 0:
            return (PauliString.single(N, 1, "X"),), (PauliString.single(N, 1, "Z"),)
        if s == n + 1:
            return (PauliString.single(N, N, "X"),), (PauliString.single(N, N, "Z"),)
        shaded = PauliString.from_sites(N, {q: "X" for q in self.face(s)})
        return (self.cz_face(s),), (shaded,)

    def regions(self) -> list[list[str]]:
        return [
            [f"m{self.dot(s)}"] + [f"m{q}" for q in self.face(s)]
            for s in range(1, self.n_tet + 1)
        ]


def gen_hypergraph(n_tet: int) -> Protocol:
    """CCZ hypergraph chain; X measurements everywhere except the final dot."""
    if n_tet < 1:
        raise BuiltinParameterError(f"hypergraph needs n_tet >= 1, got {n_tet}")
    geo = HypergraphGeometry(n_tet)
    N = geo.num_sites
    # left caps share the left dot, right caps the right dot: 3 + 3 layers
    layers: list[list[Gate]] = [[] for _ in range(6)]
    for s in range(1, n_tet + 1):
        left, right = geo.unshaded_faces(s)
        for j, face in enumerate(left):
            layers[j].append(Gate("CCZ", face))
        for j, face in enumerate(right):
            layers[3 + j].append(Gate("CCZ", face))
    instructions: list = [UnitaryLayer(t + 1, tuple(g)) for t, g in enumerate(layers)]
    instructions += [_measure(j, "X") for j in range(1, N)]
    instructions.append(_recover(N, N, "Z", geo.dots[:-1]))
    instructions.append(_recover(N, N, "X", geo.shaded_sites))
    initial = ("logical:1",) + ("+",) * (N - 1)
    return Protocol(
        f"hypergraph_{n_tet}", N, (1,), (N,), initial, tuple(instructions),
        coords=geo.coords(), metadata={"hypergraph": geo},
    )


def gen_valence_bond(k: int, R: int) -> Protocol:
    """Bell-pair chain teleporting k qubits with 2k Z measurements per region."""
    if k < 1 or R < 1:
        raise BuiltinParameterError(f"valence_bond needs k, R >= 1, got ({k}, {R})")
    N = (2 * R + 3) * k
    inputs = [2 * n - 1 for n in range(1, k + 1)]
    outputs = [2 * n + (2 * R + 1) * k for n in range(1, k + 1)]

    def clip(gates):
        return tuple(g for g in gates if all(1 <= s <= N for s in g.sites))

    first = [Gate("SWAP", (2 * n - 1, 2 * n)) for n in range(1, k + 1)]
    first += [Gate("BELL", (2 * j - 1, 2 * j)) for j in range(k + 1, (R + 1) * k + 1)]
    layers = [clip(first)]
    for swaps in _valence_bond_routing(k, R):
        layers.append(tuple(Gate("SWAP", pair) for pair in swaps))
    last = [Gate("BELLDG", (k + 2 * j - 1, k + 2 * j)) for j in range(1, k * R + 1)]
    last += [Gate("SWAP", (N - 2 * n - 1, N - 2 * n)) for n in range(k)]
    layers.append(clip(last))
    instructions: list = [UnitaryLayer(t + 1, g) for t, g in enumerate(layers)]
    measured = list(range(k + 1, (2 * R + 1) * k + 1))
    instructions += [_measure(j, "Z") for j in measured]
    for n in range(1, k + 1):
        xs = [k + 1 + 2 * k * r + 2 * (n - 1) for r in range(R)]
        zs = [s + 1 for s in xs]
        instructions.append(_recover(N, outputs[n - 1], "Z", xs))
        instructions.append(_recover(N, outputs[n - 1], "X", zs))
    initial = ["0"] * N
    for n, site in enumerate(inputs, start=1):
        initial[site - 1] = f"logical:{n}"
    return Protocol(
        f"valence_bond_{k}_{R}", N, tuple(inputs), tuple(outputs), tuple(initial),
        tuple(instructions),
    )


def _valence_bond_routing(k: int, R: int) -> list[list[tuple[int, int]]]:
    """Swap layers that interleave inputs and Bell halves before the final layer.

    After the first layer, input ``n`` sits on ``2n`` and Bell pair ``j`` on
    ``(2k + 2j - 1, 2k + 2j)``.  The targets put input ``n`` next to the
    first half of pair ``n``, the second half of each pair next to the first
    half of the pair ``k`` further on, and the last block's second halves one
    swap away from the outputs.  Right movers and left movers pass through
    each other one step per layer, which takes exactly ``k - 1`` layers.
    Swaps of two blank qubits are identities and are dropped.
    """
    N = (2 * R + 3) * k
    start = {2 * n: ("in", n) for n in range(1, k + 1)}
    for j in range(1, R * k + 1):
        start[2 * k + 2 * j - 1] = ("A", j)
        start[2 * k + 2 * j] = ("B", j)
    target = {}
    for n in range(1, k + 1):
        target[("in", n)] = k + 2 * n - 1
        target[("A", n)] = k + 2 * n
        target[("B", (R - 1) * k + n)] = (2 * R + 1) * k + 2 * n - 1
    for r in range(2, R + 1):
        for n in range(1, k + 1):
            target[("B", (r - 2) * k + n)] = k + 2 * k * (r - 1) + 2 * n - 1
            target[("A", (r - 1) * k + n)] = k + 2 * k * (r - 1) + 2 * n
    taken = set(target.values())
    blanks_at = [s for s in range(1, N + 1) if s not in start]
    blanks_to = [s for s in range(1, N + 1) if s not in taken]
    for s, t in zip(blanks_at, blanks_to):
        start[s] = ("blank", t)
        target[("blank", t)] = t
    cur = [None] + [start[s] for s in range(1, N + 1)]
    layers = []
    while any(target[cur[s]] != s for s in range(1, N + 1)):
        swaps, s = [], 1
        while s < N:
            if target[cur[s]] > s and target[cur[s + 1]] < s + 1:
                swaps.append((s, s + 1))
                s += 2
            else:
                s += 1
        for a, b in swaps:
            cur[a], cur[b] = cur[b], cur[a]
        layers.append(
            [(a, b) for a, b in swaps if not (cur[a][0] == cur[b][0] == "blank")]
        )
    return layers


def gen_kfold_cluster(k: int, R: int) -> Protocol:
    if k not in (1, 2):
        raise BuiltinParameterError(
            "kfold_cluster is defined for k in {1, 2}; use valence_bond for larger k"
        )
    if R < 1:
        raise BuiltinParameterError(f"kfold_cluster needs R >= 1, got {R}")
    if k == 1:
        return _kfold_one(R)
    return _kfold_two(R)


def _kfold_one(R: int) -> Protocol:
    """k = 1: the cluster state rotated by S on every site but the output.

    ``H|y->`` is ``|y+> = S|+>`` up to phase and S commutes with CZ, so the
    resource equals the X-basis cluster resource with S applied to sites
    1..N-1; Y measurements there are X measurements on the plain cluster.
    """
    N = 2 * R + 1
    first = [Gate("S", (1,))] + [Gate("H", (j,)) for j in range(2, N)]
    instructions: list = [UnitaryLayer(1, tuple(first))] + _cz_chain(N, 1, N, 2)
    instructions += [_measure(j, "Y") for j in range(1, N)]
    instructions.append(_recover(N, N, "Z", range(1, N, 2)))
    instructions.append(_recover(N, N, "X", range(2, N, 2)))
    initial = ("logical:1",) + ("y-",) * (N - 2) + ("+",)
    return Protocol(f"kfold_cluster_1_{R}", N, (1,), (N,), initial, tuple(instructions))


def _kfold_two(R: int) -> Protocol:
    """k = 2: two rounds of (H layer, CZ chain) on |y-> with modified edges.

    Edge modifications: the output pair starts in |+> and skips the first
    Hadamard, so it enters the first CZ layer as |+> instead of H|y->; the
    input pair gets an S after its second Hadamard; the input pair is also
    Y-measured.  Sites 3..4R+2 are the bulk, four Y measurements per region.
    The parity sets come from solving the teleportation conditions over
    GF(2); each bulk set is a union of sublattices ``j mod 4``.
    """
    N = 4 * R + 4
    f1, f2 = N - 1, N
    instructions: list = [UnitaryLayer(1, tuple(Gate("H", (j,)) for j in range(1, N - 1)))]
    instructions += _cz_chain(N, 1, N, 2)
    instructions.append(UnitaryLayer(4, tuple(Gate("H", (j,)) for j in range(1, N + 1))))
    instructions.append(UnitaryLayer(5, (Gate("S", (1,)), Gate("S", (2,)))))
    instructions += _cz_chain(N, 1, N, 6)
    instructions += [_measure(j, "Y") for j in range(1, N - 1)]
    blocks = [4 * r for r in range(R)]
    instructions.append(_recover(N, f1, "Z", [1] + [b + d for b in blocks for d in (3, 4, 5)]))
    instructions.append(_recover(N, f1, "X", [2] + [b + d for b in blocks for d in (4, 5, 6)]))
    instructions.append(_recover(N, f2, "Z", [b + 4 for b in blocks]))
    instructions.append(_recover(N, f2, "X", [1] + [b + 5 for b in blocks]))
    initial = ("logical:1", "logical:2") + ("y-",) * (N - 4) + ("+", "+")
    return Protocol(
        f"kfold_cluster_2_{R}", N, (1, 2), (f1, f2), initial, tuple(instructions)
    )


BUILDERS = {
    "cluster_x": gen_cluster_x,
    "cluster_y": gen_cluster_y,
    "hypergraph": gen_hypergraph,
    "kfold_cluster": gen_kfold_cluster,
    "valence_bond": gen_valence_bond,
}


def build(family: str, *params) -> Protocol:
    if family not in BUILDERS:
        raise BuiltinParameterError(f"unknown family {family!r}; choose from {FAMILIES}")
    return BUILDERS[family](*params)
