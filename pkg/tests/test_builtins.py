import json

import numpy as np
import pytest

from telespt.builtins import (
    FAMILIES,
    BuiltinParameterError,
    BuiltinSpec,
    HypergraphGeometry,
    build,
)
from telespt.gates import Gate
from telespt.pauli import PauliString
from telespt.protocol import canonicalize, depth_velocity, parse_protocol, validate_standard
from telespt.stringorder import (
    StringOrderParameter,
    _dense_relation,
    certify_spt,
    resource_state,
    sop_expectation,
)
from telespt.verifier import heisenberg_verify, verify_state_transfer

from _helpers import SMALL_BUILTINS, builtin_id


class TestParameters:
    @pytest.mark.parametrize(
        "family, params",
        [
            ("cluster_x", (4,)),
            ("cluster_x", (1,)),
            ("cluster_y", (0,)),
            ("hypergraph", (0,)),
            ("kfold_cluster", (3, 1)),
            ("kfold_cluster", (1, 0)),
            ("valence_bond", (0, 2)),
            ("valence_bond", (2, 0)),
        ],
    )
    def test_rejected(self, family, params):
        with pytest.raises(BuiltinParameterError):
            build(family, *params)

    def test_unknown_family(self):
        with pytest.raises(BuiltinParameterError, match="unknown family"):
            build("ring", 3)

    def test_kfold_points_to_valence_bond(self):
        with pytest.raises(BuiltinParameterError, match="valence_bond"):
            build("kfold_cluster", 4, 1)

    def test_spec_object(self):
        assert BuiltinSpec("cluster_x", (5,)).build().name == "cluster_x_5"
        assert set(FAMILIES) == {"cluster_x", "cluster_y", "hypergraph", "kfold_cluster", "valence_bond"}


class TestShapes:
    @pytest.mark.parametrize("N", [3, 5, 11])
    def test_cluster_x(self, N):
        p = build("cluster_x", N)
        assert (p.num_sites, p.logical_in, p.logical_out) == (N, (1,), (N,))
        assert len(p.measurements) == N - 1
        assert depth_velocity(p).T == 2

    @pytest.mark.parametrize("R", [1, 2, 4])
    def test_cluster_y(self, R):
        p = build("cluster_y", R)
        assert p.num_sites == 3 * R + 1
        assert {m.observable.axis for m in p.measurements} == {(0.0, 1.0, 0.0)}

    @pytest.mark.parametrize("n_tet", [1, 2, 4])
    def test_hypergraph(self, n_tet):
        p = build("hypergraph", n_tet)
        assert p.num_sites == 4 * n_tet + 1
        assert not canonicalize(p).is_clifford

    @pytest.mark.parametrize("k, R", [(1, 1), (2, 1), (3, 2), (4, 3)])
    def test_valence_bond(self, k, R):
        p = build("valence_bond", k, R)
        assert p.num_sites == (2 * R + 3) * k
        assert p.logical_in == tuple(2 * n - 1 for n in range(1, k + 1))
        assert len(p.measurements) == 2 * k * R
        assert depth_velocity(p).T == k + 1

    @pytest.mark.parametrize("k, R, N", [(1, 2, 5), (2, 1, 8), (2, 3, 16)])
    def test_kfold(self, k, R, N):
        p = build("kfold_cluster", k, R)
        assert p.num_sites == N and p.k == k

    @pytest.mark.parametrize("case", SMALL_BUILTINS, ids=builtin_id)
    def test_standard_form(self, case):
        assert validate_standard(build(case[0], *case[1])) == []


class TestDeterminism:
    @pytest.mark.parametrize("case", SMALL_BUILTINS, ids=builtin_id)
    def test_identical_dumps(self, case):
        assert build(case[0], *case[1]).dumps() == build(case[0], *case[1]).dumps()

    @pytest.mark.parametrize("case", SMALL_BUILTINS, ids=builtin_id)
    def test_document_round_trip(self, case):
        p = build(case[0], *case[1])
        q = parse_protocol(json.loads(p.dumps()))
        assert q.dumps() == p.dumps()
        assert list(q.program()) == list(p.program())

    def test_measurement_ids(self):
        assert [m.id for m in build("cluster_x", 5).measurements] == ["m1", "m2", "m3", "m4"]


class TestTeleportation:
    @pytest.mark.parametrize("case", SMALL_BUILTINS, ids=builtin_id)
    def test_enumerated_transfer(self, case):
        assert verify_state_transfer(build(case[0], *case[1])).passed

    @pytest.mark.parametrize("k, R", [(1, 4), (2, 4), (3, 3), (5, 1)])
    def test_heisenberg_larger(self, k, R):
        assert heisenberg_verify(build("valence_bond", k, R)).passed

    @pytest.mark.parametrize("R", [3, 8])
    def test_kfold_heisenberg(self, R):
        assert heisenberg_verify(build("kfold_cluster", 2, R)).passed
        assert heisenberg_verify(build("kfold_cluster", 1, R)).passed


class TestKfold:
    @pytest.mark.parametrize("R", [1, 2, 3])
    def test_k1_is_rotated_cluster(self, R):
        """k = 1 resource equals the cluster resource with S on every site but the output."""
        a = resource_state(build("kfold_cluster", 1, R), "statevector")
        b = resource_state(build("cluster_x", 2 * R + 1), "statevector")
        for j in range(1, 2 * R + 1):
            b.apply_gate(Gate("S", (j,)))
        assert abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2 == pytest.approx(1, abs=1e-9)

    @pytest.mark.parametrize("k, R", [(1, 3), (2, 1), (2, 3)])
    def test_bulk_stabilizers(self, k, R):
        """Z_j Y_{j+1} ... Y_{j+2k-1} Z_{j+2k} stabilize the resource away from the input."""
        p = build("kfold_cluster", k, R)
        psi = resource_state(p, "stabilizer")
        N = p.num_sites
        for j in range(k, N - 2 * k + 1):
            letters = {j: "Z", j + 2 * k: "Z"} | {s: "Y" for s in range(j + 1, j + 2 * k)}
            assert psi.expectation(PauliString.from_sites(N, letters)) == 1

    @pytest.mark.parametrize("R", [1, 2, 3])
    def test_k2_certificate(self, R):
        cert = certify_spt(build("kfold_cluster", 2, R))
        assert cert.passed and len(cert.generators) == 4
        assert all(set(g) <= {"I", "Y"} for g in cert.periodic_generators)

    def test_k2_periodic_generators(self):
        cert = certify_spt(build("kfold_cluster", 2, 3))
        # each periodic generator lives on one sublattice j mod 4
        for g in cert.periodic_generators:
            sites = [j for j, c in enumerate(g) if c == "Y"]
            assert len({s % 4 for s in sites}) == 1


class TestHypergraphGeometry:
    def test_layout(self):
        geo = HypergraphGeometry(2)
        assert geo.num_sites == 9
        assert geo.dots == [1, 5, 9]
        assert geo.face(2) == (6, 7, 8)
        assert geo.coords() == (0, 1, 1, 1, 2, 3, 3, 3, 4)
        assert geo.regions() == [["m1", "m2", "m3", "m4"], ["m5", "m6", "m7", "m8"]]

    def test_unshaded_faces(self):
        left, right = HypergraphGeometry(1).unshaded_faces(1)
        assert left == [(1, 2, 3), (1, 3, 4), (1, 2, 4)]
        assert right == [(5, 2, 3), (5, 3, 4), (5, 2, 4)]

    def test_every_unshaded_face_is_a_ccz(self):
        p = build("hypergraph", 2)
        geo = p.metadata["hypergraph"]
        gates = {tuple(sorted(g.sites)) for layer in p.layers for g in layer.gates}
        expected = {tuple(sorted(f)) for s in (1, 2) for side in geo.unshaded_faces(s) for f in side}
        assert gates == expected

    def test_boundary_out_of_range(self):
        with pytest.raises(ValueError):
            HypergraphGeometry(1).endpoint("x", 3)
        with pytest.raises(ValueError):
            HypergraphGeometry(1).endpoint("y", 0)

    @pytest.mark.parametrize("s", [0, 1, 2, 3])
    def test_witnesses_anticommute(self, s):
        x_op, z_op = HypergraphGeometry(2).witness(s)
        assert _dense_relation(x_op, z_op) == -1

    @pytest.mark.parametrize("n_tet", [1, 2])
    def test_closed_form_x_string(self, n_tet):
        """Input endpoint X1 CZ(face 1), X on every non-final dot, X on the output."""
        p = build("hypergraph", n_tet)
        geo = p.metadata["hypergraph"]
        N = geo.num_sites
        dots = tuple(PauliString.single(N, d, "X") for d in geo.dots[:-1])
        factors = geo.endpoint("x", 0) + dots + geo.endpoint("x", n_tet + 1)
        string = StringOrderParameter(1, "x", (0, n_tet + 1), (), factors, (), N)
        assert sop_expectation(resource_state(p), string).real == pytest.approx(1, abs=1e-9)
