import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from telespt.builtins import build
from telespt.errors import BackendUnsupportedError, ImpossibleOutcomeError
from telespt.gates import Gate
from telespt.pauli import PauliString, parse_pauli
from telespt.protocol import canonicalize, protocol_from_parts
from telespt.stabilizer import (
    InitialStabilizers,
    LayeredCircuit,
    Tableau,
    conjugate,
    heisenberg_logical,
    is_initial_stabilizer,
    measure_pauli,
    reduce_by_initial,
    tableau_from_product,
)
from telespt.statevector import Forced, Sampled, StateVector, init_product_state

from _helpers import SMALL_BUILTINS, builtin_id

CLIFFORD_1 = ["H", "S", "SDG", "X", "Y", "Z"]
CLIFFORD_2 = ["CZ", "CNOT", "SWAP", "BELL", "BELLDG"]
LABELS = ["0", "1", "+", "-", "y+", "y-"]


def clifford_gates(n, max_len=15):
    one = st.builds(lambda g, a: Gate(g, (a,)), st.sampled_from(CLIFFORD_1), st.integers(1, n))
    two = st.builds(
        lambda g, perm: Gate(g, tuple(perm[:2])),
        st.sampled_from(CLIFFORD_2),
        st.permutations(list(range(1, n + 1))),
    )
    return st.lists(st.one_of(one, two) if n >= 2 else one, max_size=max_len)


def paulis(n):
    return st.builds(
        lambda letters, sign: parse_pauli(("-" if sign else "") + "".join(letters)),
        st.lists(st.sampled_from("IXYZ"), min_size=n, max_size=n),
        st.booleans(),
    )


def dense_gate(gate, n):
    m = np.zeros((2**n, 2**n), dtype=complex)
    for j in range(2**n):
        e = np.zeros(2**n, dtype=complex)
        e[j] = 1
        m[:, j] = StateVector(e).apply_gate(gate).amplitudes
    return m


class TestProductTableau:
    def test_plus_plus(self):
        assert [str(s) for s in tableau_from_product(["+", "+"]).stabilizers()] == ["XI", "IX"]

    def test_zero_one(self):
        assert [str(s) for s in tableau_from_product(["0", "1"]).stabilizers()] == ["ZI", "-IZ"]

    def test_y_minus(self):
        assert [str(s) for s in tableau_from_product(["y-"]).stabilizers()] == ["-Y"]

    def test_unsupported_label(self):
        with pytest.raises(ValueError):
            tableau_from_product(["logical:1"])

    @pytest.mark.parametrize("label", LABELS)
    def test_matches_dense_label(self, label):
        t = tableau_from_product([label])
        v = init_product_state([label]).amplitudes
        assert abs(np.vdot(t.to_amplitudes(), v)) == pytest.approx(1)


class TestConjugate:
    @pytest.mark.parametrize(
        "gate, before, after",
        [
            (Gate("H", (1,)), "X", "Z"),
            (Gate("S", (1,)), "X", "Y"),
            (Gate("CZ", (1, 2)), "XI", "XZ"),
            (Gate("CNOT", (1, 2)), "XI", "XX"),
            (Gate("CNOT", (1, 2)), "IZ", "ZZ"),
            (Gate("SWAP", (1, 2)), "XZ", "ZX"),
        ],
    )
    def test_examples(self, gate, before, after):
        assert conjugate(gate, parse_pauli(before)) == parse_pauli(after)

    def test_non_clifford_rejected(self):
        with pytest.raises(BackendUnsupportedError):
            conjugate(Gate("CCZ", (1, 2, 3)), parse_pauli("XII"))

    @settings(max_examples=200, deadline=None)
    @given(st.integers(1, 3).flatmap(lambda n: st.tuples(clifford_gates(n, 1), paulis(n))))
    def test_matches_dense(self, case):
        gates, p = case
        if not gates:
            return
        g = gates[0]
        u = dense_gate(g, p.num_sites)
        expected = u @ p.to_matrix() @ u.conj().T
        np.testing.assert_allclose(conjugate(g, p).to_matrix(), expected, atol=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(2, 4).flatmap(lambda n: st.tuples(clifford_gates(n, 1), paulis(n), paulis(n))))
    def test_preserves_commutation(self, case):
        gates, p, q = case
        for g in gates:
            assert p.commutes(q) == conjugate(g, p).commutes(conjugate(g, q))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 4).flatmap(lambda n: st.tuples(clifford_gates(n), paulis(n))))
    def test_layered_round_trip(self, case):
        gates, p = case
        layers = [[g] for g in gates]
        circ = LayeredCircuit(layers)
        assert circ.backward(circ.forward(p)) == p


class TestTableau:
    @settings(max_examples=60, deadline=None)
    @given(
        st.integers(1, 4).flatmap(
            lambda n: st.tuples(
                st.lists(st.sampled_from(LABELS), min_size=n, max_size=n), clifford_gates(n)
            )
        )
    )
    def test_generators_valid_and_state_matches(self, case):
        labels, gates = case
        t = tableau_from_product(labels)
        s = init_product_state(labels)
        for g in gates:
            t.apply_gate(g)
            s.apply_gate(g)
        stabs, destabs = t.stabilizers(), t.destabilizers()
        n = len(labels)
        for i in range(n):
            for j in range(n):
                assert stabs[i].commutes(stabs[j])
                assert destabs[i].commutes(stabs[j]) == (i != j)
        assert abs(np.vdot(t.to_amplitudes(), s.amplitudes)) ** 2 == pytest.approx(1, abs=1e-9)
        for p in stabs:
            assert s.expectation(p).real == pytest.approx(1, abs=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(
        st.integers(1, 4).flatmap(
            lambda n: st.tuples(
                st.lists(st.sampled_from(LABELS), min_size=n, max_size=n),
                clifford_gates(n),
                paulis(n),
            )
        )
    )
    def test_expectation_matches_dense(self, case):
        labels, gates, p = case
        t = tableau_from_product(labels)
        s = init_product_state(labels)
        for g in gates:
            t.apply_gate(g)
            s.apply_gate(g)
        assert t.expectation(p) == pytest.approx(s.expectation(p).real, abs=1e-9)

    def test_measure_deterministic(self):
        bit, det, prob, _ = measure_pauli(tableau_from_product(["0"]), parse_pauli("Z"), Sampled.from_seed(0))
        assert (bit, det, prob) == (0, True, 1.0)

    def test_measure_random_forced(self):
        t = tableau_from_product(["+"])
        bit, det, prob, t = measure_pauli(t, parse_pauli("Z"), Forced(1))
        assert (bit, det, prob) == (1, False, 0.5)
        assert [str(s) for s in t.stabilizers()] == ["-Z"]

    def test_forcing_wrong_deterministic_bit(self):
        with pytest.raises(ImpossibleOutcomeError):
            measure_pauli(tableau_from_product(["+"]), parse_pauli("X"), Forced(1))

    @pytest.mark.parametrize("bits", [(0, 0), (0, 1), (1, 0), (1, 1)])
    def test_cluster_measure_then_string_sign(self, bits):
        """Z1X2X4Z5 survives X2, X4 measurements, so Z1Z5 picks up the outcome signs."""
        p = build("cluster_x", 5)
        labels = ["+"] * 5
        t = tableau_from_product(labels)
        s = init_product_state(labels)
        for layer in p.layers:
            for g in layer.gates:
                t.apply_gate(g)
                s.apply_gate(g)
        for site, bit in zip((2, 4), bits):
            obs = PauliString.single(5, site, "X")
            t.measure_pauli(obs, Forced(bit))
            s.measure(obs, Forced(bit))
        assert t.expectation(parse_pauli("ZXIXZ")) == 1
        ends = parse_pauli("ZIIIZ")
        assert t.expectation(ends) == (-1) ** sum(bits)
        assert s.expectation(ends).real == pytest.approx(t.expectation(ends))

    def test_large_tableau_cluster(self):
        n = 2001
        t = tableau_from_product(["+"] * n)
        for j in range(1, n):
            t.apply_gate(Gate("CZ", (j, j + 1)))
        string = PauliString.from_sites(n, {1: "X", 2: "Z"})
        assert t.expectation(string) == 1
        assert t.expectation(PauliString.single(n, 7, "X")) == 0


class TestInitialStabilizers:
    labels = ["logical:1", "+", "+", "+", "+"]

    def test_examples(self):
        assert is_initial_stabilizer(parse_pauli("IXIXI"), self.labels)
        assert not is_initial_stabilizer(parse_pauli("IZIII"), self.labels)
        assert is_initial_stabilizer(PauliString.identity(5), self.labels)

    def test_sign_matters(self):
        assert not is_initial_stabilizer(parse_pauli("-IXIII"), self.labels)
        assert is_initial_stabilizer(parse_pauli("-XZ"), ["-", "0"])

    def test_logical_site_never_matches(self):
        assert not is_initial_stabilizer(parse_pauli("XIIII"), self.labels)

    def test_reduce(self):
        got = reduce_by_initial(parse_pauli("ZXYXZ"), self.labels)
        assert got == parse_pauli("ZIYIZ")
        assert InitialStabilizers(["y-", "1"]).reduce(parse_pauli("YZ")) == parse_pauli("II")


class TestHeisenberg:
    def test_cluster_x(self):
        c = canonicalize(build("cluster_x", 5))
        hx = heisenberg_logical(c, (1, "x"))
        assert hx.physical == parse_pauli("XIXIX")
        assert hx.outcome_z == {"m1", "m3"}
        hz = heisenberg_logical(c, (1, "z"))
        assert hz.physical == parse_pauli("ZXIXI")
        assert hz.outcome_z == {"m2", "m4"}

    def test_identity_protocol(self):
        p = protocol_from_parts("wire", 1, (1,), (1,), ("logical:1",), ())
        d = heisenberg_logical(canonicalize(p), (1, "x"))
        assert d.physical == parse_pauli("X") and not d.outcome_z

    def test_non_clifford_rejected(self):
        with pytest.raises(BackendUnsupportedError):
            heisenberg_logical(canonicalize(build("hypergraph", 1)), (1, "x"))

    @pytest.mark.parametrize(
        "case", [c for c in SMALL_BUILTINS if c[0] != "hypergraph"], ids=builtin_id
    )
    def test_default_record_factors(self, case):
        c = canonicalize(build(*case[:1], *case[1]))
        for n in range(1, c.k + 1):
            i = c.logical_in[n - 1]
            for axis, letter in (("x", "X"), ("z", "Z"), ("y", "Y")):
                phys = heisenberg_logical(c, (n, axis)).default_record()
                stab = PauliString.single(c.num_sites, i, letter) * phys
                assert is_initial_stabilizer(stab, c.initial), (n, axis, phys)
