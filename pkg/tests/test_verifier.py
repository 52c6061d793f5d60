import numpy as np
import pytest

from telespt.builtins import build
from telespt.errors import BackendUnsupportedError, ImpossibleOutcomeError
from telespt.observables import InvolutoryObservable
from telespt.pauli import PauliString
from telespt.protocol import Measure, Recover, canonicalize, protocol_from_parts
from telespt.verifier import (
    ENUMERATE_CAP,
    branch_table,
    commutation_audit,
    feedback_ablation,
    heisenberg_verify,
    run_trajectory,
    strip_recoveries,
    verify_state_transfer,
)

from _helpers import SMALL_BUILTINS, builtin_id, random_clifford_protocol, random_input_label


def flip_parity(p, index=-2, keep=("m1",)):
    ins = list(p.instructions)
    rec = [j for j, i in enumerate(ins) if isinstance(i, Recover)][index]
    ins[rec] = Recover(ins[rec].pauli, tuple(keep))
    return p.replace(name=p.name + "_mutant", instructions=ins)


def with_measurement(p, mid, site, letter, at=None):
    ins = list(p.instructions)
    m = Measure(mid, site, InvolutoryObservable.pauli_axis(site, letter))
    first_rec = next(j for j, i in enumerate(ins) if isinstance(i, Recover))
    ins.insert(first_rec if at is None else at, m)
    return p.replace(instructions=ins)


class TestRunTrajectory:
    def test_zero_input_all_zero_outcomes(self):
        run = run_trajectory(build("cluster_x", 5), [(1, 0)], "0000")
        assert run.fidelities[0] == pytest.approx(1, abs=1e-9)
        assert run.probability == pytest.approx(1 / 16)

    def test_generic_input(self):
        run = run_trajectory(build("cluster_x", 5), [(0.6, 0.8)], "1010")
        assert run.fidelities[0] == pytest.approx(1, abs=1e-9)

    def test_without_recoveries(self):
        run = run_trajectory(strip_recoveries(build("cluster_x", 5)), [(0.6, 0.8)], "0100")
        assert run.fidelities[0] < 1 - 1e-3

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            run_trajectory(build("cluster_x", 5), [(1, 0)], "000")

    def test_impossible_prefix(self):
        # Z1 then Z1 again: the second outcome is fixed by the first
        p = with_measurement(build("cluster_x", 3), "mz", 1, "Z", at=2)
        p = with_measurement(p, "mz2", 1, "Z", at=3)
        with pytest.raises(ImpossibleOutcomeError):
            run_trajectory(p, [(0.6, 0.8)], "0100")


class TestVerifyStateTransfer:
    @pytest.mark.parametrize("backend", ["statevector", "stabilizer"])
    def test_cluster_x5_enumerate(self, backend):
        rep = verify_state_transfer(build("cluster_x", 5), backend=backend)
        assert rep.passed and rep.backend == backend
        assert len(rep.results) == 4
        for r in rep.results:
            assert len(r.trajectories) == 16
            assert r.total_probability == pytest.approx(1, abs=1e-9)
            for t in r.trajectories:
                assert t.probability == pytest.approx(1 / 16, abs=1e-9)
                assert min(t.fidelities) >= 1 - 1e-9

    def test_hypergraph_enumerate(self):
        rep = verify_state_transfer(build("hypergraph", 2))
        assert rep.backend == "statevector"
        assert rep.passed and rep.min_fidelity >= 1 - 1e-9
        for r in rep.results:
            assert r.total_probability == pytest.approx(1, abs=1e-9)

    def test_identity_wire_flagged(self):
        wire = protocol_from_parts("wire", 1, (1,), (1,), ("logical:1",), ())
        rep = verify_state_transfer(wire)
        assert not rep.passed
        assert any("M > 1" in v for v in rep.violations)

    def test_enumeration_cap(self):
        p = build("cluster_x", 2 * ENUMERATE_CAP + 3)
        with pytest.raises(ValueError, match="sample"):
            verify_state_transfer(p, mode="enumerate")

    def test_sample_mode_reproducible(self):
        p = build("cluster_y", 3)
        a = verify_state_transfer(p, mode="sample", shots=32, seed=5, backend="statevector")
        b = verify_state_transfer(p, mode="sample", shots=32, seed=5, backend="statevector")
        assert a.to_dict() == b.to_dict()
        assert a.passed and a.num_trajectories == 4 * 32

    def test_mutation_names_trajectory(self):
        rep = verify_state_transfer(flip_parity(build("cluster_x", 5)))
        assert not rep.passed
        assert any("trajectory" in f and "fidelity 0" in f for f in rep.failures())

    @pytest.mark.parametrize("case", [("valence_bond", (2, 1)), ("kfold_cluster", (2, 1))], ids=builtin_id)
    def test_bell_spot_check(self, case):
        p = build(case[0], *case[1])
        for backend in ("statevector", "stabilizer"):
            rep = verify_state_transfer(p, backend=backend)
            bell = [r for r in rep.results if r.label == "bell(1,2)"]
            assert len(bell) == 1 and bell[0].min_fidelity >= 1 - 1e-9

    def test_bell_detects_slot_swap(self):
        """Swapping the two output slots passes nothing once slots differ."""
        p = build("valence_bond", 2, 1)
        swapped = p.replace(logical_out=p.logical_out[::-1])
        assert not verify_state_transfer(swapped, backend="stabilizer").passed

    def test_report_document(self):
        doc = verify_state_transfer(build("cluster_x", 3)).to_dict()
        assert doc["pass"] and doc["num_trajectories"] == 16
        assert doc["tolerance"] == 1e-9


class TestHeisenberg:
    def test_cluster_x5(self):
        rep = heisenberg_verify(build("cluster_x", 5))
        assert rep.passed
        stabs = {(h.slot, h.axis): h.stabilizer.compact() for h in rep.heisenberg}
        assert stabs[(1, "x")] == "X3X5"
        assert stabs[(1, "z")] == "X2X4"
        assert stabs[(1, "y")] == "X2X3X4X5"
        dil = {h.axis: h.dilated.outcome_z for h in rep.heisenberg}
        assert dil["x"] == {"m1", "m3"} and dil["z"] == {"m2", "m4"}

    def test_valence_bond_1_1(self):
        assert heisenberg_verify(build("valence_bond", 1, 1)).passed

    def test_mutation_names_logical(self):
        rep = heisenberg_verify(flip_parity(build("cluster_x", 5)))
        assert not rep.passed
        assert any(f.startswith("logical (1,x)") for f in rep.failures())

    def test_non_clifford(self):
        with pytest.raises(BackendUnsupportedError):
            heisenberg_verify(build("hypergraph", 1))

    @pytest.mark.parametrize("case", [c for c in SMALL_BUILTINS if c[0] != "hypergraph"], ids=builtin_id)
    def test_agrees_with_enumeration(self, case):
        p = build(case[0], *case[1])
        assert heisenberg_verify(p).passed == verify_state_transfer(p).passed

    @pytest.mark.parametrize("case", [("cluster_x", (5,)), ("cluster_y", (2,)), ("valence_bond", (2, 1))], ids=builtin_id)
    def test_agrees_on_mutants(self, case):
        p = flip_parity(build(case[0], *case[1]), index=0, keep=())
        p = p.replace(instructions=[i for i in p.instructions if not (isinstance(i, Recover) and not i.parity_of)])
        assert heisenberg_verify(p).passed == verify_state_transfer(p).passed == False  # noqa: E712


class TestAblation:
    def test_cluster_ablated(self):
        rep = feedback_ablation(build("cluster_x", 5), inputs=[(0.6, 0.8)])
        assert rep.distances[0] < 1e-9

    def test_cluster_intact(self):
        rep = feedback_ablation(build("cluster_x", 5), inputs=[(0.6, 0.8)], ablate=False)
        assert rep.distances[0] == pytest.approx(0.5, abs=1e-9)

    @pytest.mark.parametrize("case", [c for c in SMALL_BUILTINS if c != ("valence_bond", (2, 2))], ids=builtin_id)
    def test_builtins(self, case):
        p = build(case[0], *case[1])
        rep = feedback_ablation(p)
        assert max(rep.distances) < 1e-9


class TestCommutationAudit:
    def test_cluster_clean(self):
        assert commutation_audit(canonicalize(build("cluster_x", 5))) == []

    def test_injected_anticommuting(self):
        p = with_measurement(build("cluster_x", 5), "injected", 2, "Z")
        out = commutation_audit(canonicalize(p))
        assert out == ["measurements m2 and injected anticommute"]

    def test_support_on_final(self):
        p = with_measurement(build("cluster_x", 5), "mf", 5, "X")
        out = commutation_audit(canonicalize(p))
        assert any("support on F" in v and "mf" in v for v in out)

    @pytest.mark.parametrize("case", SMALL_BUILTINS, ids=builtin_id)
    def test_builtins_clean(self, case):
        assert commutation_audit(canonicalize(build(case[0], *case[1]))) == []


class TestBackendEquivalence:
    @pytest.mark.parametrize("seed", range(20))
    def test_branch_tables_agree(self, seed):
        p = random_clifford_protocol(seed)
        labels = [random_input_label(seed)]
        dense = branch_table(p, labels, "statevector")
        tab = branch_table(p, labels, "stabilizer")
        assert dense.keys() == tab.keys()
        for bits, d in dense.items():
            t = tab[bits]
            assert d.probability == pytest.approx(t.probability, abs=1e-9)
            assert np.allclose(d.node_p0, t.node_p0, atol=1e-9)
            assert abs(np.vdot(d.amplitudes, t.amplitudes)) ** 2 >= 1 - 1e-9

    def test_probabilities_sum_to_one(self):
        table = branch_table(build("cluster_y", 2), ["y+"], "statevector")
        assert len(table) == 64
        assert sum(b.probability for b in table.values()) == pytest.approx(1, abs=1e-9)

    def test_stabilizer_rejects_ccz(self):
        with pytest.raises(BackendUnsupportedError):
            branch_table(build("hypergraph", 1), ["0"], "stabilizer")
