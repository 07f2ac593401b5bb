"""Circuit container, benchmark builders, transpilation, dense unitaries."""

import json

import numpy as np
import pytest

import _oracle as orc
from pcskit import Circuit, Gate, build_ghz_mirror, build_input_prep, build_toffoli, prepend, transpile_to_basis, unitary_of
from pcskit.circuits import BASIS_KINDS, unitaries_equal_up_to_phase
from pcskit.errors import CapacityError, UnsupportedGateError
from test_pauli import random_clifford_circuit


class TestCircuitContainer:
    def test_gate_after_measure_rejected(self):
        c = Circuit(2, 2)
        c.h(0)
        c.measure(0, 0)
        with pytest.raises(ValueError, match="terminal"):
            c.x(0)

    def test_duplicate_clbit_write_rejected(self):
        c = Circuit(2, 1)
        c.measure(0, 0)
        with pytest.raises(ValueError, match="twice"):
            c.measure(1, 0)

    def test_qubit_bounds(self):
        c = Circuit(2, 0)
        with pytest.raises(ValueError):
            c.h(2)
        with pytest.raises(ValueError):
            c.cx(0, 0)

    def test_unknown_kind_rejected(self):
        c = Circuit(1, 0)
        with pytest.raises(UnsupportedGateError):
            c.add(Gate("swap", (0,)))

    def test_measure_clbit_defaults_to_qubit(self):
        c = Circuit(3, 3)
        c.measure_all()
        assert c.measured_pairs() == [(0, 0), (1, 1), (2, 2)]

    def test_json_round_trip(self):
        c = Circuit(3, 3, label="demo")
        c.h(0)
        c.rz(0.25, 1)
        c.cpauli("Y", 0, 2)
        c.ccx(0, 1, 2)
        c.measure_all()
        back = Circuit.from_json(c.to_json())
        assert back == c
        # and the serialized form is valid JSON with stable keys
        obj = json.loads(c.to_json())
        assert obj["num_qubits"] == 3

    def test_without_measurements(self):
        c = Circuit(2, 2)
        c.h(0)
        c.measure_all()
        bare = c.without_measurements()
        assert all(g.kind != "measure" for g in bare.gates)
        assert len(bare.gates) == 1


class TestBuilders:
    def test_ghz_mirror_gate_census(self):
        c = build_ghz_mirror(8)
        kinds = [g.kind for g in c.gates]
        assert kinds.count("h") == 2
        assert kinds.count("cx") == 14
        assert kinds.count("measure") == 8
        assert len(kinds) == 2 + 14 + 8

    def test_ghz_mirror_is_identity(self):
        c = build_ghz_mirror(4)
        u = unitary_of(c.without_measurements())
        assert unitaries_equal_up_to_phase(u, np.eye(16), tol=1e-12)

    def test_ghz_mirror_ideal_outcome(self):
        d = orc.ideal_distribution(build_ghz_mirror(5))
        assert set(d) == {"00000"}
        assert d["00000"] == pytest.approx(1.0, abs=1e-12)

    def test_ghz_mirror_width_validated(self):
        with pytest.raises(ValueError):
            build_ghz_mirror(1)

    def test_toffoli_unitary_is_canonical_ccx(self):
        u = unitary_of(build_toffoli().without_measurements())
        expect = np.eye(8)[:, [0, 1, 2, 3, 4, 5, 7, 6]]
        assert np.allclose(u, expect, atol=1e-12)

    def test_toffoli_with_prep_maps_110_to_111(self):
        circ = prepend(build_input_prep("110"), build_toffoli())
        assert orc.ideal_distribution(circ) == {"111": 1.0}

    def test_input_prep_validation(self):
        with pytest.raises(ValueError):
            build_input_prep("102")

    def test_prepend_rules(self):
        with pytest.raises(ValueError, match="wider"):
            prepend(build_input_prep("11"), Circuit(1, 0))
        measured = Circuit(1, 1)
        measured.measure(0, 0)
        with pytest.raises(ValueError, match="unitary"):
            prepend(measured, Circuit(1, 0))


class TestTranspile:
    @staticmethod
    def assert_equivalent(c: Circuit, tol: float = 1e-9):
        t = transpile_to_basis(c)
        assert all(g.kind in BASIS_KINDS for g in t.gates)
        u_orig = orc.circuit_unitary(c)
        u_trans = orc.circuit_unitary(t)
        assert unitaries_equal_up_to_phase(u_orig, u_trans, tol=tol)

    @pytest.mark.parametrize("kind", ["h", "s", "sdg", "y", "z"])
    def test_single_qubit_lowerings(self, kind):
        c = Circuit(1, 0)
        getattr(c, kind)(0)
        self.assert_equivalent(c)

    @pytest.mark.parametrize("pauli", ["X", "Y", "Z"])
    def test_controlled_pauli_lowering(self, pauli):
        c = Circuit(2, 0)
        c.cpauli(pauli, 0, 1)
        self.assert_equivalent(c)

    def test_ccx_lowering(self):
        c = Circuit(3, 0)
        c.ccx(0, 1, 2)
        self.assert_equivalent(c)

    def test_ccx_lowering_arbitrary_wires(self):
        c = Circuit(4, 0)
        c.ccx(3, 1, 0)
        self.assert_equivalent(c)

    def test_benchmarks_transpile_equivalently(self):
        self.assert_equivalent(build_ghz_mirror(4).without_measurements())
        self.assert_equivalent(build_toffoli().without_measurements())

    def test_random_clifford_circuits(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            c = random_clifford_circuit(rng, 3, 12)
            self.assert_equivalent(c)

    def test_measures_pass_through(self):
        c = build_ghz_mirror(3)
        t = transpile_to_basis(c)
        assert t.measured_pairs() == c.measured_pairs()

    def test_basis_circuit_unchanged(self):
        c = Circuit(2, 0)
        c.x(0)
        c.sx(1)
        c.rz(0.5, 0)
        c.cx(0, 1)
        assert transpile_to_basis(c) == c


class TestUnitaryOf:
    def test_matches_oracle_on_random_circuits(self):
        rng = np.random.default_rng(41)
        for _ in range(20):
            c = random_clifford_circuit(rng, 4, 10)
            c.rz(float(rng.uniform(0, 2 * np.pi)), int(rng.integers(4)))
            assert np.allclose(unitary_of(c), orc.circuit_unitary(c), atol=1e-12)

    def test_refuses_measures(self):
        c = Circuit(1, 1)
        c.measure(0, 0)
        with pytest.raises(ValueError):
            unitary_of(c)

    def test_capacity_cap(self):
        with pytest.raises(CapacityError):
            unitary_of(Circuit(13, 0))
