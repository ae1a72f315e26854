import numpy as np
from hypothesis import given, settings, strategies as st
from pytest import approx, raises

from utilities.logicsim import (
    DenseCapExceeded, DenseState, ForcedOutcomeImpossible, MeasurementRecord, Tableau, branch_rng,
    fidelity, gate_matrix, random_clifford_circuit, tableau_equal
)
from utilities.pauli import PauliOp

BELL = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


def bell_tableau(debug: bool = False) -> Tableau:
    return Tableau(2, debug=debug).apply('H', [0]).apply('CX', [0, 1])


def run_both(n: int, circuit) -> tuple:
    tableau, dense = Tableau(n, debug=True), DenseState(n)
    for gate, targets in circuit:
        tableau.apply(gate, targets)
        dense.apply(gate, targets)
    return tableau, dense


class TestTableau:
    def test_bell_stabilizers(self):
        assert bell_tableau().canonical() == ('+XX', '+ZZ')

    def test_expectations(self):
        tableau = bell_tableau()
        assert tableau.expectation(PauliOp.from_string('XX')) == 1
        assert tableau.expectation(PauliOp.from_string('-YY')) == 1
        assert tableau.expectation(PauliOp.from_string('ZI')) == 0

    def test_forced_measurement_collapses(self):
        tableau = bell_tableau()
        outcome, deterministic = tableau.measure(PauliOp.from_string('ZI'), forced=-1)
        assert (outcome, deterministic) == (-1, False)
        assert tableau.measure(PauliOp.from_string('IZ')) == (-1, True)
        with raises(ForcedOutcomeImpossible):
            tableau.measure(PauliOp.from_string('ZI'), forced=1)

    def test_random_measurement_needs_generator(self):
        with raises(ValueError):
            bell_tableau().measure(PauliOp.from_string('ZI'))

    def test_reset(self):
        tableau = Tableau(1).apply('X', [0]).reset(0)
        assert tableau.expectation(PauliOp.from_string('Z')) == 1
        tableau = Tableau(1).apply('H', [0]).reset(0)
        assert tableau.expectation(PauliOp.from_string('Z')) == 1

    def test_bad_targets(self):
        with raises(ValueError):
            Tableau(2).apply('CX', [0])
        with raises(IndexError):
            Tableau(2).apply('CX', [1, 1])
        with raises(IndexError):
            Tableau(2).apply('H', [2])

    def test_same_state_from_different_circuits(self):
        left = Tableau(1).apply('H', [0])
        right = Tableau(1).apply('H', [0]).apply('X', [0])
        assert tableau_equal(left, right)
        assert not tableau_equal(left, Tableau(1))

    def test_pauli_frame_flips_signs(self):
        tableau = bell_tableau().apply_pauli(PauliOp.from_string('XI'))
        assert tableau.expectation(PauliOp.from_string('ZZ')) == -1
        assert tableau.expectation(PauliOp.from_string('XX')) == 1


class TestDenseState:
    def test_bell(self):
        state = DenseState(2).apply('H', [0]).apply('CX', [0, 1])
        assert np.allclose(state.amplitudes, BELL)
        assert state.expectation(PauliOp.from_string('YY')) == approx(-1)

    def test_qubit_order(self):
        state = DenseState(2).apply('X', [0])
        assert np.allclose(state.reduced([0]), np.diag([0, 1]))
        assert np.allclose(state.reduced([1]), np.diag([1, 0]))
        assert state.amplitudes[1] == approx(1)

    def test_control_is_most_significant(self):
        state = DenseState(2).apply('X', [1]).apply('CX', [1, 0])
        assert state.amplitudes[3] == approx(1)

    def test_reduced_and_fidelity(self):
        state = DenseState(2).apply('H', [0]).apply('CX', [0, 1])
        assert np.allclose(state.reduced([0]), np.eye(2) / 2)
        assert fidelity(state.reduced([0, 1]), BELL) == approx(1)

    def test_forced_measurement(self):
        state = DenseState(2).apply('H', [0]).apply('CX', [0, 1])
        assert state.measure_pauli(PauliOp.from_string('ZI'), forced=-1) == -1
        assert state.amplitudes[3] == approx(1)
        with raises(ForcedOutcomeImpossible):
            state.measure_pauli(PauliOp.from_string('IZ'), forced=1)

    def test_toffoli(self):
        state = DenseState(3).apply('X', [0]).apply('X', [1]).apply('CCX', [0, 1, 2])
        assert state.amplitudes[7] == approx(1)

    def test_norm_survives_long_random_circuits(self):
        rng = branch_rng(21)
        arity = {'H': 1, 'S': 1, 'T': 1, 'Y': 1, 'CX': 2, 'CZ': 2, 'CS': 2, 'CY': 2, 'CCX': 3, 'CCZ': 3}
        names = sorted(arity)
        state = DenseState(6)
        for _ in range(1000):
            name = names[int(rng.integers(len(names)))]
            state.apply(name, rng.choice(6, size=arity[name], replace=False).tolist())
        assert state.norm() == approx(1, abs=1e-9)

    def test_cap(self):
        with raises(DenseCapExceeded):
            DenseState(5, cap=4)

    def test_gate_names(self):
        assert np.allclose(gate_matrix('P', np.pi / 2), gate_matrix('S'))
        with raises(ValueError):
            gate_matrix('CP')
        with raises(ValueError):
            gate_matrix('SWAP')


class TestAgreement:
    @given(st.integers(1, 4), st.integers(0, 2 ** 16))
    @settings(max_examples=40, deadline=None)
    def test_random_circuits(self, n, seed):
        circuit = random_clifford_circuit(n, 12, branch_rng(seed))
        tableau, dense = run_both(n, circuit)
        for stabilizer in tableau.stabilizers():
            assert dense.expectation(stabilizer) == approx(1)

    @given(st.integers(2, 4), st.integers(0, 2 ** 16), st.data())
    @settings(max_examples=40, deadline=None)
    def test_measurements(self, n, seed, data):
        tableau, dense = run_both(n, random_clifford_circuit(n, 10, branch_rng(seed)))
        letters = data.draw(st.text('IXYZ', min_size=n, max_size=n).filter(lambda s: set(s) != {'I'}))
        observable = PauliOp.from_string(letters)
        before = tableau.expectation(observable)
        assert dense.expectation(observable) == approx(before, abs=1e-9)
        outcome, deterministic = tableau.measure(observable, forced=-1 if before == 0 else None)
        assert deterministic == (before != 0)
        assert dense.measure_pauli(observable, forced=outcome) == outcome
        for stabilizer in tableau.stabilizers():
            assert dense.expectation(stabilizer) == approx(1)


class TestRecordAndSeeds:
    def test_record(self):
        record = MeasurementRecord()
        record.add('m', 'Z', 1, True)
        record.add('m', 'Z', -1, False)
        assert 'm' in record
        assert record.outcome('m') == -1
        with raises(KeyError):
            record.outcome('missing')

    def test_branch_rng_is_deterministic(self):
        assert branch_rng(4, 2).integers(1000, size=5).tolist() == branch_rng(4, 2).integers(1000, size=5).tolist()

    def test_branch_rng_rejects_negative_branches(self):
        with raises(ValueError, match='non-negative'):
            branch_rng(4, -1)
        assert branch_rng(4, 2 ** 31).integers(2) in (0, 1)
