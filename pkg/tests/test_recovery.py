import numpy as np
from pytest import approx, mark, raises

from tests.mixins import TestCodesMixin, TestPlansMixin
from utilities import gf2kit
from utilities.logicsim import DenseState, ForcedOutcomeImpossible, Tableau, branch_rng
from utilities.pauli import InvalidPauli, LogicalObservable, PauliOp
from utilities.recovery import (
    AncillaSpec, CliffordObservable, EncodedRegister, InconsistentPlan, MalformedSpec, MergedMeasurementSpec,
    PlanParseError, ancilla_expansion, cat_measure, encode_zero, encoded_cat_measure, logical_agreement, merged_measure,
    merged_measure_logical, merged_report, parse_plan, prepare_ancilla, prepare_bit, prepare_logical_bell,
    prepare_state, prepare_verified_ancilla, starting_state_hint
)
from utilities.transversal import PreconditionFailed


def logical_value(register: EncodedRegister, literal: str, block: int = 0) -> int:
    return register.tableau.expectation(register.logical(PauliOp.from_string(literal), block))


class TestEncodedRegister(TestPlansMixin):
    def test_encode_zero(self):
        register = EncodedRegister(self.steane, 1)
        encode_zero(register, 0, branch_rng(1))
        assert logical_value(register, 'Z') == 1
        for stabilizer in self.steane.stabilizers():
            assert register.expectation(stabilizer, 0) == 1

    def test_prepare_plus(self):
        register = EncodedRegister(self.steane, 1)
        encode_zero(register, 0, branch_rng(2))
        prepare_bit(register, 0, 0, '+', branch_rng(3))
        assert logical_value(register, 'X') == 1

    def test_logical_agreement(self):
        register = EncodedRegister(self.steane, 1)
        encode_zero(register, 0, branch_rng(4))
        assert logical_agreement(register, 0, Tableau(1))
        assert not logical_agreement(register, 0, Tableau(1).apply('X', [0]))

    def test_verified_ancilla(self):
        register = EncodedRegister(self.steane, 1)
        spec = AncillaSpec(self.steane, [[1]])
        assert prepare_verified_ancilla(register, register.scratch, spec, branch_rng(5)) == 1
        assert register.expectation(PauliOp.x_type(self.steane.leaders[0]), register.scratch) == 1

    def test_ancilla_verification_catches_x_faults(self):
        register = EncodedRegister(self.steane, 1)
        spec = AncillaSpec(self.steane, [[1]])
        assert not prepare_ancilla(register, register.scratch, spec, branch_rng(6), fault=PauliOp.single(7, 'X', 0))
        assert prepare_ancilla(register, register.scratch, spec, branch_rng(6), fault=PauliOp.single(7, 'Z', 0))
        fault = PauliOp.single(7, 'X', 4)
        assert prepare_verified_ancilla(register, register.scratch, spec, branch_rng(7), fault=fault) == 2


class TestMergedMeasurement(TestPlansMixin):
    def encoded(self, code, seed):
        register = EncodedRegister(code, 1)
        encode_zero(register, 0, branch_rng(seed))
        return register

    @mark.parametrize('seed', [0, 1, 2])
    def test_logical_z_of_zero(self, seed):
        register = self.encoded(self.steane, seed)
        spec = MergedMeasurementSpec.parse(['Z:1'])
        outcome = merged_measure(register, 0, spec, branch_rng(seed, 1))
        assert outcome.eigenvalues == [1]
        assert outcome.corrections == []
        assert outcome.information_bits == 2 * self.steane.kappa + 1

    def test_logical_z_of_one(self):
        register = self.encoded(self.steane, 3)
        register.tableau.apply_pauli(register.logical(PauliOp.from_string('X'), 0))
        outcome = merged_measure(register, 0, MergedMeasurementSpec.parse(['Z:1']), branch_rng(3))
        assert outcome.eigenvalues == [-1]

    @mark.parametrize('qubit', [0, 2, 6])
    def test_data_error_is_corrected(self, qubit):
        register = self.encoded(self.steane, 7)
        register.apply_pauli(PauliOp.single(7, 'X', qubit), 0)
        spec = MergedMeasurementSpec.parse(['Z:1'])
        outcome = merged_measure(register, 0, spec, branch_rng(8))
        assert outcome.eigenvalues == [1]
        assert outcome.corrections == [f'X{qubit}']
        assert logical_agreement(register, 0, Tableau(1))
        report = merged_report(self.steane, spec, outcome, 3, agrees=True)
        assert report.corrections == [f'X{qubit}']
        assert report.syndromes['X'] == '000'

    def test_one_faulty_repetition_is_outvoted(self):
        register = self.encoded(self.steane, 15)
        qubit = int(np.flatnonzero(self.steane.leaders[0])[0])
        faults = {('Z', 1): PauliOp.single(7, 'Z', qubit)}
        outcome = merged_measure(register, 0, MergedMeasurementSpec.parse(['Z:1']), branch_rng(16),
                                 repetitions=3, ancilla_faults=faults)
        assert outcome.eigenvalues == [1]
        assert outcome.corrections == []
        assert gf2kit.format_vector(outcome.syndromes['Z']) == '000'
        assert [int(bits[0]) for _, bits in outcome.raw['Z']] == [0, 1, 0]
        assert outcome.raw['Z'][1][0].any()
        assert not outcome.raw['Z'][0][0].any()
        assert logical_agreement(register, 0, Tableau(1))

    def test_matches_logical_oracle(self):
        register = self.encoded(self.hamming15, 9)
        prepare_bit(register, 0, 0, '+', branch_rng(10))
        spec = MergedMeasurementSpec.parse(['X:1000000', 'Z:0100000'])
        physical = merged_measure(register, 0, spec, branch_rng(11))
        logical = Tableau(7).apply('H', [0])
        assert merged_measure_logical(logical, 0, 7, spec, branch_rng(12), forced=physical.eigenvalues) == \
            physical.eigenvalues
        assert physical.eigenvalues == [1, 1]
        assert logical_agreement(register, 0, logical)

    def test_logical_bell_pair(self):
        register = self.encoded(self.hamming15, 13)
        prepare_logical_bell(register, 0, 0, 1, branch_rng(14))
        assert logical_value(register, 'XXIIIII') == 1
        assert logical_value(register, 'ZZIIIII') == 1
        assert logical_value(register, 'IIZIIII') == 1

    def test_asymmetric_code_is_refused(self):
        register = EncodedRegister(self.rm15, 1)
        with raises(PreconditionFailed):
            merged_measure(register, 0, MergedMeasurementSpec.parse(['Z:1']), branch_rng(0))

    @mark.parametrize('literals, type_pair', [
        (['X:1', 'Z:1'], ('X', 'Z')),
        (['X:1', 'Y:1', 'Z:1'], ('X', 'Z')),
        (['Y:1'], ('X', 'Z')),
        (['Z:11', 'Z:11'], ('X', 'Z')),
    ])
    def test_malformed(self, literals, type_pair):
        with raises(MalformedSpec):
            MergedMeasurementSpec.parse(literals, type_pair)

    def test_ancilla_expansion(self):
        before, after = ancilla_expansion(self.steane, LogicalObservable.from_string('Z:1'))
        assert len(before) == 16
        assert len(after) == 8


class TestCliffordObservable:
    def test_parse_and_print(self):
        observable = CliffordObservable.parse('XIIIXIII*CX:5,6')
        assert str(observable) == '+XIIIXIII*CX:5,6'
        assert observable.kind() == 'X'
        assert not observable.is_pauli

    def test_gate_only_factor(self):
        observable = CliffordObservable.parse('CX:0,1', 3)
        assert observable.pauli.weight == 0
        assert observable.targets == (0, 1)

    def test_must_commute_with_gate(self):
        with raises(InvalidPauli):
            CliffordObservable.parse('XX*CX:0,1')

    def test_cat_measurement(self):
        observable = CliffordObservable.parse('ZZ*CZ:0,1')
        state = DenseState(3)
        assert cat_measure(state, observable, 2, branch_rng(0)) == 1
        state = DenseState(3).apply('X', [0]).apply('X', [1])
        assert cat_measure(state, observable, 2, branch_rng(0)) == -1
        assert state.amplitudes[3] == approx(1)

    def test_cat_measurement_forms(self):
        with raises(MalformedSpec):
            cat_measure(DenseState(3), CliffordObservable.parse('ZI*CX:0,1'), 2, branch_rng(0))
        with raises(MalformedSpec):
            cat_measure(DenseState(3), CliffordObservable.parse('ZZ*CZ:0,1'), 1, branch_rng(0))


class TestPreparationPlans(TestPlansMixin):
    def test_bell_plan(self):
        state, report = prepare_state(self.plans['bell'], branch_rng(0), forced={0: -1})
        assert report.verified
        assert report.eigenvalues == [1, 1]
        assert 'applied Q1' in report.trace[0]
        assert np.allclose(state.amplitudes, np.array([1, 0, 0, 1]) / np.sqrt(2))

    @mark.parametrize('seed', [0, 1, 2, 3])
    def test_xz_yy_plan(self, seed):
        _, report = prepare_state(self.plans['xz_yy'], branch_rng(seed))
        assert report.verified
        assert report.fidelity == approx(1)
        assert report.trace[0].startswith('M1 +XZ decomposed')

    @mark.parametrize('seed', [0, 1, 2])
    def test_toffoli_plan(self, seed):
        plan = self.plans['toffoli']
        assert plan.needs_cat
        state, report = prepare_state(plan, branch_rng(seed))
        assert report.verified
        assert state.m == 8
        assert sum('(cat)' in line for line in report.trace) == 1

    def test_toffoli_plan_on_steane(self):
        _, report = prepare_state(self.plans['toffoli'], branch_rng(4), code=self.steane)
        assert report.code == 'hamming7'
        assert report.verified

    def test_starting_state_hint(self):
        plan = self.plans['xz_yy']
        target = DenseState(2, amplitudes=plan.target_state)
        hint = starting_state_hint(plan, 1, target)
        assert plan.targets[0][0].expectation(hint) == approx(1)
        assert hint.norm() == approx(1)

    def test_plan_without_stabilizers(self):
        with raises(PlanParseError, match='no M lines'):
            parse_plan(['START ZERO 0'])

    def test_bad_directive_reports_line(self):
        with raises(PlanParseError, match='line 2'):
            parse_plan(['M XX Q ZI', 'M ZZ'])

    def test_flip_must_anticommute(self):
        with raises(InconsistentPlan):
            parse_plan(['M XX Q ZI', 'M ZZ Q ZI'])


class TestEncodedCatMeasurement(TestCodesMixin):
    @mark.parametrize('literal, seed', [('ZZ*CZ:0,1', 0), ('ZZ*CZ:0,1', 1), ('IX*CX:0,1', 2), ('ZI', 3)])
    def test_matches_logical_oracle(self, literal, seed):
        logical = DenseState(2).apply('H', [0]).apply('H', [1]).apply('T', [1])
        observable = CliffordObservable.parse(literal)
        outcome = encoded_cat_measure(self.steane, logical, observable, branch_rng(seed))
        assert outcome.votes == [outcome.eigenvalue] * 3
        oracle = DenseState(3)
        oracle.amplitudes[:4] = logical.amplitudes
        assert cat_measure(oracle, observable, 2, branch_rng(seed), forced=outcome.eigenvalue) == outcome.eigenvalue
        assert abs(np.vdot(oracle.amplitudes[:4], outcome.logical.amplitudes)) == approx(1)

    def test_cat_fault_in_one_repetition_is_outvoted(self):
        logical = DenseState(2).apply('X', [0]).apply('X', [1])
        faults = {1: PauliOp.single(7, 'Z', 3)}
        outcome = encoded_cat_measure(self.steane, logical, CliffordObservable.parse('ZZ*CZ:0,1'), branch_rng(5),
                                      cat_faults=faults)
        assert outcome.votes == [-1, 1, -1]
        assert outcome.eigenvalue == -1
        assert abs(outcome.logical.amplitudes[3]) == approx(1)
        assert outcome.terms == 2 * 8 ** 2

    def test_forced_outcome_must_be_possible(self):
        logical = DenseState(2).apply('X', [0]).apply('X', [1])
        with raises(ForcedOutcomeImpossible):
            encoded_cat_measure(self.steane, logical, CliffordObservable.parse('ZZ*CZ:0,1'), branch_rng(0), forced=1)

    def test_needs_one_logical_qubit_per_block(self):
        with raises(PreconditionFailed, match='7 logical qubits'):
            encoded_cat_measure(self.hamming15, DenseState(2), CliffordObservable.parse('ZZ*CZ:0,1'), branch_rng(0))

    def test_cat_faults_are_z_type(self):
        with raises(MalformedSpec):
            encoded_cat_measure(self.steane, DenseState(2), CliffordObservable.parse('ZZ*CZ:0,1'), branch_rng(0),
                                cat_faults={0: PauliOp.single(7, 'X', 0)})
