from pytest import mark, raises

from tests.mixins import TestCodesMixin
from utilities.csscode import CssCode, SparseState, ZbarOutsideDual, build_from_cosets
from utilities.recovery import EncodedRegister
from utilities.transversal import (
    PreconditionFailed, TransversalGate, check_ccz_cat, check_cnot, check_cz, check_hadamard,
    check_phase_gates, check_s, check_transversal, walsh_hadamard
)


class TestTransversalGate:
    def test_kind_is_normalized(self):
        gate = TransversalGate('cp', 4)
        assert gate.kind == 'CP'
        assert gate.arity == 2

    @mark.parametrize('kind, w', [('P', None), ('CCP', 3), ('T', None)])
    def test_rejected(self, kind, w):
        with raises(ValueError):
            TransversalGate(kind, w)


class TestWalshHadamard:
    def test_single_qubit(self):
        assert walsh_hadamard(SparseState(1, {0: 0})) == SparseState(1, {0: 0, 1: 0})
        assert walsh_hadamard(SparseState(1, {1: 0})) == SparseState(1, {0: 0, 1: 8})

    def test_complex_phases_are_refused(self):
        with raises(ValueError):
            walsh_hadamard(SparseState(1, {0: 0, 1: 4}))


class TestSteaneGates(TestCodesMixin):
    def test_cnot(self):
        report = check_cnot(self.steane)
        assert report.legitimate
        assert report.logical_action == 'blockwise CX'
        assert report.checked == 4
        assert report.terms == 4 * 64
        assert report.witness is None

    def test_hadamard(self):
        report = check_hadamard(self.steane)
        assert report.legitimate
        assert report.logical_action == 'blockwise H'

    def test_cz(self):
        report = check_cz(self.steane)
        assert report.legitimate
        assert report.logical_action == 'blockwise CZ'

    def test_s_acts_as_s_cubed(self):
        report = check_s(self.steane)
        assert report.legitimate
        assert report.logical_action == 'S^3'
        assert report.details[0] == 'u=0 phase=i^0'

    def test_ccz_with_cat(self):
        report = check_ccz_cat(self.steane)
        assert report.legitimate
        assert report.checked == 8

    def test_phase_gate_w8_has_witness(self):
        report = check_phase_gates(self.steane, 8)
        assert not report.legitimate
        assert not report.combinatorial
        assert 'weight residue' in report.witness
        assert report.logical_action == 'not legitimate'


class TestOtherCodes(TestCodesMixin):
    def test_rm15_phase_family(self):
        report = check_phase_gates(self.rm15, 8)
        assert report.legitimate
        assert report.logical_action == 'P(7π/4)'
        assert report.checked == 2 + 4 + 8

    def test_rm15_w16_fails(self):
        report = check_transversal(self.rm15, TransversalGate('CCP', 16))
        assert report.gate == 'P'
        assert not report.legitimate

    def test_rm15_has_no_transversal_hadamard(self):
        report = check_hadamard(self.rm15)
        assert not report.legitimate
        assert not report.combinatorial
        assert report.witness == 'the Z stabilizers do not span C0'

    def test_rm15_cz_needs_no_symmetry(self):
        report = check_cz(self.rm15)
        assert report.combinatorial
        assert report.legitimate
        assert report.logical_action == 'blockwise CZ'

    def test_rm15_s(self):
        report = check_s(self.rm15)
        assert report.legitimate
        assert report.logical_action == 'S^3'

    def test_phase_gates_need_one_logical_qubit(self):
        with raises(PreconditionFailed):
            check_phase_gates(self.hamming15, 4)

    def test_sampled_cnot(self):
        report = check_cnot(self.hamming15, sample=10, seed=3)
        assert report.sampled
        assert report.checked == 10
        assert report.legitimate

    def test_cnot_on_256_sampled_pairs(self):
        report = check_cnot(self.hamming15, sample=256, seed=7)
        assert report.sampled
        assert report.checked == 256
        assert report.terms == 256 * 16 * 16
        assert report.legitimate

    def test_sample_is_seeded(self):
        first = check_cnot(self.hamming15, sample=5, seed=11)
        second = check_cnot(self.hamming15, sample=5, seed=11)
        assert first == second

    def test_unencoded_blocks(self):
        report = check_transversal(self.trivial3, TransversalGate('CX'))
        assert report.legitimate
        assert report.checked == 64


class TestCombinatorialEntry(TestCodesMixin):
    def test_z_checks_must_fix_every_term(self):
        code = CssCode('stray-z', self.steane.x_checks, self.steane.leaders, [[1, 0, 0, 0, 0, 0, 0]])
        report = check_cnot(code)
        assert report.simulated
        assert not report.combinatorial
        assert not report.legitimate
        assert report.witness.startswith('Z check row 0 meets')

    def test_logical_z_outside_the_dual(self):
        code = build_from_cosets('odd-leader', self.steane.x_checks, [[1, 0, 0, 0, 0, 0, 0]])
        assert not code.zbar_consistent
        report = check_cz(code)
        assert not report.combinatorial
        assert not report.legitimate
        assert report.witness == 'logical Z support of qubit 0 leaves the dual of C0'
        with raises(ZbarOutsideDual):
            EncodedRegister(code, 1)

    @mark.parametrize('name', ['steane', 'hamming15'])
    def test_overlap_conditions_hold(self, name):
        code = getattr(self, name)
        assert check_cnot(code, sample=4).combinatorial
        assert check_hadamard(code, sample=4).combinatorial
        assert check_ccz_cat(code, sample=4).combinatorial
