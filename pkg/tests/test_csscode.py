import numpy as np
from pytest import mark, raises

from tests.mixins import TestCodesMixin
from utilities import gf2kit
from utilities.csscode import (
    ClassicalCode, CodeError, DependentCosetLeaders, NonPositiveK, NotDualContaining, SingularGram,
    SparseState, build_css, build_from_cosets, code_summary, decode_single, encode_logical,
    encode_superposition, format_code, parse_code, pauli_partition, syndrome
)
from utilities.gf2kit import MalformedMatrix
from utilities.pauli import PauliOp


class TestCodeConstruction(TestCodesMixin):
    @mark.parametrize('name', ['steane', 'hamming15', 'rm15', 'trivial3'])
    def test_dimensions(self, name):
        code = getattr(self, name)
        expected = self.expected['codes'][name]
        assert (code.n, code.k, code.kappa) == (expected['n'], expected['k'], expected['kappa'])
        if 'kappa_z' in expected:
            assert code.kappa_z == expected['kappa_z']

    def test_steane_flags(self):
        summary = code_summary(self.steane)
        assert summary.dual_contained
        assert summary.symmetric
        assert summary.doubly_even
        assert summary.weights_mult4
        assert summary.ddt_identity
        assert summary.zbar_consistent
        assert summary.d == 3

    def test_rm15_is_asymmetric(self):
        code = self.rm15
        assert not code.symmetric
        assert code.doubly_even
        assert code.zbar_consistent
        assert gf2kit.format_vector(code.leaders[0]) == '1' * 15

    def test_logical_operators_pair_up(self):
        for code in (self.steane, self.hamming15):
            pairing = gf2kit.matmul(code.leaders, code.zbar.T)
            assert np.array_equal(pairing, gf2kit.identity(code.k))
            assert not gf2kit.matmul(code.x_checks, code.zbar.T).any()

    def test_negative_k(self):
        simplex = gf2kit.nullspace(self.hamming_generator())
        with raises(NonPositiveK):
            build_css(ClassicalCode(name='simplex7', generator=simplex))

    def test_not_dual_containing(self):
        with raises(NotDualContaining):
            build_css(ClassicalCode(name='broken', generator=[[1, 0, 0], [0, 1, 0]]))

    def test_dependent_coset_leaders(self):
        with raises(DependentCosetLeaders):
            build_from_cosets('dependent', [[1, 1, 1, 1]], [[1, 1, 1, 1]])

    def test_singular_gram(self):
        with raises(SingularGram):
            build_from_cosets('singular', gf2kit.zeros(0, 4), [[1, 1, 0, 0]])

    def test_dependent_generator(self):
        with raises(CodeError):
            ClassicalCode(name='twice', generator=[[1, 1, 0], [1, 1, 0]])


class TestCodeFiles(TestCodesMixin):
    @mark.parametrize('name', ['steane', 'rm15', 'trivial3'])
    def test_format_then_parse(self, name):
        code = getattr(self, name)
        again = parse_code(format_code(code).splitlines())
        assert again.name == code.name
        assert np.array_equal(again.x_checks, code.x_checks)
        assert np.array_equal(again.leaders, code.leaders)
        assert again.kappa_z == code.kappa_z
        if code.kappa_z:
            assert gf2kit.rank(gf2kit.stack(again.z_checks, code.z_checks)) == code.kappa_z

    def test_missing_header(self):
        with raises(MalformedMatrix):
            parse_code(['# nothing here', ''])

    def test_generator_shape_is_checked(self):
        with raises(MalformedMatrix, match='generator is not'):
            parse_code(['hamming7 7 4', '3 7', '1000110', '0100101', '0010011'])

    def test_coset_blocks_must_match_header(self):
        with raises(MalformedMatrix, match='blocks do not match'):
            parse_code(['css tiny 4 2', '1 4', '1111', '1 4', '1000'])


class TestCodewords(TestCodesMixin):
    def test_logical_states_are_disjoint_cosets(self):
        zero = encode_logical(self.steane, [0])
        one = encode_logical(self.steane, [1])
        assert len(zero) == len(one) == 8
        assert not zero.words() & one.words()
        assert zero.words() == set(self.steane.c0_ints)

    def test_plus_state_covers_both_cosets(self):
        plus = encode_superposition(self.steane, [[1]])
        assert len(plus) == 16

    def test_logical_x_moves_between_cosets(self):
        mask = gf2kit.to_int(self.steane.leaders[0])
        assert encode_logical(self.steane, [0]).apply_x(mask) == encode_logical(self.steane, [1])

    def test_relative_phase(self):
        state = SparseState.from_words(2, [0, 3])
        assert state.shifted(4).relative_phase(state) == 4
        assert state.apply_z(1).relative_phase(state) is None
        assert state.relative_phase(SparseState.from_words(2, [0, 1])) is None


class TestSyndromes(TestCodesMixin):
    @mark.parametrize('qubit', range(7))
    def test_single_x_errors_decode(self, qubit):
        error = PauliOp.single(7, 'X', qubit)
        x_part, z_part = syndrome(self.steane, error)
        assert not z_part.any()
        correction = decode_single(self.steane, 'X', x_part)
        assert np.array_equal(correction, error.x)

    def test_single_z_error(self):
        x_part, z_part = syndrome(self.steane, PauliOp.single(7, 'Z', 3))
        assert not x_part.any()
        assert np.flatnonzero(decode_single(self.steane, 'Z', z_part)).tolist() == [3]

    def test_stabilizer_has_trivial_syndrome(self):
        for stabilizer in self.steane.stabilizers():
            x_part, z_part = syndrome(self.steane, stabilizer)
            assert not x_part.any() and not z_part.any()

    def test_two_errors_on_rm15_are_undecodable(self):
        error = PauliOp.x_type([1, 1] + [0] * 13)
        x_part, _ = syndrome(self.rm15, error)
        assert decode_single(self.rm15, 'X', x_part) is None


class TestPartition(TestCodesMixin):
    def test_steane_counts(self):
        report = pauli_partition(self.steane)
        assert report.explicit
        assert report.model_dump(include=set(self.expected['partition']['steane'])) == \
            self.expected['partition']['steane']

    def test_trivial_code(self):
        report = pauli_partition(self.trivial3)
        assert report.counts == (1, 1, 8, 8, 1, 1)

    def test_rm15_counts(self):
        report = pauli_partition(self.rm15)
        assert report.explicit
        assert report.counts == (16, 1024, 2, 2, 1024, 16)

    def test_closed_form_above_limit(self):
        report = pauli_partition(self.hamming15, limit=10)
        assert not report.explicit
        assert report.counts == (16, 16, 128, 128, 16, 16)
