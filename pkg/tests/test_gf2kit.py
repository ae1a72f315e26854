import numpy as np
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from pytest import raises

from tests.mixins import TestCodesMixin
from utilities import gf2kit

HAMMING_CHECK = np.array([
    [1, 1, 0, 1, 1, 0, 0],
    [1, 0, 1, 1, 0, 1, 0],
    [0, 1, 1, 1, 0, 0, 1],
], dtype=np.uint8)

matrices = st.integers(1, 6).flatmap(
    lambda rows: st.integers(1, 8).flatmap(
        lambda cols: arrays(np.uint8, (rows, cols), elements=st.integers(0, 1))
    )
)


class TestRowEchelon:
    def test_identity_is_fixed(self):
        echelon = gf2kit.rref(np.eye(3, dtype=np.uint8))
        assert echelon.pivots == (0, 1, 2)
        assert echelon.rank == 3
        assert np.array_equal(echelon.matrix, np.eye(3, dtype=np.uint8))

    def test_zero_matrix(self):
        echelon = gf2kit.rref(np.zeros((2, 3), dtype=np.uint8))
        assert echelon.pivots == ()
        assert echelon.rank == 0

    def test_hamming_check_rank(self):
        assert gf2kit.rank(HAMMING_CHECK) == 3

    def test_rows_span_several_words(self):
        m = np.zeros((3, 130), dtype=np.uint8)
        m[0, [0, 64, 129]] = 1
        m[1, [64, 129]] = 1
        m[2, 0] = 1
        packed = gf2kit.pack_rows(m)
        assert packed.shape == (3, 3)
        assert int(packed[0, 1]) == 1
        assert int(packed[0, 2]) == 2
        assert np.array_equal(gf2kit.unpack_rows(packed, 130), m)
        echelon = gf2kit.rref(m)
        assert echelon.pivots == (0, 64)
        assert echelon.matrix[0].nonzero()[0].tolist() == [0]
        assert echelon.matrix[1].nonzero()[0].tolist() == [64, 129]
        assert not echelon.matrix[2].any()

    @given(matrices)
    @settings(max_examples=60, deadline=None)
    def test_rref_keeps_row_space(self, m):
        echelon = gf2kit.rref(m)
        assert gf2kit.rank(np.vstack([m, echelon.matrix])) == echelon.rank
        for r, pivot in enumerate(echelon.pivots):
            assert echelon.matrix[:, pivot].sum() == 1
            assert echelon.matrix[r, pivot] == 1


class TestNullspace:
    def test_identity_has_empty_nullspace(self):
        assert gf2kit.nullspace(np.eye(3, dtype=np.uint8)).shape == (0, 3)

    def test_parity_check(self):
        basis = gf2kit.nullspace([[1, 1]])
        assert np.array_equal(basis, np.array([[1, 1]], dtype=np.uint8))

    def test_hamming_generator_nullspace_is_check_space(self):
        generator = TestCodesMixin.hamming_generator()
        basis = gf2kit.nullspace(generator)
        assert basis.shape == (3, 7)
        assert not gf2kit.matmul(generator, basis.T).any()
        assert gf2kit.rank(np.vstack([basis, HAMMING_CHECK])) == 3

    @given(matrices)
    @settings(max_examples=60, deadline=None)
    def test_rank_nullity(self, m):
        basis = gf2kit.nullspace(m)
        assert basis.shape[0] + gf2kit.rank(m) == m.shape[1]
        assert not gf2kit.matmul(m, basis.T).any()
        if basis.shape[0]:
            assert gf2kit.rank(basis) == basis.shape[0]


class TestSolve:
    def test_identity(self):
        b = np.array([1, 0, 1], dtype=np.uint8)
        assert np.array_equal(gf2kit.solve(np.eye(3, dtype=np.uint8), b), b)

    def test_inconsistent(self):
        assert gf2kit.solve([[1, 1, 0]], [0, 0, 1]) is None

    def test_dimension_mismatch(self):
        with raises(gf2kit.DimensionMismatch):
            gf2kit.solve(np.eye(3, dtype=np.uint8), [1, 0])

    @given(matrices, st.data())
    @settings(max_examples=60, deadline=None)
    def test_solution_reproduces_combination(self, m, data):
        x = data.draw(arrays(np.uint8, (m.shape[0],), elements=st.integers(0, 1)))
        b = gf2kit.matmul(x, m)
        found = gf2kit.solve(m, b)
        assert found is not None
        assert np.array_equal(gf2kit.matmul(found, m), b)


class TestSmallHelpers:
    def test_weight_and_overlap(self):
        assert gf2kit.weight([1, 1, 1, 0, 0, 0, 0]) == 3
        assert gf2kit.overlap([1, 1, 0, 0], [0, 1, 1, 0]) == 1

    def test_overlap_needs_equal_lengths(self):
        with raises(gf2kit.DimensionMismatch):
            gf2kit.overlap([1, 0], [1, 0, 1])

    def test_inverse(self):
        m = np.array([[1, 1], [0, 1]], dtype=np.uint8)
        assert np.array_equal(gf2kit.matmul(m, gf2kit.inverse(m)), np.eye(2, dtype=np.uint8))
        assert gf2kit.inverse([[1, 1], [1, 1]]) is None

    def test_span_elements(self):
        words = gf2kit.span_elements([[1, 1, 0], [0, 1, 1]])
        assert {gf2kit.format_vector(w) for w in words} == {'000', '110', '011', '101'}
        assert gf2kit.span_elements(gf2kit.zeros(0, 4)).shape == (1, 4)

    def test_int_round_trip(self):
        assert gf2kit.to_int([1, 0, 1]) == 5
        assert gf2kit.format_vector(gf2kit.from_int(5, 4)) == '1010'

    def test_parse_matrix_reports_line(self):
        with raises(gf2kit.MalformedMatrix, match='line 3'):
            gf2kit.parse_matrix(['2 3', '101', '10'])

    def test_parse_empty_block(self):
        matrix, index = gf2kit.parse_matrix(['0 5', '1 2', '11'])
        assert matrix.shape == (0, 5)
        assert index == 1
