from functools import reduce

import numpy as np
from hypothesis import given, settings, strategies as st
from pytest import mark, raises

from tests.mixins import TestCodesMixin
from utilities.pauli import (
    InvalidGroup, InvalidPauli, LogicalObservable, PauliOp, StabilizerGroup, commutes, conjugate,
    conjugate_circuit, embed_logical, embed_pauli, min_weight_modulo, multiply
)

SINGLE = {
    'I': np.eye(2, dtype=complex),
    'X': np.array([[0, 1], [1, 0]], dtype=complex),
    'Y': np.array([[0, -1j], [1j, 0]], dtype=complex),
    'Z': np.diag([1, -1]).astype(complex),
}


def literal(n: int):
    return st.builds(lambda prefix, letters: prefix + letters,
                     st.sampled_from(['', '-', 'i', '-i']), st.text('IXYZ', min_size=n, max_size=n))


# Three literals on the same number of qubits
triples = st.integers(1, 4).flatmap(lambda n: st.tuples(literal(n), literal(n), literal(n)))


def dense(op: PauliOp) -> np.ndarray:
    """Matrix of op, qubit 0 leftmost in the Kronecker product."""
    return (1j ** op.phase) * reduce(np.kron, [SINGLE[letter] for letter in op.letters])


class TestPauliLiterals:
    def test_parse_sign_and_phase(self):
        op = PauliOp.from_string('-iXYZ')
        assert op.n == 3
        assert op.phase == 3
        assert op.letters == 'XYZ'
        assert str(PauliOp.from_string('+XZ')) == '+XZ'

    def test_bad_literal(self):
        with raises(InvalidPauli):
            PauliOp.from_string('XA')

    def test_weight_and_support(self):
        op = PauliOp.from_string('IXIZY')
        assert op.weight == 3
        assert op.support == [1, 3, 4]

    def test_logical_observable(self):
        obs = LogicalObservable.from_string('X:1100')
        assert obs.k == 4
        assert obs.as_pauli() == PauliOp.from_string('XXII')
        with raises(InvalidPauli):
            LogicalObservable.from_string('Z:0000')


class TestPauliAlgebra:
    @mark.parametrize('left, right, expected', [
        ('X', 'Z', '-iY'), ('Z', 'X', 'iY'), ('X', 'Y', 'iZ'), ('Y', 'X', '-iZ'),
        ('Y', 'Z', 'iX'), ('Z', 'Y', '-iX'), ('Y', 'Y', 'I'),
    ])
    def test_single_qubit_products(self, left, right, expected):
        assert multiply(PauliOp.from_string(left), PauliOp.from_string(right)) == PauliOp.from_string(expected)

    @given(triples)
    @settings(max_examples=80, deadline=None)
    def test_product_matches_matrices(self, literals):
        left, right = PauliOp.from_string(literals[0]), PauliOp.from_string(literals[1])
        assert np.allclose(dense(left * right), dense(left) @ dense(right))

    @given(triples)
    @settings(max_examples=80, deadline=None)
    def test_commutation_matches_matrices(self, literals):
        a, b = PauliOp.from_string(literals[0]), PauliOp.from_string(literals[1])
        left, right = dense(a), dense(b)
        assert commutes(a, b) == np.allclose(left @ right, right @ left)

    @given(triples)
    @settings(max_examples=60, deadline=None)
    def test_associativity(self, literals):
        p, q, r = (PauliOp.from_string(t) for t in literals)
        assert (p * q) * r == p * (q * r)


class TestConjugation:
    @mark.parametrize('before, gate, targets, after', [
        ('XI', 'H', [0], 'ZI'),
        ('ZI', 'H', [0], 'XI'),
        ('YI', 'H', [0], '-YI'),
        ('XI', 'S', [0], 'YI'),
        ('YI', 'S', [0], '-XI'),
        ('XI', 'SDG', [0], '-YI'),
        ('XI', 'CX', [0, 1], 'XX'),
        ('IZ', 'CX', [0, 1], 'ZZ'),
        ('YI', 'CX', [0, 1], 'YX'),
        ('XI', 'CZ', [0, 1], 'XZ'),
        ('ZI', 'X', [0], '-ZI'),
    ])
    def test_generator_table(self, before, gate, targets, after):
        assert conjugate(PauliOp.from_string(before), gate, targets) == PauliOp.from_string(after)

    def test_circuit_conjugation(self):
        circuit = [('H', [0]), ('CX', [0, 1])]
        assert conjugate_circuit(PauliOp.from_string('ZI'), circuit) == PauliOp.from_string('XX')

    def test_non_clifford_rejected(self):
        with raises(ValueError):
            conjugate(PauliOp.from_string('X'), 'T', [0])


class TestStabilizerGroup:
    def test_membership_with_sign(self):
        group = StabilizerGroup([PauliOp.from_string('XX'), PauliOp.from_string('ZZ')])
        assert group.membership(PauliOp.from_string('-YY')) == 1
        assert group.membership(PauliOp.from_string('YY')) == -1
        assert group.membership(PauliOp.from_string('XI')) == 0

    def test_anticommuting_generators(self):
        with raises(InvalidGroup):
            StabilizerGroup([PauliOp.from_string('XI'), PauliOp.from_string('ZI')])

    def test_dependent_generators(self):
        with raises(InvalidGroup):
            StabilizerGroup([PauliOp.from_string('XX'), PauliOp.from_string('ZZ'), PauliOp.from_string('YY')])


class TestCodePaulis(TestCodesMixin):
    def test_embedded_logicals_anticommute(self):
        x = embed_pauli(self.steane, PauliOp.from_string('X'))
        z = embed_pauli(self.steane, PauliOp.from_string('Z'))
        assert not commutes(x, z)
        for stabilizer in self.steane.stabilizers():
            assert commutes(x, stabilizer)
            assert commutes(z, stabilizer)

    def test_embedded_observables_on_hamming15(self):
        code = self.hamming15
        for j in range(code.k):
            u = np.zeros(code.k, dtype=np.uint8)
            u[j] = 1
            x = embed_logical(code, LogicalObservable('X', u))
            z = embed_logical(code, LogicalObservable('Z', u))
            assert not commutes(x, z)
            assert all(commutes(x, s) and commutes(z, s) for s in code.stabilizers())

    def test_transversal_cx_spreads_one_error_per_block(self):
        n = self.steane.n
        circuit = [('CX', [j, n + j]) for j in range(n)]
        spread = conjugate_circuit(PauliOp.single(2 * n, 'X', 2), circuit)
        assert min_weight_modulo(spread, self.steane, 2) == [1, 1]

    def test_stabilizer_error_has_weight_zero(self):
        row = self.steane.x_checks[0]
        assert min_weight_modulo(PauliOp.x_type(row), self.steane, 1) == [0]

    def test_intrablock_cx_spreads_to_weight_two(self):
        spread = conjugate(PauliOp.single(7, 'X', 0), 'CX', [0, 1])
        assert min_weight_modulo(spread, self.steane, 1) == [2]
