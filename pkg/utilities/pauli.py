"""
`pauli` module stores the symplectic algebra of Pauli products.

An n-qubit operator is i^phase · P_0 ⊗ ... ⊗ P_{n-1} with each P_j written as the
bit pair (x_j, z_j): I = (0, 0), X = (1, 0), Z = (0, 1), Y = (1, 1), and Y taken
Hermitian (Y = iXZ). Hermitian products therefore carry phase 0 or 2.
"""
import logging
import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, List, Sequence, Tuple

import numpy as np

from schemas.errors import (
    DependentGenerators, DimensionMismatch as DimensionMismatchMessage, InvalidObservable,
    InvalidPauli as InvalidPauliMessage, NonCommutingGenerators, NonCliffordGate
)
from utilities import gf2kit
from utilities.gf2kit import DimensionMismatch

if TYPE_CHECKING:
    from utilities.csscode import CssCode

logger = logging.getLogger(__name__)

PAULI_LETTERS = {(0, 0): 'I', (1, 0): 'X', (1, 1): 'Y', (0, 1): 'Z'}
LETTER_BITS = {letter: bits for bits, letter in PAULI_LETTERS.items()}
PHASE_PREFIX = {0: '+', 1: '+i', 2: '-', 3: '-i'}
LITERAL = re.compile(r'^([+-]?)(i?)([IXYZ]+)$')
CLIFFORD_GATES = {'H': 1, 'S': 1, 'SDG': 1, 'X': 1, 'Y': 1, 'Z': 1, 'CX': 2, 'CY': 2, 'CZ': 2}


class InvalidPauli(ValueError):
    pass


class InvalidGroup(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PauliOp:
    """
    `PauliOp` is an exact n-qubit Pauli product with its phase exponent of i.
    """
    n: int
    x: np.ndarray
    z: np.ndarray
    phase: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'x', gf2kit.as_vector(self.x) if self.n else np.zeros(0, np.uint8))
        object.__setattr__(self, 'z', gf2kit.as_vector(self.z) if self.n else np.zeros(0, np.uint8))
        object.__setattr__(self, 'phase', int(self.phase) % 4)
        if self.x.size != self.n or self.z.size != self.n:
            raise DimensionMismatch(
                DimensionMismatchMessage().error.format(self.n, (self.x.size, self.z.size))
            )

    @classmethod
    def identity(cls, n: int) -> 'PauliOp':
        return cls(n, np.zeros(n, np.uint8), np.zeros(n, np.uint8))

    @classmethod
    def single(cls, n: int, letter: str, qubit: int) -> 'PauliOp':
        x, z = np.zeros(n, np.uint8), np.zeros(n, np.uint8)
        x[qubit], z[qubit] = LETTER_BITS[letter]
        return cls(n, x, z)

    @classmethod
    def x_type(cls, mask) -> 'PauliOp':
        mask = gf2kit.as_vector(mask)
        return cls(mask.size, mask, np.zeros(mask.size, np.uint8))

    @classmethod
    def z_type(cls, mask) -> 'PauliOp':
        mask = gf2kit.as_vector(mask)
        return cls(mask.size, np.zeros(mask.size, np.uint8), mask)

    @classmethod
    def from_string(cls, literal: str) -> 'PauliOp':
        """
        `PauliOp.from_string` parses the literal syntax: an optional sign, an optional
        `i`, then one letter of IXYZ per qubit, e.g. "-XIZY" or "+iXZ".
        """
        match = LITERAL.match(literal.strip())
        if match is None:
            raise InvalidPauli(InvalidPauliMessage().error.format(literal))
        sign, imaginary, letters = match.groups()
        phase = (2 if sign == '-' else 0) + (1 if imaginary else 0)
        bits = np.array([LETTER_BITS[letter] for letter in letters], dtype=np.uint8)
        return cls(len(letters), bits[:, 0], bits[:, 1], phase)

    @property
    def hermitian(self) -> bool:
        return self.phase % 2 == 0

    @property
    def sign(self) -> int:
        """+1 or -1 for Hermitian operators."""
        return -1 if self.phase == 2 else 1

    @property
    def weight(self) -> int:
        return int(np.sum(self.x | self.z))

    @property
    def support(self) -> List[int]:
        return [int(q) for q in np.flatnonzero(self.x | self.z)]

    @property
    def letters(self) -> str:
        return ''.join(PAULI_LETTERS[(int(a), int(b))] for a, b in zip(self.x, self.z))

    def kinds(self) -> set:
        return {letter for letter in self.letters if letter != 'I'}

    def with_phase(self, phase: int) -> 'PauliOp':
        return PauliOp(self.n, self.x, self.z, phase)

    def unsigned(self) -> 'PauliOp':
        return PauliOp(self.n, self.x, self.z, 0)

    def symplectic(self) -> np.ndarray:
        return np.concatenate([self.x, self.z])

    def restrict(self, qubits: Sequence[int]) -> 'PauliOp':
        index = list(qubits)
        return PauliOp(len(index), self.x[index], self.z[index], 0)

    def placed(self, qubits: Sequence[int], total: int) -> 'PauliOp':
        """Copy of this operator acting on `qubits` of a `total`-qubit register."""
        x, z = np.zeros(total, np.uint8), np.zeros(total, np.uint8)
        x[list(qubits)] = self.x
        z[list(qubits)] = self.z
        return PauliOp(total, x, z, self.phase)

    def __mul__(self, other: 'PauliOp') -> 'PauliOp':
        return multiply(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliOp):
            return NotImplemented
        return (self.n == other.n and self.phase == other.phase
                and np.array_equal(self.x, other.x) and np.array_equal(self.z, other.z))

    def __hash__(self) -> int:
        return hash((self.n, self.phase, gf2kit.row_key(self.x), gf2kit.row_key(self.z)))

    def __str__(self) -> str:
        return f'{PHASE_PREFIX[self.phase]}{self.letters}'

    def __repr__(self) -> str:
        return f'PauliOp({self})'


def _check_sizes(a: PauliOp, b: PauliOp) -> None:
    if a.n != b.n:
        raise DimensionMismatch(DimensionMismatchMessage().error.format(a.n, b.n))


def product_exponent(x1, z1, x2, z2) -> np.ndarray:
    """
    Exponent of i picked up per qubit when P(x1, z1) multiplies P(x2, z2) from the left.
    """
    x1, z1, x2, z2 = (np.asarray(a, dtype=np.int64) for a in (x1, z1, x2, z2))
    return np.where(
        (x1 == 1) & (z1 == 1), z2 - x2,
        np.where(x1 == 1, z2 * (2 * x2 - 1), np.where(z1 == 1, x2 * (1 - 2 * z2), 0))
    )


def multiply(a: PauliOp, b: PauliOp) -> PauliOp:
    _check_sizes(a, b)
    exponent = int(np.sum(product_exponent(a.x, a.z, b.x, b.z)))
    return PauliOp(a.n, a.x ^ b.x, a.z ^ b.z, a.phase + b.phase + exponent)


def product(ops: Iterable[PauliOp], n: int) -> PauliOp:
    result = PauliOp.identity(n)
    for op in ops:
        result = multiply(result, op)
    return result


def commutes(a: PauliOp, b: PauliOp) -> bool:
    _check_sizes(a, b)
    return (int(np.sum(a.x & b.z)) + int(np.sum(a.z & b.x))) % 2 == 0


def tensor(ops: Sequence[PauliOp]) -> PauliOp:
    return PauliOp(
        sum(op.n for op in ops),
        np.concatenate([op.x for op in ops]) if ops else np.zeros(0, np.uint8),
        np.concatenate([op.z for op in ops]) if ops else np.zeros(0, np.uint8),
        sum(op.phase for op in ops)
    )


def conjugate_rows(x: np.ndarray, z: np.ndarray, r: np.ndarray, gate: str, targets: Sequence[int]) -> None:
    """
    `conjugate_rows` applies P -> U P U^† to every row of a (x | z | r) table in place.
    `r` is the sign bit per row. The update rules are the tableau rules of Aaronson
    and Gottesman, extended with S^†, CY and CZ by composition.
    """
    name = gate.upper()
    if name not in CLIFFORD_GATES:
        raise ValueError(NonCliffordGate().error.format(gate))
    if name == 'H':
        q = targets[0]
        r ^= x[:, q] & z[:, q]
        x[:, q], z[:, q] = z[:, q].copy(), x[:, q].copy()
    elif name == 'S':
        q = targets[0]
        r ^= x[:, q] & z[:, q]
        z[:, q] ^= x[:, q]
    elif name == 'SDG':
        q = targets[0]
        r ^= x[:, q] & (z[:, q] ^ 1)
        z[:, q] ^= x[:, q]
    elif name == 'X':
        r ^= z[:, targets[0]]
    elif name == 'Z':
        r ^= x[:, targets[0]]
    elif name == 'Y':
        r ^= x[:, targets[0]] ^ z[:, targets[0]]
    elif name == 'CX':
        c, t = targets
        r ^= x[:, c] & z[:, t] & (x[:, t] ^ z[:, c] ^ 1)
        x[:, t] ^= x[:, c]
        z[:, c] ^= z[:, t]
    elif name == 'CZ':
        a, b = targets
        conjugate_rows(x, z, r, 'H', [b])
        conjugate_rows(x, z, r, 'CX', [a, b])
        conjugate_rows(x, z, r, 'H', [b])
    elif name == 'CY':
        c, t = targets
        conjugate_rows(x, z, r, 'SDG', [t])
        conjugate_rows(x, z, r, 'CX', [c, t])
        conjugate_rows(x, z, r, 'S', [t])


def conjugate(op: PauliOp, gate: str, targets: Sequence[int]) -> PauliOp:
    """`conjugate` returns U op U^† for a Clifford generator U."""
    x, z = op.x.copy().reshape(1, -1), op.z.copy().reshape(1, -1)
    r = np.zeros(1, dtype=np.uint8)
    conjugate_rows(x, z, r, gate, targets)
    return PauliOp(op.n, x[0], z[0], op.phase + 2 * int(r[0]))


def conjugate_circuit(op: PauliOp, gates: Iterable[Tuple[str, Sequence[int]]]) -> PauliOp:
    for gate, targets in gates:
        op = conjugate(op, gate, targets)
    return op


@dataclass(frozen=True)
class LogicalObservable:
    """
    `LogicalObservable` is one of X_u, Y_u, Z_u for a nonzero k-bit word u.
    """
    kind: str
    u: np.ndarray = field(compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'u', gf2kit.as_vector(self.u))
        if self.kind not in ('X', 'Y', 'Z') or not self.u.any():
            raise InvalidPauli(InvalidObservable().error.format(f'{self.kind}:{gf2kit.format_vector(self.u)}'))

    @classmethod
    def from_string(cls, literal: str) -> 'LogicalObservable':
        try:
            kind, bits = literal.strip().split(':')
            return cls(kind.upper(), gf2kit.parse_vector(bits))
        except ValueError as e:
            raise InvalidPauli(InvalidObservable().error.format(literal)) from e

    @property
    def k(self) -> int:
        return int(self.u.size)

    def as_pauli(self) -> PauliOp:
        zero = np.zeros(self.k, np.uint8)
        return PauliOp(
            self.k,
            self.u if self.kind in ('X', 'Y') else zero,
            self.u if self.kind in ('Z', 'Y') else zero
        )

    def __str__(self) -> str:
        return f'{self.kind}:{gf2kit.format_vector(self.u)}'


@dataclass
class StabilizerGroup:
    """
    `StabilizerGroup` validates its generators on construction: Hermitian, pairwise
    commuting and symplectically independent, which also keeps -I out of the group.
    """
    generators: List[PauliOp]

    def __post_init__(self):
        for i, g in enumerate(self.generators):
            if not g.hermitian:
                raise InvalidGroup(InvalidPauliMessage().error.format(str(g)))
            for j in range(i):
                if not commutes(g, self.generators[j]):
                    raise InvalidGroup(NonCommutingGenerators().error.format(j, i))
        if self.generators and gf2kit.rank(self.matrix()) != len(self.generators):
            raise InvalidGroup(DependentGenerators().error)

    @property
    def n(self) -> int:
        return self.generators[0].n if self.generators else 0

    def matrix(self) -> np.ndarray:
        return np.array([g.symplectic() for g in self.generators], dtype=np.uint8)

    def membership(self, op: PauliOp) -> int:
        """+1 or -1 when ±op is in the group, 0 otherwise."""
        if not self.generators:
            return 1 if op.weight == 0 and op.hermitian else 0
        coefficients = gf2kit.solve(self.matrix(), op.symplectic())
        if coefficients is None:
            return 0
        element = product(
            (g for g, c in zip(self.generators, coefficients) if c), op.n
        )
        return 1 if element.phase == op.phase else -1


def embed_pauli(code: 'CssCode', op: PauliOp) -> PauliOp:
    """
    `embed_pauli` maps a Pauli on the k logical qubits of one block to a physical
    representative on its n qubits: X_j -> X on row j of D, Z_j -> Z on row j of the
    logical Z support, and Y_j -> i X_j Z_j.
    """
    if op.n != code.k:
        raise DimensionMismatch(DimensionMismatchMessage().error.format(op.n, code.k))
    result = PauliOp(code.n, np.zeros(code.n, np.uint8), np.zeros(code.n, np.uint8), op.phase)
    for j in range(code.k):
        factor = PauliOp.identity(code.n)
        if op.x[j]:
            factor = multiply(factor, code.logical_x[j])
        if op.z[j]:
            factor = multiply(factor, code.logical_z[j])
        if op.x[j] and op.z[j]:
            factor = factor.with_phase(factor.phase + 1)
        result = multiply(result, factor)
    return result


def embed_logical(code: 'CssCode', obs: LogicalObservable) -> PauliOp:
    """`embed_logical` returns the physical representative of X_u, Y_u or Z_u."""
    if obs.k != code.k:
        raise DimensionMismatch(DimensionMismatchMessage().error.format(obs.k, code.k))
    return embed_pauli(code, obs.as_pauli())


def min_weight_modulo(op: PauliOp, code: 'CssCode', blocks: int) -> List[int]:
    """
    `min_weight_modulo` returns, per block of n qubits, the least weight of the
    residual error over its coset of the code stabilizer.
    """
    x_elements = gf2kit.span_elements(code.x_checks)
    z_elements = gf2kit.span_elements(code.z_checks)
    weights = []
    for b in range(blocks):
        part = slice(b * code.n, (b + 1) * code.n)
        xs = x_elements ^ op.x[part]
        zs = z_elements ^ op.z[part]
        union = (xs[:, None, :] | zs[None, :, :]).sum(axis=-1)
        weights.append(int(union.min()))
    return weights
