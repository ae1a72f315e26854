"""
`logicsim` module stores the exact simulators used across the toolkit:
1. `Tableau` is a stabilizer tableau with destabilizers (Aaronson-Gottesman) for
   Clifford circuits with Pauli measurements.
2. `DenseState` is a state vector over at most `DENSE_CAP` qubits for circuits that
   leave the Clifford group (Toffoli, controlled-S, P(φ)).
Both are single-owner and mutated in place; use `copy()` to branch.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from schemas.errors import (
    DenseCapExceeded as DenseCapExceededMessage, ForcedOutcomeImpossible as ForcedOutcomeImpossibleMessage,
    InvalidPauli as InvalidPauliMessage,
)
from utilities import gf2kit
from utilities.config import DENSE_CAP
from utilities.pauli import CLIFFORD_GATES, PauliOp, conjugate_rows, multiply, product_exponent

logger = logging.getLogger(__name__)

Outcome = int
TOLERANCE = 1e-12


class DenseCapExceeded(ValueError):
    pass


class ForcedOutcomeImpossible(ValueError):
    pass


def branch_rng(seed: int, branch: int = 0) -> np.random.Generator:
    """Deterministic sub-generator for (seed, branch); both must be non-negative."""
    if seed < 0 or branch < 0:
        raise ValueError(f'seed and branch must be non-negative, got ({seed}, {branch})')
    return np.random.default_rng([int(seed), int(branch)])


@dataclass
class TraceEvent:
    step: int
    op: str
    targets: List[str]
    outcome: Optional[int] = None

    def __str__(self) -> str:
        outcome = 'na' if self.outcome is None else f'{self.outcome:+d}'
        return f'step={self.step} op={self.op} targets=[{",".join(self.targets)}] outcome={outcome}'


@dataclass
class MeasurementRecord:
    """
    `MeasurementRecord` keeps (label, basis, outcome, deterministic) entries in the
    order they were produced.
    """
    entries: List[Tuple[str, str, int, bool]] = field(default_factory=list)

    def add(self, label: str, basis: str, outcome: int, deterministic: bool) -> None:
        self.entries.append((label, basis, outcome, deterministic))

    def outcome(self, label: str) -> int:
        for entry in reversed(self.entries):
            if entry[0] == label:
                return entry[2]
        raise KeyError(f'No measurement labelled "{label}"')

    def __contains__(self, label: str) -> bool:
        return any(entry[0] == label for entry in self.entries)


def _pick_outcome(rng: Optional[np.random.Generator], forced: Optional[int], label: str) -> int:
    if forced is not None:
        return 1 if forced > 0 else -1
    if rng is None:
        raise ValueError(f'A random generator is required to measure {label}')
    return 1 if rng.integers(2) == 0 else -1


class Tableau:
    """
    `Tableau` stores 2n rows of (x | z | r): rows 0..n-1 are destabilizers, rows
    n..2n-1 are stabilizers. A new tableau is |0...0>.
    """

    def __init__(self, n: int, debug: bool = False):
        self.n = n
        self.debug = debug
        self.x = np.zeros((2 * n, n), dtype=np.uint8)
        self.z = np.zeros((2 * n, n), dtype=np.uint8)
        self.r = np.zeros(2 * n, dtype=np.uint8)
        self.x[np.arange(n), np.arange(n)] = 1
        self.z[n + np.arange(n), np.arange(n)] = 1

    def copy(self) -> 'Tableau':
        other = Tableau.__new__(Tableau)
        other.n, other.debug = self.n, self.debug
        other.x, other.z, other.r = self.x.copy(), self.z.copy(), self.r.copy()
        return other

    def _check_targets(self, targets: Sequence[int]) -> None:
        if len(set(targets)) != len(targets):
            raise IndexError(f'Repeated qubit in {list(targets)}')
        for q in targets:
            if not 0 <= q < self.n:
                raise IndexError(f'Qubit {q} is out of range for {self.n} qubits')

    def apply(self, gate: str, targets: Sequence[int]) -> 'Tableau':
        targets = [int(q) for q in targets]
        self._check_targets(targets)
        if CLIFFORD_GATES.get(gate.upper()) != len(targets):
            raise ValueError(f'Gate {gate} does not act on {len(targets)} qubits')
        conjugate_rows(self.x, self.z, self.r, gate, targets)
        if self.debug:
            self.check_symplectic()
        return self

    def apply_pauli(self, op: PauliOp) -> 'Tableau':
        """Conjugation by a Pauli flips the sign of every row it anticommutes with."""
        self.r ^= ((self.x.astype(np.int64) @ op.z + self.z.astype(np.int64) @ op.x) % 2).astype(np.uint8)
        return self

    def check_symplectic(self) -> None:
        form = (self.x.astype(np.int64) @ self.z.T + self.z.astype(np.int64) @ self.x.T) % 2
        expected = np.zeros((2 * self.n, 2 * self.n), dtype=np.int64)
        expected[np.arange(self.n), self.n + np.arange(self.n)] = 1
        expected[self.n + np.arange(self.n), np.arange(self.n)] = 1
        if not np.array_equal(form, expected):
            raise ValueError('Tableau lost its symplectic structure')

    def row(self, index: int) -> PauliOp:
        return PauliOp(self.n, self.x[index], self.z[index], 2 * int(self.r[index]))

    def stabilizers(self) -> List[PauliOp]:
        return [self.row(self.n + i) for i in range(self.n)]

    def _rowsum(self, target: int, source: int) -> None:
        exponent = int(np.sum(product_exponent(self.x[target], self.z[target], self.x[source], self.z[source])))
        total = (2 * int(self.r[target]) + 2 * int(self.r[source]) + exponent) % 4
        self.r[target] = total // 2
        self.x[target] ^= self.x[source]
        self.z[target] ^= self.z[source]

    def _anticommuting(self, op: PauliOp) -> np.ndarray:
        return ((self.x.astype(np.int64) @ op.z + self.z.astype(np.int64) @ op.x) % 2).astype(bool)

    def _deterministic_sign(self, op: PauliOp, anti: np.ndarray) -> int:
        scratch = PauliOp.identity(self.n)
        for i in np.flatnonzero(anti[:self.n]):
            scratch = multiply(scratch, self.row(self.n + int(i)))
        # scratch carries the same letters as op, so only the signs differ
        return 1 if scratch.phase == op.phase else -1

    def expectation(self, op: PauliOp) -> int:
        """+1 or -1 when the outcome is deterministic, 0 when it is random."""
        if not op.hermitian:
            raise ValueError(InvalidPauliMessage().error.format(str(op)))
        anti = self._anticommuting(op)
        if anti[self.n:].any():
            return 0
        return self._deterministic_sign(op, anti)

    def measure(
            self, op: PauliOp, rng: Optional[np.random.Generator] = None, forced: Optional[int] = None
    ) -> Tuple[int, bool]:
        """
        `Tableau.measure` measures a Hermitian Pauli observable.
        It returns (outcome ±1, deterministic) and projects the state.
        It takes three parameters:
        1. `op` is the observable; its sign is honored.
        2. `rng` is the caller's seeded generator for random outcomes.
        3. `forced` selects the outcome of a random measurement; forcing the wrong
           value of a deterministic one raises `ForcedOutcomeImpossible`.
        """
        if not op.hermitian:
            raise ValueError(InvalidPauliMessage().error.format(str(op)))
        anti = self._anticommuting(op)
        stabilizer_hits = np.flatnonzero(anti[self.n:])
        if stabilizer_hits.size == 0:
            outcome = self._deterministic_sign(op, anti)
            if forced is not None and forced != outcome:
                raise ForcedOutcomeImpossible(ForcedOutcomeImpossibleMessage().error.format(forced, str(op)))
            logger.debug('measure %s -> %+d (deterministic)', op, outcome)
            return outcome, True
        pivot = self.n + int(stabilizer_hits[0])
        for i in np.flatnonzero(anti):
            if int(i) != pivot:
                self._rowsum(int(i), pivot)
        self.x[pivot - self.n], self.z[pivot - self.n] = self.x[pivot].copy(), self.z[pivot].copy()
        self.r[pivot - self.n] = self.r[pivot]
        outcome = _pick_outcome(rng, forced, str(op))
        self.x[pivot], self.z[pivot] = op.x.copy(), op.z.copy()
        self.r[pivot] = (0 if outcome == 1 else 1) ^ (1 if op.phase == 2 else 0)
        logger.debug('measure %s -> %+d (random)', op, outcome)
        return outcome, False

    def reset(self, qubit: int) -> 'Tableau':
        observable = PauliOp.single(self.n, 'Z', qubit)
        value = self.expectation(observable)
        if value == 0:
            self.measure(observable, forced=1)
        elif value == -1:
            self.apply('X', [qubit])
        return self

    def canonical(self) -> Tuple[str, ...]:
        """Stabilizer generators in reduced echelon form over the (x | z) columns."""
        rows = self.stabilizers()
        pivot_row = 0
        for column in range(2 * self.n):
            bits = [np.concatenate([op.x, op.z])[column] for op in rows]
            hit = next((i for i in range(pivot_row, len(rows)) if bits[i]), None)
            if hit is None:
                continue
            rows[pivot_row], rows[hit] = rows[hit], rows[pivot_row]
            for i in range(len(rows)):
                if i != pivot_row and np.concatenate([rows[i].x, rows[i].z])[column]:
                    rows[i] = multiply(rows[i], rows[pivot_row])
            pivot_row += 1
        return tuple(str(op) for op in rows)


def tableau_equal(a: Tableau, b: Tableau) -> bool:
    """Same stabilizer group, hence the same state up to global phase."""
    return a.n == b.n and a.canonical() == b.canonical()


def random_clifford_circuit(n: int, depth: int, rng: np.random.Generator) -> List[Tuple[str, List[int]]]:
    one_qubit, two_qubit = ('H', 'S', 'X', 'Z'), ('CX', 'CZ')
    circuit = []
    for _ in range(depth):
        if n > 1 and rng.integers(3) == 0:
            a, b = (int(q) for q in rng.choice(n, size=2, replace=False))
            circuit.append((two_qubit[int(rng.integers(2))], [a, b]))
        else:
            circuit.append((one_qubit[int(rng.integers(4))], [int(rng.integers(n))]))
    return circuit


SQRT_HALF = 1 / np.sqrt(2)


def _diagonal(*entries) -> np.ndarray:
    return np.diag(np.array(entries, dtype=complex))


def gate_matrix(gate: str, param: Optional[float] = None) -> np.ndarray:
    """
    Unitary of a named gate; for multi-qubit gates the first target is the most
    significant bit of the matrix index.
    """
    name = gate.upper()
    phase = np.exp(1j * param) if param is not None else None
    table = {
        'H': SQRT_HALF * np.array([[1, 1], [1, -1]], dtype=complex),
        'S': _diagonal(1, 1j),
        'SDG': _diagonal(1, -1j),
        'T': _diagonal(1, np.exp(1j * np.pi / 4)),
        'X': np.array([[0, 1], [1, 0]], dtype=complex),
        'Y': np.array([[0, -1j], [1j, 0]], dtype=complex),
        'Z': _diagonal(1, -1),
        'CX': np.eye(4, dtype=complex)[[0, 1, 3, 2]],
        'CZ': _diagonal(1, 1, 1, -1),
        'CS': _diagonal(1, 1, 1, 1j),
        'CCX': np.eye(8, dtype=complex)[[0, 1, 2, 3, 4, 5, 7, 6]],
        'CCZ': _diagonal(1, 1, 1, 1, 1, 1, 1, -1),
    }
    if name == 'CY':
        matrix = np.eye(4, dtype=complex)
        matrix[2:, 2:] = table['Y']
        return matrix
    if name in ('P', 'CP', 'CCP'):
        if phase is None:
            raise ValueError(f'Gate {gate} needs an angle')
        size = {'P': 2, 'CP': 4, 'CCP': 8}[name]
        return _diagonal(*([1] * (size - 1) + [phase]))
    try:
        return table[name]
    except KeyError as e:
        raise ValueError(f'No such dense gate like "{gate}"') from e


class DenseState:
    """
    `DenseState` is a normalized state vector; qubit j is bit j of the amplitude index.
    """

    def __init__(self, m: int, cap: int = DENSE_CAP, amplitudes: Optional[np.ndarray] = None):
        if m > cap:
            raise DenseCapExceeded(DenseCapExceededMessage().error.format(cap, m))
        self.m = m
        self.cap = cap
        if amplitudes is None:
            amplitudes = np.zeros(2 ** m, dtype=complex)
            amplitudes[0] = 1
        self.amplitudes = np.asarray(amplitudes, dtype=complex)

    @classmethod
    def basis(cls, m: int, index: int, cap: int = DENSE_CAP) -> 'DenseState':
        state = cls(m, cap)
        state.amplitudes[:] = 0
        state.amplitudes[index] = 1
        return state

    def copy(self) -> 'DenseState':
        return DenseState(self.m, self.cap, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def _normalize(self) -> None:
        self.amplitudes /= np.linalg.norm(self.amplitudes)

    def apply_matrix(self, matrix: np.ndarray, qubits: Sequence[int]) -> 'DenseState':
        qubits = [int(q) for q in qubits]
        if len(set(qubits)) != len(qubits) or any(not 0 <= q < self.m for q in qubits):
            raise IndexError(f'Bad targets {qubits} for {self.m} qubits')
        size = len(qubits)
        tensor = self.amplitudes.reshape((2,) * self.m)
        axes = [self.m - 1 - q for q in qubits]
        gate = matrix.reshape((2,) * (2 * size))
        moved = np.tensordot(gate, tensor, axes=(list(range(size, 2 * size)), axes))
        self.amplitudes = np.moveaxis(moved, list(range(size)), axes).reshape(-1)
        return self

    def apply(self, gate: str, targets: Sequence[int], param: Optional[float] = None) -> 'DenseState':
        return self.apply_matrix(gate_matrix(gate, param), targets)

    def pauli_image(self, op: PauliOp, amplitudes: Optional[np.ndarray] = None) -> np.ndarray:
        """P|ψ> with P = i^(phase + |x&z|) X^x Z^z."""
        if op.n != self.m:
            raise ValueError(f'Observable acts on {op.n} qubits, state has {self.m}')
        source = self.amplitudes if amplitudes is None else amplitudes
        index = np.arange(2 ** self.m)
        parity = np.zeros(index.size, dtype=np.int64)
        for j in np.flatnonzero(op.z):
            parity ^= (index >> int(j)) & 1
        factor = 1j ** ((op.phase + int(np.sum(op.x & op.z))) % 4)
        image = np.zeros_like(source)
        image[index ^ gf2kit.to_int(op.x)] = factor * np.where(parity, -1, 1) * source
        return image

    def apply_pauli(self, op: PauliOp) -> 'DenseState':
        self.amplitudes = self.pauli_image(op)
        return self

    def expectation(self, op: PauliOp) -> float:
        return float(np.real(np.vdot(self.amplitudes, self.pauli_image(op))))

    def measure_observable(
            self, apply_fn: Callable[[np.ndarray], np.ndarray], rng: Optional[np.random.Generator] = None,
            forced: Optional[int] = None, label: str = 'observable'
    ) -> int:
        """
        `DenseState.measure_observable` measures a Hermitian unitary O given as a
        function returning O|ψ>; the state is projected with (|ψ> ± O|ψ>) / 2.
        """
        image = apply_fn(self.amplitudes.copy())
        plus = float(np.clip((1 + np.real(np.vdot(self.amplitudes, image))) / 2, 0, 1))
        if forced is not None:
            outcome = 1 if forced > 0 else -1
        elif rng is None:
            raise ValueError(f'A random generator is required to measure {label}')
        else:
            outcome = 1 if rng.random() < plus else -1
        probability = plus if outcome == 1 else 1 - plus
        if probability < TOLERANCE:
            raise ForcedOutcomeImpossible(ForcedOutcomeImpossibleMessage().error.format(outcome, label))
        self.amplitudes = (self.amplitudes + outcome * image) / 2
        self._normalize()
        logger.debug('dense measure %s -> %+d (p=%.3f)', label, outcome, probability)
        return outcome

    def measure_pauli(self, op: PauliOp, rng: Optional[np.random.Generator] = None,
                      forced: Optional[int] = None) -> int:
        if not op.hermitian:
            raise ValueError(InvalidPauliMessage().error.format(str(op)))
        return self.measure_observable(lambda amps: self.pauli_image(op, amps), rng, forced, str(op))

    def reset(self, qubit: int, rng: Optional[np.random.Generator] = None) -> 'DenseState':
        """Measure Z on `qubit` and flip it back to |0> on -1."""
        mask = (np.arange(2 ** self.m) >> qubit) & 1
        one = float(np.sum(np.abs(self.amplitudes[mask == 1]) ** 2))
        if one < TOLERANCE:
            return self
        if one > 1 - TOLERANCE:
            return self.apply('X', [qubit])
        outcome = self.measure_pauli(PauliOp.single(self.m, 'Z', qubit), rng)
        if outcome == -1:
            self.apply('X', [qubit])
        return self

    def reduced(self, qubits: Sequence[int]) -> np.ndarray:
        """Density matrix of `qubits`; bit i of its index is qubits[i]."""
        keep = [self.m - 1 - q for q in reversed(list(qubits))]
        tensor = np.moveaxis(self.amplitudes.reshape((2,) * self.m), keep, list(range(len(keep))))
        flat = tensor.reshape(2 ** len(keep), -1)
        return flat @ flat.conj().T

    def overlap(self, other: 'DenseState') -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def fidelity(rho: np.ndarray, target: Union[np.ndarray, DenseState]) -> float:
    """<φ|ρ|φ> for a pure target state."""
    vector = target.amplitudes if isinstance(target, DenseState) else np.asarray(target, dtype=complex)
    return float(np.real(np.vdot(vector, rho @ vector)))
