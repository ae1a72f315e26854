"""
`recovery` module stores recovery operations merged with logical measurements,
ancilla preparation with verification, and stabilizer-based state preparation.

Physical-level protocols run on an `EncodedRegister`: one tableau holding the data
blocks plus one scratch block that carries the ancillas. Preparation plans run at
the logical level on a `DenseState`.
"""
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from schemas.errors import (
    ForcedOutcomeImpossible as ForcedOutcomeImpossibleMessage, MalformedSpec as MalformedSpecMessage,
    ParseError as ParseErrorMessage, PreconditionFailed as PreconditionFailedMessage,
)
from schemas.preparations import MergedMeasurementReport, PreparationReport
from utilities import gf2kit
from utilities.config import REPETITIONS, RETRY_LIMIT, TYPE_PAIR
from utilities.csscode import CssCode, SparseState, decode_single, encode_superposition
from utilities.logicsim import DenseState, ForcedOutcomeImpossible, Tableau
from utilities.pauli import (
    InvalidPauli, LogicalObservable, PauliOp, commutes, conjugate, embed_pauli
)
from utilities.transversal import PreconditionFailed, check_ccz_cat, check_cnot, walsh_hadamard

logger = logging.getLogger(__name__)

CONTROLLED = {'X': 'CX', 'Y': 'CY', 'Z': 'CZ'}
TOLERANCE = 1e-9


class MalformedSpec(ValueError):
    pass


class PlanParseError(ValueError):
    pass


class InconsistentPlan(ValueError):
    pass


class AncillaRejected(ValueError):
    pass


def _majority(votes: Sequence[np.ndarray]) -> np.ndarray:
    stacked = np.array(votes, dtype=np.int64)
    return (2 * stacked.sum(axis=0) > len(votes)).astype(np.uint8)


@dataclass
class EncodedRegister:
    """
    `EncodedRegister` is a physical tableau over (blocks + 1) code blocks; the last
    block is scratch space for ancillas.
    """
    code: CssCode
    blocks: int
    debug: bool = False
    tableau: Tableau = field(init=False)

    def __post_init__(self):
        self.code.require_zbar_consistent()
        self.tableau = Tableau((self.blocks + 1) * self.code.n, self.debug)

    @property
    def scratch(self) -> int:
        return self.blocks

    @property
    def size(self) -> int:
        return (self.blocks + 1) * self.code.n

    def qubits(self, block: int) -> List[int]:
        return list(range(block * self.code.n, (block + 1) * self.code.n))

    def place(self, op: PauliOp, block: int) -> PauliOp:
        return op.placed(self.qubits(block), self.size)

    def logical(self, op: PauliOp, block: int) -> PauliOp:
        """Physical representative of a k-qubit logical Pauli on `block`."""
        return self.place(embed_pauli(self.code, op), block)

    def measure(self, op: PauliOp, block: int, rng, forced: Optional[int] = None) -> int:
        outcome, _ = self.tableau.measure(self.place(op, block), rng, forced)
        return outcome

    def expectation(self, op: PauliOp, block: int) -> int:
        return self.tableau.expectation(self.place(op, block))

    def apply_pauli(self, op: PauliOp, block: int) -> None:
        self.tableau.apply_pauli(self.place(op, block))

    def transversal(self, gate: str, blocks: Sequence[int]) -> None:
        for j in range(self.code.n):
            self.tableau.apply(gate, [b * self.code.n + j for b in blocks])

    def reset_block(self, block: int) -> None:
        for q in self.qubits(block):
            self.tableau.reset(q)

    def copy(self) -> 'EncodedRegister':
        other = EncodedRegister.__new__(EncodedRegister)
        other.code, other.blocks, other.debug = self.code, self.blocks, self.debug
        other.tableau = self.tableau.copy()
        return other


def _fix_outcome(register: EncodedRegister, rows: np.ndarray, index: int, block: int) -> None:
    """Apply a Z-type operator anticommuting with rows[index] only."""
    target = np.zeros(rows.shape[0], dtype=np.uint8)
    target[index] = 1
    z = gf2kit.solve(rows.T, target)
    register.apply_pauli(PauliOp.z_type(z), block)


def encode_zero(register: EncodedRegister, block: int, rng) -> None:
    """
    `encode_zero` function resets `block` and projects it onto |0...0>_L by measuring
    the X-type stabilizers and fixing -1 outcomes with Z-type operators.
    """
    register.reset_block(block)
    rows = register.code.x_checks
    for index, row in enumerate(rows):
        if register.measure(PauliOp.x_type(row), block, rng) == -1:
            _fix_outcome(register, rows, index, block)


def prepare_bit(register: EncodedRegister, block: int, bit: int, state: str, rng) -> None:
    """
    `prepare_bit` function sets logical qubit `bit` of `block` to |0> or |+> and leaves
    the other logical qubits alone.
    """
    k = register.code.k
    if state == '0':
        measured, fix = PauliOp.single(k, 'Z', bit), PauliOp.single(k, 'X', bit)
    elif state == '+':
        measured, fix = PauliOp.single(k, 'X', bit), PauliOp.single(k, 'Z', bit)
    else:
        raise ValueError(f'No such bit preparation like "{state}"')
    if register.tableau.measure(register.logical(measured, block), rng)[0] == -1:
        register.tableau.apply_pauli(register.logical(fix, block))


@dataclass
class AncillaSpec:
    """
    `AncillaSpec` describes the ancilla sum over u in span(rows) of |u>_L.
    """
    code: CssCode
    span: np.ndarray

    def __post_init__(self):
        self.span = gf2kit.as_matrix(self.span, cols=self.code.k)
        if self.span.shape[0] and gf2kit.rank(self.span) != self.span.shape[0]:
            raise MalformedSpec(MalformedSpecMessage().error.format('ancilla span vectors are dependent'))

    def x_rows(self) -> np.ndarray:
        """Basis of the words of the ancilla: C0 plus the span of uD."""
        shifts = gf2kit.matmul(self.span, self.code.leaders) if self.span.shape[0] else None
        return gf2kit.stack(self.code.x_checks, *([] if shifts is None else [shifts]), cols=self.code.n)

    def z_rows(self) -> np.ndarray:
        return gf2kit.nullspace(self.x_rows())

    def sparse(self) -> SparseState:
        return encode_superposition(self.code, self.span)


def prepare_ancilla(register: EncodedRegister, block: int, spec: AncillaSpec, rng,
                    fault: Optional[PauliOp] = None) -> bool:
    """
    `prepare_ancilla` function makes one attempt at the ancilla of `spec` on `block`.
    It returns whether the Z-only verification accepted it.
    It takes five parameters:
    1. `register` is the physical register.
    2. `block` is where the ancilla is built, usually the scratch block.
    3. `spec` names the span of logical words.
    4. `rng` draws the random measurement outcomes.
    5. `fault` is an optional n-qubit Pauli applied just before verification.
    """
    register.reset_block(block)
    rows = spec.x_rows()
    for index, row in enumerate(rows):
        if register.measure(PauliOp.x_type(row), block, rng) == -1:
            _fix_outcome(register, rows, index, block)
    if fault is not None:
        register.apply_pauli(fault, block)
    for row in spec.z_rows():
        if register.measure(PauliOp.z_type(row), block, rng) == -1:
            logger.info('ancilla rejected by check %s', gf2kit.format_vector(row))
            return False
    return True


def prepare_verified_ancilla(register: EncodedRegister, block: int, spec: AncillaSpec, rng,
                             retry_limit: int = RETRY_LIMIT, fault: Optional[PauliOp] = None) -> int:
    """Retries `prepare_ancilla` until accepted; the fault only hits the first attempt. Returns the attempts."""
    for attempt in range(1, retry_limit + 1):
        if prepare_ancilla(register, block, spec, rng, fault if attempt == 1 else None):
            return attempt
        logger.warning('ancilla attempt %d of %d rejected', attempt, retry_limit)
    raise AncillaRejected(f'Ancilla rejected {retry_limit} times in a row')


@dataclass
class MergedMeasurementSpec:
    """
    `MergedMeasurementSpec` lists commuting logical observables of one block, using at
    most the two kinds of its type pair.
    """
    observables: List[LogicalObservable]
    type_pair: Tuple[str, str] = TYPE_PAIR

    def __post_init__(self):
        self.type_pair = tuple(sorted(self.type_pair))
        kinds = {obs.kind for obs in self.observables}
        if len(kinds) > 2:
            raise MalformedSpec(MalformedSpecMessage().error.format('all three kinds of observable are present'))
        if kinds - set(self.type_pair):
            raise MalformedSpec(MalformedSpecMessage().error.format(
                f'kinds {sorted(kinds)} do not fit the type pair {"".join(self.type_pair)}'
            ))
        for i, a in enumerate(self.observables):
            for b in self.observables[:i]:
                if not commutes(a.as_pauli(), b.as_pauli()):
                    raise MalformedSpec(MalformedSpecMessage().error.format(f'{a} and {b} anticommute'))
        for kind in kinds:
            rows = [obs.u for obs in self.observables if obs.kind == kind]
            if gf2kit.rank(np.array(rows)) != len(rows):
                raise MalformedSpec(MalformedSpecMessage().error.format(f'{kind} observables are dependent'))

    @classmethod
    def parse(cls, literals: Sequence[str], type_pair: Tuple[str, str] = TYPE_PAIR) -> 'MergedMeasurementSpec':
        return cls([LogicalObservable.from_string(text) for text in literals], type_pair)


@dataclass
class MergedOutcome:
    eigenvalues: List[int]
    syndromes: Dict[str, np.ndarray]
    corrections: List[str]
    raw: Dict[str, List[Tuple[np.ndarray, np.ndarray]]]
    attempts: int
    information_bits: int


def _ancilla_row(code: CssCode, obs: LogicalObservable) -> np.ndarray:
    """Logical word whose coset shift gives the support of the physical observable."""
    if obs.kind == 'Z':
        return gf2kit.matmul(obs.u.reshape(1, -1), gf2kit.inverse(code.gram))[0]
    return obs.u


def _support(code: CssCode, obs: LogicalObservable) -> np.ndarray:
    return gf2kit.matmul(_ancilla_row(code, obs).reshape(1, -1), code.leaders)[0]


def _y_sign(code: CssCode, obs: LogicalObservable) -> int:
    """Physical Y on uD equals i^(|uD| - |u|) times the logical Y_u."""
    excess = (gf2kit.weight(_support(code, obs)) - gf2kit.weight(obs.u)) % 4
    return -1 if excess == 2 else 1


def merged_measure(register: EncodedRegister, block: int, spec: MergedMeasurementSpec, rng,
                   repetitions: int = REPETITIONS, retry_limit: int = RETRY_LIMIT,
                   ancilla_faults: Optional[Dict[Tuple[str, int], PauliOp]] = None) -> MergedOutcome:
    """
    `merged_measure` function runs one recovery of `block` that also measures the
    logical observables of `spec`.
    For each kind K of the type pair an ancilla over C0 + span(u'D) is prepared on the
    scratch block, controlled-K is applied transversally from ancilla to data and the
    ancilla is read out in the X basis as y. The syndrome is G0 y and the eigenvalue bit
    of each observable is (u'D) y. The extraction is repeated `repetitions` times and
    every bit is decided by majority; the decoded single-qubit error is then corrected
    and the eigenvalue bits adjusted for it.
    `ancilla_faults` maps (kind, repetition) to an n-qubit Pauli applied to the
    accepted ancilla, for fault-injection tests.
    """
    code = register.code
    if not code.symmetric:
        raise PreconditionFailed(PreconditionFailedMessage().error.format(
            'merged measurement', 'the physical recovery needs a symmetric code'))
    if 'Y' in spec.type_pair and not (code.doubly_even and code.ddt_identity):
        raise PreconditionFailed(PreconditionFailedMessage().error.format(
            'Y-type merged measurement', 'the code must be doubly even with D D^T = I'))
    faults = ancilla_faults or {}
    syndromes: Dict[str, np.ndarray] = {}
    eigen_bits = np.zeros(len(spec.observables), dtype=np.uint8)
    raw: Dict[str, List[Tuple[np.ndarray, np.ndarray]]] = {}
    attempts = 0
    information = 0
    for kind in spec.type_pair:
        members = [i for i, obs in enumerate(spec.observables) if obs.kind == kind]
        ancilla = AncillaSpec(code, [_ancilla_row(code, spec.observables[i]) for i in members])
        supports = np.array([_support(code, spec.observables[i]) for i in members], dtype=np.uint8).reshape(-1, code.n)
        raw[kind] = []
        for repetition in range(repetitions):
            attempts += prepare_verified_ancilla(register, register.scratch, ancilla, rng, retry_limit)
            if (kind, repetition) in faults:
                register.apply_pauli(faults[(kind, repetition)], register.scratch)
            register.transversal(CONTROLLED[kind], [register.scratch, block])
            y = np.array([
                1 if register.tableau.measure(PauliOp.single(register.size, 'X', q), rng)[0] == -1 else 0
                for q in register.qubits(register.scratch)
            ], dtype=np.uint8)
            raw[kind].append((gf2kit.matmul(code.x_checks, y), gf2kit.matmul(supports, y)))
        syndromes[kind] = _majority([s for s, _ in raw[kind]])
        if members:
            eigen_bits[members] = _majority([e for _, e in raw[kind]])
        information += code.kappa + len(members)
        logger.debug('kind %s syndrome %s', kind, gf2kit.format_vector(syndromes[kind]))
    x_syndrome = syndromes['Z'] if 'Z' in syndromes else syndromes['Y'] ^ syndromes['X']
    z_syndrome = syndromes['X'] if 'X' in syndromes else syndromes['Y'] ^ syndromes['Z']
    corrections = []
    errors = {}
    for error_kind, bits in (('X', x_syndrome), ('Z', z_syndrome)):
        found = decode_single(code, error_kind, bits)
        errors[error_kind] = found if found is not None else np.zeros(code.n, np.uint8)
        if found is not None and found.any():
            fix = PauliOp.x_type(found) if error_kind == 'X' else PauliOp.z_type(found)
            register.apply_pauli(fix, block)
            corrections.append(f'{error_kind}{int(np.flatnonzero(found)[0])}')
    eigenvalues = []
    for index, obs in enumerate(spec.observables):
        seen = {'Z': errors['X'], 'X': errors['Z'], 'Y': errors['X'] ^ errors['Z']}[obs.kind]
        bit = int(eigen_bits[index]) ^ (int(np.sum(_support(code, obs) & seen)) % 2)
        value = -1 if bit else 1
        eigenvalues.append(value * (_y_sign(code, obs) if obs.kind == 'Y' else 1))
    logger.info('merged measurement %s -> %s', [str(o) for o in spec.observables], eigenvalues)
    return MergedOutcome(eigenvalues, syndromes, corrections, raw, attempts, information)


def merged_measure_logical(tableau: Tableau, offset: int, k: int, spec: MergedMeasurementSpec, rng,
                           forced: Optional[Sequence[int]] = None) -> List[int]:
    """Logical-level oracle: measure each observable on qubits offset..offset+k-1."""
    outcomes = []
    for index, obs in enumerate(spec.observables):
        op = obs.as_pauli().placed(range(offset, offset + k), tableau.n)
        outcome, _ = tableau.measure(op, rng, None if forced is None else forced[index])
        outcomes.append(outcome)
    return outcomes


def logical_agreement(register: EncodedRegister, block: int, logical: Tableau) -> bool:
    """True when every stabilizer of the k-qubit logical tableau holds +1 on the physical block."""
    return all(register.tableau.expectation(register.logical(op, block)) == 1
               for op in logical.stabilizers())


def prepare_logical_bell(register: EncodedRegister, block: int, i: int, j: int, rng,
                         repetitions: int = REPETITIONS, retry_limit: int = RETRY_LIMIT) -> Tuple[int, int]:
    """
    `prepare_logical_bell` function puts logical qubits i and j of `block` into
    |00> + |11> with one merged measurement of {X_ij, Z_ij} and Pauli corrections.
    """
    k = register.code.k
    u = np.zeros(k, dtype=np.uint8)
    u[[i, j]] = 1
    spec = MergedMeasurementSpec([LogicalObservable('X', u), LogicalObservable('Z', u)])
    xx, zz = merged_measure(register, block, spec, rng, repetitions, retry_limit).eigenvalues
    if xx == -1:
        register.tableau.apply_pauli(register.logical(PauliOp.single(k, 'Z', i), block))
    if zz == -1:
        register.tableau.apply_pauli(register.logical(PauliOp.single(k, 'X', i), block))
    return xx, zz


def merged_report(code: CssCode, spec: MergedMeasurementSpec, outcome: MergedOutcome, repetitions: int,
                  agrees: Optional[bool] = None) -> MergedMeasurementReport:
    return MergedMeasurementReport(
        code=code.name, observables=[str(obs) for obs in spec.observables],
        eigenvalues=outcome.eigenvalues,
        syndromes={kind: gf2kit.format_vector(bits) for kind, bits in outcome.syndromes.items()},
        corrections=outcome.corrections, repetitions=repetitions, ancilla_attempts=outcome.attempts,
        information_bits=outcome.information_bits, agrees_with_logical=agrees,
    )


def ancilla_expansion(code: CssCode, obs: LogicalObservable) -> Tuple[SparseState, SparseState]:
    """
    The ancilla of one observable before and after the transversal Hadamard: 2^(kappa+1)
    words of C0 + span(u'D), then 2^(n-kappa-1) words of its dual.
    """
    ancilla = AncillaSpec(code, [_ancilla_row(code, obs)]).sparse()
    return ancilla, walsh_hadamard(ancilla)


@dataclass(frozen=True)
class CliffordObservable:
    """
    `CliffordObservable` is a Hermitian Pauli product, optionally times one CX or CZ
    that commutes with it, e.g. "XIIIXIII*CX:5,6".
    """
    pauli: PauliOp
    gate: Optional[str] = None
    targets: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.gate not in (None, 'CX', 'CZ'):
            raise InvalidPauli(f'Unsupported observable gate {self.gate}')
        if self.gate is not None:
            if len(self.targets) != 2 or len(set(self.targets)) != 2:
                raise InvalidPauli(f'{self.gate} needs two distinct qubits, got {self.targets}')
            if any(not 0 <= q < self.pauli.n for q in self.targets):
                raise InvalidPauli(f'{self.gate} qubits {self.targets} fall outside {self.pauli.n} qubits')
            if conjugate(self.pauli, self.gate, self.targets) != self.pauli:
                raise InvalidPauli(f'{self.pauli} does not commute with {self.gate}{self.targets}')
        if not self.pauli.hermitian:
            raise InvalidPauli(f'{self.pauli} is not Hermitian')

    @classmethod
    def parse(cls, text: str, n: Optional[int] = None) -> 'CliffordObservable':
        literal, _, gate_part = text.partition('*')
        if ':' in literal:
            literal, gate_part = '', literal
        if gate_part:
            gate, _, qubits = gate_part.partition(':')
            targets = tuple(int(q) for q in qubits.split(','))
        else:
            gate, targets = None, ()
        pauli = PauliOp.from_string(literal) if literal else PauliOp.identity(n or 0)
        if n is not None and pauli.n != n:
            raise InvalidPauli(f'{text} acts on {pauli.n} qubits, expected {n}')
        return cls(pauli, gate.upper() if gate else None, targets)

    @property
    def is_pauli(self) -> bool:
        return self.gate is None

    def widened(self, total: int) -> 'CliffordObservable':
        return CliffordObservable(self.pauli.placed(range(self.pauli.n), total), self.gate, self.targets)

    def apply(self, amplitudes: np.ndarray, m: int) -> np.ndarray:
        """O|ψ> = P C |ψ> on an m-qubit amplitude vector."""
        scratch = DenseState(m, cap=max(m, 1), amplitudes=amplitudes.copy())
        if self.gate is not None:
            scratch.apply(self.gate, self.targets)
        return scratch.pauli_image(self.pauli.placed(range(self.pauli.n), m) if self.pauli.n != m else self.pauli)

    def expectation(self, state: DenseState) -> float:
        return float(np.real(np.vdot(state.amplitudes, self.apply(state.amplitudes, state.m))))

    def matrix(self) -> np.ndarray:
        size = 2 ** self.pauli.n
        return np.column_stack([self.apply(np.eye(size, dtype=complex)[:, j], self.pauli.n) for j in range(size)])

    def kind(self) -> str:
        letters = self.pauli.kinds()
        return letters.pop() if len(letters) == 1 else ''

    def __str__(self) -> str:
        suffix = '' if self.gate is None else f'*{self.gate}:{",".join(map(str, self.targets))}'
        return f'{self.pauli}{suffix}'


def _require_cat_form(obs: CliffordObservable) -> None:
    if not obs.is_pauli and (obs.kind(), obs.gate) not in (('X', 'CX'), ('Z', 'CZ')):
        raise MalformedSpec(MalformedSpecMessage().error.format(f'{obs} is not a cat-measurable form'))


def cat_measure(state: DenseState, obs: CliffordObservable, cat: int, rng,
                forced: Optional[int] = None, code: Optional[CssCode] = None) -> int:
    """
    `cat_measure` function measures a Clifford observable through one cat qubit:
    the cat qubit goes to |+>, controls O, and is read out in the X basis, then reset.
    Supported forms are X...X * CX, Z...Z * CZ and plain Pauli products. With `code`
    given, transversal CCZ with a cat block must be legitimate on it.
    """
    _require_cat_form(obs)
    if code is not None and not check_ccz_cat(code).legitimate:
        raise PreconditionFailed(PreconditionFailedMessage().error.format('cat measurement', 'CCZ-cat is not legitimate'))
    wide = obs.widened(state.m) if obs.pauli.n != state.m else obs
    if wide.pauli.x[cat] or wide.pauli.z[cat] or cat in wide.targets:
        raise MalformedSpec(MalformedSpecMessage().error.format(f'{obs} touches the cat qubit {cat}'))
    state.reset(cat, rng)
    state.apply('H', [cat])
    control = ((np.arange(2 ** state.m) >> cat) & 1).astype(bool)
    state.amplitudes = np.where(control, wide.apply(state.amplitudes, state.m), state.amplitudes)
    state.apply('H', [cat])
    outcome = state.measure_pauli(PauliOp.single(state.m, 'Z', cat), rng, forced)
    state.reset(cat, rng)
    logger.debug('cat measurement of %s -> %+d', obs, outcome)
    return outcome


@dataclass
class CatOutcome:
    eigenvalue: int
    votes: List[int]
    logical: DenseState
    terms: int


def _encode_blocks(code: CssCode, state: DenseState) -> Dict[int, complex]:
    """Block b of the word holds logical qubit b of `state`, at bits b*n .. b*n + n - 1."""
    shift = gf2kit.to_int(code.leaders[0])
    cosets = (list(code.c0_ints), [x ^ shift for x in code.c0_ints])
    scale = np.sqrt(float(len(code.c0_ints))) ** state.m
    physical: Dict[int, complex] = {}
    for index in np.flatnonzero(np.abs(state.amplitudes) > TOLERANCE):
        amplitude = complex(state.amplitudes[index]) / scale
        for words in itertools.product(*(cosets[(int(index) >> b) & 1] for b in range(state.m))):
            physical[sum(w << (b * code.n) for b, w in enumerate(words))] = amplitude
    return physical


def _cat_fault(physical: Dict[int, complex], fault: PauliOp, offset: int) -> Dict[int, complex]:
    if fault.x.any():
        raise MalformedSpec(MalformedSpecMessage().error.format(f'cat fault {fault} is not Z type'))
    mask = gf2kit.to_int(fault.z) << offset
    sign = -1 if fault.phase == 2 else 1
    return {w: a * sign * (-1 if (w & mask).bit_count() % 2 else 1) for w, a in physical.items()}


def _controlled_observable(code: CssCode, obs: CliffordObservable, physical: Dict[int, complex],
                           offset: int) -> Dict[int, complex]:
    """Cat qubit q controls position q of every block: first the gate, then X on D or Z on zbar."""
    n = code.n
    zbar, leader = code.zbar[0], code.leaders[0]
    z_blocks = [int(b) for b in np.flatnonzero(obs.pauli.z)]
    x_blocks = [int(b) for b in np.flatnonzero(obs.pauli.x)]
    source, target = obs.targets if obs.gate else (0, 0)
    controlled: Dict[int, complex] = {}
    for word, amplitude in physical.items():
        for q in range(n):
            if not (word >> (offset + q)) & 1:
                continue
            if obs.gate == 'CZ' and (word >> (source * n + q)) & (word >> (target * n + q)) & 1:
                amplitude = -amplitude
            elif obs.gate == 'CX' and (word >> (source * n + q)) & 1:
                word ^= 1 << (target * n + q)
            if zbar[q] and sum((word >> (b * n + q)) & 1 for b in z_blocks) % 2:
                amplitude = -amplitude
            if leader[q]:
                for b in x_blocks:
                    word ^= 1 << (b * n + q)
        if obs.pauli.phase == 2 and (word >> offset) & 1:
            amplitude = -amplitude
        controlled[word] = amplitude
    return controlled


def _read_cat(physical: Dict[int, complex], offset: int, n: int, rng,
              forced: Optional[int]) -> Tuple[int, Dict[int, complex]]:
    """
    Reads every cat qubit in the X basis. The sampled pattern s leaves the data in
    sum_c (-1)^(s.c) a(c, .) and its parity is the vote; the cat is gone afterwards.
    """
    low = (1 << offset) - 1
    data = sorted({w & low for w in physical})
    cats = sorted({w >> offset for w in physical})
    column = {d: i for i, d in enumerate(data)}
    row = {c: i for i, c in enumerate(cats)}
    table = np.zeros((len(cats), len(data)), dtype=complex)
    for word, amplitude in physical.items():
        table[row[word >> offset], column[word & low]] = amplitude
    patterns = np.arange(2 ** n, dtype=np.int64)
    cat_words = np.array(cats, dtype=np.int64)
    overlap = np.zeros((patterns.size, cat_words.size), dtype=np.int64)
    odd = np.zeros(patterns.size, dtype=np.int64)
    for bit in range(n):
        overlap ^= ((patterns[:, None] >> bit) & 1) & ((cat_words[None, :] >> bit) & 1)
        odd ^= (patterns >> bit) & 1
    images = ((1 - 2 * overlap) @ table) / np.sqrt(2.0 ** n)
    weights = np.sum(np.abs(images) ** 2, axis=1)
    if forced is not None:
        weights = np.where(odd == (1 if forced == -1 else 0), weights, 0.0)
        if weights.sum() < TOLERANCE:
            raise ForcedOutcomeImpossible(ForcedOutcomeImpossibleMessage().error.format(forced, 'the cat block'))
    pattern = int(rng.choice(patterns.size, p=weights / weights.sum()))
    image = images[pattern] / np.linalg.norm(images[pattern])
    return (-1 if odd[pattern] else 1), {d: a for d, a in zip(data, image) if abs(a) > TOLERANCE}


def _decode_blocks(code: CssCode, physical: Dict[int, complex], m: int) -> DenseState:
    zbar = gf2kit.to_int(code.zbar[0])
    block = (1 << code.n) - 1
    amplitudes = np.zeros(2 ** m, dtype=complex)
    for word, amplitude in physical.items():
        index = sum(((((word >> (b * code.n)) & block & zbar).bit_count() % 2) << b) for b in range(m))
        amplitudes[index] += amplitude
    return DenseState(m, cap=max(m, 1), amplitudes=amplitudes / np.linalg.norm(amplitudes))


def encoded_cat_measure(code: CssCode, state: DenseState, obs: CliffordObservable, rng,
                        repetitions: int = REPETITIONS, cat_faults: Optional[Dict[int, PauliOp]] = None,
                        forced: Optional[int] = None) -> CatOutcome:
    """
    `encoded_cat_measure` function measures a Clifford observable on code blocks with a
    physical cat block of n qubits prepared in (|0...0> + |1...1>)/√2.
    Logical qubit b of `state` is encoded into block b. Cat qubit q controls position q of
    every block, so the controlled gates stay transversal; the cat is then read out in the
    X basis and the parity of the pattern is the vote of the repetition. The eigenvalue is
    the majority of the votes. `cat_faults` maps a repetition to a Z-type fault on the cat
    block; `forced` fixes the first vote.
    """
    _require_cat_form(obs)
    if code.k != 1:
        raise PreconditionFailed(PreconditionFailedMessage().error.format(
            'encoded cat measurement', f'{code.name} holds {code.k} logical qubits per block'))
    check = {'CZ': check_ccz_cat, 'CX': check_cnot}.get(obs.gate)
    if check is not None and not check(code).legitimate:
        raise PreconditionFailed(PreconditionFailedMessage().error.format(
            'encoded cat measurement', f'transversal {obs.gate} is not legitimate on {code.name}'))
    if (obs.pauli.x & obs.pauli.z).any():
        raise MalformedSpec(MalformedSpecMessage().error.format(f'{obs} has Y factors'))
    code.require_zbar_consistent()
    wide = obs.widened(state.m) if obs.pauli.n != state.m else obs
    offset = code.n * state.m
    everything = (1 << code.n) - 1
    faults = cat_faults or {}
    physical = _encode_blocks(code, state)
    votes: List[int] = []
    terms = 0
    for repetition in range(repetitions):
        physical = {w | (c << offset): a / np.sqrt(2) for w, a in physical.items() for c in (0, everything)}
        if repetition in faults:
            physical = _cat_fault(physical, faults[repetition], offset)
        physical = _controlled_observable(code, wide, physical, offset)
        terms = max(terms, len(physical))
        vote, physical = _read_cat(physical, offset, code.n, rng, forced if repetition == 0 else None)
        votes.append(vote)
    eigenvalue = -1 if 2 * votes.count(-1) > len(votes) else 1
    logger.info('encoded cat measurement of %s on %s -> %+d %s', obs, code.name, eigenvalue, votes)
    return CatOutcome(eigenvalue, votes, _decode_blocks(code, physical, state.m), terms)


@dataclass
class PreparationPlan:
    """
    `PreparationPlan` holds the stabilizers M_i with their flips Q_i, the decomposed
    M_r with their factors, and the start recipe that makes every factor +1.
    """
    name: str
    qubits: int
    targets: List[Tuple[CliffordObservable, PauliOp]]
    decompositions: Dict[int, List[CliffordObservable]] = field(default_factory=dict)
    start: List[Tuple[str, List[int]]] = field(default_factory=list)
    target_state: Optional[np.ndarray] = None

    def validate(self) -> None:
        """
        Checks the M_i commute and are independent, Q_i anticommutes with M_i only,
        and the factors of each decomposition multiply to their M_r.
        """
        matrices = [m.matrix() for m, _ in self.targets]
        flips = [CliffordObservable(q).matrix() for _, q in self.targets]
        size = 2 ** self.qubits
        for i, a in enumerate(matrices):
            for j, b in enumerate(matrices[:i]):
                if not np.allclose(a @ b, b @ a):
                    raise InconsistentPlan(f'M{j + 1} and M{i + 1} do not commute')
            for j, q in enumerate(flips):
                anti = np.allclose(a @ q, -(q @ a))
                if anti != (i == j):
                    raise InconsistentPlan(f'Q{j + 1} must anticommute with M{j + 1} only (fails on M{i + 1})')
        projector = np.eye(size, dtype=complex)
        for a in matrices:
            projector = projector @ (np.eye(size) + a) / 2
        if not np.isclose(np.real(np.trace(projector)), 2 ** (self.qubits - len(matrices))):
            raise InconsistentPlan('The M_i are not independent')
        for r, factors in self.decompositions.items():
            product = np.eye(size, dtype=complex)
            for factor in factors:
                product = product @ factor.matrix()
            if not np.allclose(product, matrices[r]):
                raise InconsistentPlan(f'The factors of M{r + 1} do not multiply to it')

    @property
    def needs_cat(self) -> bool:
        return any(not m.is_pauli for i, (m, _) in enumerate(self.targets) if i not in self.decompositions)


def parse_plan(lines: Sequence[str], name: str = 'plan') -> PreparationPlan:
    """
    `parse_plan` function reads the plan text format, one directive per line:
    1. `M <observable> Q <pauli>` adds a stabilizer and its flip.
    2. `DECOMPOSE <r> <factor>...` (1-based r) replaces M_r by its factors.
    3. `START ZERO|PLUS <bits>` and `START BELL <a> <b>` (0-based bits) build the start state.
    4. `TARGET <coefficients>` optionally gives the expected state over all basis words.
    Blank lines and '#' comments are skipped.
    """
    targets, decompositions, start = [], {}, []
    target_state = None
    qubits = None
    pending = []
    for number, raw in enumerate(lines, start=1):
        text = raw.split('#', 1)[0].strip()
        if not text:
            continue
        tokens = text.split()
        try:
            if tokens[0] == 'M':
                if len(tokens) != 4 or tokens[2] != 'Q':
                    raise ValueError('expected "M <observable> Q <pauli>"')
                observable = CliffordObservable.parse(tokens[1], qubits)
                qubits = observable.pauli.n
                targets.append((observable, PauliOp.from_string(tokens[3])))
            else:
                pending.append((number, tokens))
        except (ValueError, IndexError) as e:
            raise PlanParseError(ParseErrorMessage().error.format(number, e)) from e
    if qubits is None:
        raise PlanParseError(ParseErrorMessage().error.format(len(lines), 'plan has no M lines'))
    for number, tokens in pending:
        try:
            if tokens[0] == 'DECOMPOSE':
                r = int(tokens[1]) - 1
                if not 0 <= r < len(targets):
                    raise ValueError(f'no M{r + 1} to decompose')
                decompositions[r] = [CliffordObservable.parse(t, qubits) for t in tokens[2:]]
            elif tokens[0] == 'START':
                kind, bits = tokens[1].upper(), [int(t) for t in tokens[2:]]
                if kind not in ('ZERO', 'PLUS', 'BELL') or (kind == 'BELL' and len(bits) % 2):
                    raise ValueError(f'bad start recipe "{" ".join(tokens[1:])}"')
                if any(not 0 <= b < qubits for b in bits):
                    raise ValueError(f'start bits {bits} fall outside {qubits} qubits')
                start.append((kind, bits))
            elif tokens[0] == 'TARGET':
                values = np.array([complex(t.replace('i', 'j')) for t in tokens[1:]])
                if values.size != 2 ** qubits:
                    raise ValueError(f'target needs {2 ** qubits} coefficients')
                target_state = values / np.linalg.norm(values)
            else:
                raise ValueError(f'unknown directive "{tokens[0]}"')
        except (ValueError, IndexError) as e:
            raise PlanParseError(ParseErrorMessage().error.format(number, e)) from e
    for _, q in targets:
        if q.n != qubits:
            raise PlanParseError(ParseErrorMessage().error.format(0, f'Q {q} does not act on {qubits} qubits'))
    plan = PreparationPlan(name, qubits, targets, decompositions, start, target_state)
    plan.validate()
    return plan


def start_state(plan: PreparationPlan, m: Optional[int] = None) -> DenseState:
    state = DenseState(m or plan.qubits)
    for kind, bits in plan.start:
        if kind == 'PLUS':
            for b in bits:
                state.apply('H', [b])
        elif kind == 'BELL':
            for a, b in zip(bits[::2], bits[1::2]):
                state.apply('H', [a]).apply('CX', [a, b])
    return state


def prepare_state(plan: PreparationPlan, rng, forced: Optional[Dict[int, int]] = None,
                  code: Optional[CssCode] = None) -> Tuple[DenseState, PreparationReport]:
    """
    `prepare_state` function runs a preparation plan at the logical level.
    The start recipe must already be a +1 eigenstate of every factor of the decomposed
    M_r; the remaining M_i are then measured in order (through a cat qubit when they
    carry a CX or CZ) and Q_i is applied on every -1. Finally each M_i must hold +1
    deterministically. `forced` maps 0-based i to a forced outcome.
    """
    forced = forced or {}
    cat = plan.qubits if plan.needs_cat else None
    width = plan.qubits + (1 if cat is not None else 0)
    if code is not None and cat is not None and not check_ccz_cat(code).legitimate:
        raise PreconditionFailed(PreconditionFailedMessage().error.format('cat measurement', 'CCZ-cat is not legitimate'))
    state = start_state(plan, width)
    for r, factors in plan.decompositions.items():
        for factor in factors:
            if abs(factor.widened(width).expectation(state) - 1) > TOLERANCE:
                raise InconsistentPlan(f'The start state is not a +1 eigenstate of factor {factor} of M{r + 1}')
    trace = []
    for i, (observable, flip) in enumerate(plan.targets):
        if i in plan.decompositions:
            trace.append(f'M{i + 1} {observable} decomposed into {" ".join(map(str, plan.decompositions[i]))}')
            continue
        if observable.is_pauli:
            outcome = state.measure_pauli(observable.pauli.placed(range(plan.qubits), width), rng, forced.get(i))
            how = 'merged'
        else:
            outcome = cat_measure(state, observable.widened(width), cat, rng, forced.get(i))
            how = 'cat'
        line = f'M{i + 1} {observable} ({how}) -> {outcome:+d}'
        if outcome == -1:
            state.apply_pauli(flip.placed(range(plan.qubits), width))
            line += f', applied Q{i + 1} {flip}'
        trace.append(line)
    if cat is not None:
        keep = ((np.arange(2 ** width) >> cat) & 1) == 0
        state = DenseState(plan.qubits, amplitudes=state.amplitudes[keep])
    expectations = [observable.expectation(state) for observable, _ in plan.targets]
    eigenvalues = [int(np.rint(value)) for value in expectations]
    verified = all(abs(value - 1) < TOLERANCE for value in expectations)
    fidelity = None
    if plan.target_state is not None:
        fidelity = float(abs(np.vdot(plan.target_state, state.amplitudes)) ** 2)
    start = [f'{kind} {" ".join(map(str, bits))}' for kind, bits in plan.start]
    report = PreparationReport(
        plan=plan.name, code=code.name if code is not None else None, qubits=plan.qubits,
        start=start, trace=trace, eigenvalues=eigenvalues, verified=verified, fidelity=fidelity,
    )
    logger.info('plan %s verified=%s', plan.name, verified)
    return state, report


def starting_state_hint(plan: PreparationPlan, i: int, target: DenseState) -> DenseState:
    """(I + Q_i)|φ>: the start state that yields |φ> when only M_i is measured."""
    flip = plan.targets[i][1]
    vector = target.amplitudes + target.pauli_image(flip)
    norm = np.linalg.norm(vector)
    if norm < TOLERANCE:
        raise InconsistentPlan(f'(I + Q{i + 1}) annihilates the target state')
    return DenseState(target.m, amplitudes=vector / norm)
