"""
`csscode` module stores CSS code construction from classical codes, codeword
enumeration and the bookkeeping of logical operators.

A code block holds the X-type stabilizer basis G0 (rows spanning C0), the coset
leaders D and the Z-type stabilizer basis. The logical basis states are
|u>_L = sum over x in C0 of |x + uD>.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from schemas.codes import CodeSummary, PartitionReport
from schemas.errors import (
    DependentCosetLeaders as DependentCosetLeadersMessage, MalformedMatrix as MalformedMatrixMessage,
    NonPositiveK as NonPositiveKMessage, NotDualContaining as NotDualContainingMessage,
    SingularGram as SingularGramMessage, ZbarOutsideDual as ZbarOutsideDualMessage,
    DimensionMismatch as DimensionMismatchMessage,
)
from utilities import gf2kit
from utilities.config import CLASSIFY_LIMIT, PHASE_UNIT
from utilities.gf2kit import DimensionMismatch, MalformedMatrix
from utilities.pauli import PauliOp, StabilizerGroup

logger = logging.getLogger(__name__)


class CodeError(ValueError):
    pass


class NotDualContaining(CodeError):
    pass


class NonPositiveK(CodeError):
    pass


class DependentCosetLeaders(CodeError):
    pass


class SingularGram(CodeError):
    pass


class ZbarOutsideDual(CodeError):
    pass


@dataclass
class ClassicalCode:
    """
    `ClassicalCode` is a binary [n, k_c, d] code given by its generator matrix.
    The check matrix is derived when it is not supplied.
    """
    name: str
    generator: np.ndarray
    check: Optional[np.ndarray] = None
    d: Optional[int] = None

    def __post_init__(self):
        self.generator = gf2kit.as_matrix(self.generator)
        if self.check is None:
            self.check = gf2kit.nullspace(self.generator)
        self.check = gf2kit.as_matrix(self.check, cols=self.n)
        if gf2kit.rank(self.generator) != self.generator.shape[0]:
            raise CodeError(f'Generator rows of {self.name} are not independent')
        if self.check.shape[0] and gf2kit.matmul(self.generator, self.check.T).any():
            raise CodeError(f'Generator and check matrix of {self.name} are not orthogonal')

    @property
    def n(self) -> int:
        return int(self.generator.shape[1])

    @property
    def k_c(self) -> int:
        return int(self.generator.shape[0])


@dataclass(eq=False)
class CssCode:
    """
    `CssCode` is an [[n, k, d]] CSS code block.
    Derived data is computed on construction:
    1. `gram` is D D^T; it must be invertible.
    2. `zbar` rows are (D D^T)^{-1} D, the supports of the logical Z operators.
    3. flags: dual_contained, symmetric, doubly_even, weights_mult4, ddt_identity,
       zbar_consistent.
    """
    name: str
    x_checks: np.ndarray
    leaders: np.ndarray
    z_checks: np.ndarray
    d: Optional[int] = None
    gram: np.ndarray = field(init=False)
    zbar: np.ndarray = field(init=False)

    def __post_init__(self):
        width = max(m.shape[1] for m in (gf2kit.as_matrix(self.x_checks), gf2kit.as_matrix(self.leaders),
                                         gf2kit.as_matrix(self.z_checks)))
        self.x_checks = gf2kit.as_matrix(self.x_checks, cols=width)
        self.leaders = gf2kit.as_matrix(self.leaders, cols=width)
        self.z_checks = gf2kit.as_matrix(self.z_checks, cols=width)
        self.gram = gf2kit.matmul(self.leaders, self.leaders.T) if self.k else gf2kit.zeros(0, 0)
        inverse = gf2kit.inverse(self.gram) if self.k else gf2kit.zeros(0, 0)
        if inverse is None:
            raise SingularGram(SingularGramMessage().error)
        self.zbar = gf2kit.matmul(inverse, self.leaders) if self.k else gf2kit.zeros(0, self.n)
        if not self.zbar_consistent:
            logger.warning('code %s: logical Z supports leave the dual of C0', self.name)
        logger.debug('code %s: n=%d k=%d kappa=%d/%d', self.name, self.n, self.k, self.kappa, self.kappa_z)

    @property
    def n(self) -> int:
        return int(self.x_checks.shape[1])

    @property
    def k(self) -> int:
        return int(self.leaders.shape[0])

    @property
    def kappa(self) -> int:
        return int(self.x_checks.shape[0])

    @property
    def kappa_z(self) -> int:
        return int(self.z_checks.shape[0])

    @property
    def dual_check(self) -> np.ndarray:
        """H0: rows spanning the dual of C0, (n - kappa) x n."""
        return gf2kit.nullspace(self.x_checks)

    @cached_property
    def logical_x(self) -> List[PauliOp]:
        return [PauliOp.x_type(row) for row in self.leaders]

    @cached_property
    def logical_z(self) -> List[PauliOp]:
        return [PauliOp.z_type(row) for row in self.zbar]

    @cached_property
    def c0_words(self) -> np.ndarray:
        return gf2kit.span_elements(self.x_checks)

    @cached_property
    def c0_ints(self) -> List[int]:
        return [gf2kit.to_int(word) for word in self.c0_words]

    @property
    def dual_contained(self) -> bool:
        return not gf2kit.matmul(self.x_checks, self.x_checks.T).any()

    @property
    def symmetric(self) -> bool:
        if self.kappa != self.kappa_z:
            return False
        return gf2kit.rank(gf2kit.stack(self.x_checks, self.z_checks)) == self.kappa

    @property
    def weights_mult4(self) -> bool:
        return all(gf2kit.weight(row) % 4 == 0 for row in self.x_checks)

    @property
    def doubly_even(self) -> bool:
        if self.kappa > 20:
            return self.dual_contained and self.weights_mult4
        return bool(np.all(self.c0_words.sum(axis=1) % 4 == 0))

    @property
    def ddt_identity(self) -> bool:
        return np.array_equal(self.gram, gf2kit.identity(self.k))

    @property
    def zbar_consistent(self) -> bool:
        return self.zbar_clash() is None

    def zbar_clash(self) -> Optional[int]:
        """First logical qubit whose Z support meets a C0 generator oddly, None when all lie in C0^⊥."""
        if not (self.kappa and self.k):
            return None
        clash = np.flatnonzero(gf2kit.matmul(self.x_checks, self.zbar.T).any(axis=0))
        return int(clash[0]) if clash.size else None

    def require_zbar_consistent(self) -> None:
        clash = self.zbar_clash()
        if clash is not None:
            raise ZbarOutsideDual(ZbarOutsideDualMessage().error.format(clash))

    def stabilizers(self) -> List[PauliOp]:
        return ([PauliOp.x_type(row) for row in self.x_checks]
                + [PauliOp.z_type(row) for row in self.z_checks])

    def stabilizer_group(self) -> StabilizerGroup:
        return StabilizerGroup(self.stabilizers())

    def leader_word(self, u) -> np.ndarray:
        u = gf2kit.as_vector(u)
        if u.size != self.k:
            raise DimensionMismatch(DimensionMismatchMessage().error.format(u.size, self.k))
        return gf2kit.matmul(u.reshape(1, -1), self.leaders)[0] if self.k else np.zeros(self.n, np.uint8)

    @cached_property
    def _x_decoder(self) -> Dict[bytes, int]:
        return _single_error_table(self.z_checks)

    @cached_property
    def _z_decoder(self) -> Dict[bytes, int]:
        return _single_error_table(self.x_checks)

    def __repr__(self) -> str:
        return f'CssCode({self.name}, [[{self.n},{self.k},{self.d or "?"}]])'


def _single_error_table(checks: np.ndarray) -> Dict[bytes, int]:
    table: Dict[bytes, int] = {}
    for qubit in range(checks.shape[1]):
        table.setdefault(gf2kit.row_key(checks[:, qubit]), qubit)
    return table


def _orthonormalize(leaders: np.ndarray) -> Optional[np.ndarray]:
    """
    GF(2) Gram-Schmidt on the coset leaders. A self-orthogonal remainder r, s with
    <r, s> = 1 is merged with an orthonormal e through e+r, e+s, e+r+s.
    Returns None when no orthonormal basis exists.
    """
    remaining = [row.copy() for row in leaders]
    result: List[np.ndarray] = []

    def inner(a, b) -> int:
        return int(np.sum(a & b)) % 2

    while remaining:
        odd = next((i for i, row in enumerate(remaining) if inner(row, row)), None)
        if odd is not None:
            e = remaining.pop(odd)
            remaining = [t ^ (e * inner(t, e)) for t in remaining]
            result.append(e)
            continue
        pair = next(((i, j) for i in range(len(remaining)) for j in range(i + 1, len(remaining))
                     if inner(remaining[i], remaining[j])), None)
        if pair is None or not result:
            return None
        r, s = remaining[pair[0]], remaining[pair[1]]
        remaining = [t for index, t in enumerate(remaining) if index not in pair]
        remaining = [t ^ (r * inner(t, s)) ^ (s * inner(t, r)) for t in remaining]
        e = result.pop()
        result.extend([e ^ r, e ^ s, e ^ r ^ s])
    return np.array(result, dtype=np.uint8).reshape(-1, leaders.shape[1])


def build_css(c: ClassicalCode, orthonormalize: bool = True) -> CssCode:
    """
    `build_css` function returns the CSS code of a dual-containing classical code.
    It takes two parameters:
    1. `c` is the classical code; C0 is its dual, k = 2 k_c - n.
    2. `orthonormalize` asks for coset leaders with D D^T = I; the row-reduced leaders
       are kept when no such basis exists or when it is False.
    """
    k = 2 * c.k_c - c.n
    if k <= 0:
        raise NonPositiveK(NonPositiveKMessage().error.format(k))
    g0 = gf2kit.row_basis(gf2kit.nullspace(c.generator))
    if g0.shape[0] == 0:
        g0 = gf2kit.zeros(0, c.n)
    for row in g0:
        if not gf2kit.in_span(c.generator, row):
            raise NotDualContaining(NotDualContainingMessage().error)
    chosen: List[np.ndarray] = []
    for row in gf2kit.row_basis(c.generator):
        if len(chosen) == k:
            break
        if not gf2kit.in_span(gf2kit.stack(g0, *chosen, cols=c.n), row):
            chosen.append(row)
    leaders = np.array(chosen, dtype=np.uint8)
    if orthonormalize:
        better = _orthonormalize(leaders)
        if better is not None:
            leaders = better
        else:
            logger.info('%s: no orthonormal coset leaders, keeping the row-reduced basis', c.name)
    return CssCode(name=c.name, x_checks=g0, leaders=leaders, z_checks=g0.copy(), d=c.d)


def build_from_cosets(name: str, g0, leaders, d: Optional[int] = None) -> CssCode:
    """
    `build_from_cosets` function returns the CSS code fixed by C0 and coset leaders
    directly. The Z-type stabilizers span the dual of span(G0, D), so the code may be
    asymmetric (e.g. [[15,1,3]]) or encode nothing (k = 0) or everything (kappa = 0).
    """
    leaders = gf2kit.as_matrix(leaders)
    width = leaders.shape[1] if leaders.shape[0] else gf2kit.as_matrix(g0).shape[1]
    g0 = gf2kit.as_matrix(g0, cols=width)
    leaders = gf2kit.as_matrix(leaders, cols=g0.shape[1])
    combined = gf2kit.stack(g0, leaders, cols=g0.shape[1])
    if gf2kit.rank(combined) != combined.shape[0]:
        raise DependentCosetLeaders(DependentCosetLeadersMessage().error)
    z_checks = gf2kit.nullspace(combined)
    if z_checks.shape[0] == g0.shape[0] and gf2kit.rank(gf2kit.stack(g0, z_checks)) == g0.shape[0]:
        z_checks = g0.copy()
    return CssCode(name=name, x_checks=g0, leaders=leaders, z_checks=z_checks, d=d)


@dataclass
class SparseState:
    """
    `SparseState` is an equal-weight superposition of basis words with exact phases.
    `terms` maps word (bit j is qubit j) to a phase exponent of exp(2πi/16).
    """
    n: int
    terms: Dict[int, int] = field(default_factory=dict)

    @classmethod
    def from_words(cls, n: int, words: Iterable[int]) -> 'SparseState':
        return cls(n, {int(w): 0 for w in words})

    def __len__(self) -> int:
        return len(self.terms)

    def copy(self) -> 'SparseState':
        return SparseState(self.n, dict(self.terms))

    def words(self) -> set:
        return set(self.terms)

    def permute(self, fn: Callable[[int], int]) -> 'SparseState':
        return SparseState(self.n, {fn(w): p for w, p in self.terms.items()})

    def add_phase(self, fn: Callable[[int], int]) -> 'SparseState':
        return SparseState(self.n, {w: (p + fn(w)) % PHASE_UNIT for w, p in self.terms.items()})

    def apply_x(self, mask: int) -> 'SparseState':
        return self.permute(lambda w: w ^ mask)

    def apply_z(self, mask: int) -> 'SparseState':
        half = PHASE_UNIT // 2
        return self.add_phase(lambda w: half * ((w & mask).bit_count() % 2))

    def tensor(self, other: 'SparseState') -> 'SparseState':
        return SparseState(self.n + other.n, {
            a | (b << self.n): (pa + pb) % PHASE_UNIT
            for a, pa in self.terms.items() for b, pb in other.terms.items()
        })

    def shifted(self, offset: int) -> 'SparseState':
        return SparseState(self.n, {w: (p + offset) % PHASE_UNIT for w, p in self.terms.items()})

    def relative_phase(self, other: 'SparseState') -> Optional[int]:
        """
        The constant c with self = exp(2πic/16) other term for term, or None when
        the word sets differ or the phase offset is not uniform.
        """
        if self.n != other.n or self.terms.keys() != other.terms.keys():
            return None
        offsets = {(p - other.terms[w]) % PHASE_UNIT for w, p in self.terms.items()}
        return offsets.pop() if len(offsets) == 1 else None

    def __eq__(self, other) -> bool:
        return isinstance(other, SparseState) and self.relative_phase(other) == 0


def encode_logical(code: CssCode, u) -> SparseState:
    """`encode_logical` returns |u>_L with its 2^kappa terms, all phases zero."""
    shift = gf2kit.to_int(code.leader_word(u))
    return SparseState.from_words(code.n, (x ^ shift for x in code.c0_ints))


def encode_superposition(code: CssCode, span) -> SparseState:
    """`encode_superposition` returns the sum of |u>_L over all u in the span of the given rows."""
    span = gf2kit.as_matrix(span, cols=code.k)
    if span.shape[0] and gf2kit.rank(span) != span.shape[0]:
        raise CodeError('Ancilla span vectors are not independent')
    words = set()
    for u in gf2kit.span_elements(span):
        shift = gf2kit.to_int(code.leader_word(u))
        words.update(x ^ shift for x in code.c0_ints)
    return SparseState.from_words(code.n, words)


def syndrome(code: CssCode, error: PauliOp) -> Tuple[np.ndarray, np.ndarray]:
    """
    `syndrome` function returns (x-syndrome, z-syndrome): the commutation pattern of
    the error with the Z-type and then the X-type stabilizer generators.
    """
    if error.n != code.n:
        raise DimensionMismatch(DimensionMismatchMessage().error.format(error.n, code.n))
    x_part = gf2kit.matmul(code.z_checks, error.x) if code.kappa_z else np.zeros(0, np.uint8)
    z_part = gf2kit.matmul(code.x_checks, error.z) if code.kappa else np.zeros(0, np.uint8)
    return x_part, z_part


def decode_single(code: CssCode, kind: str, bits) -> Optional[np.ndarray]:
    """
    `decode_single` function maps a syndrome to an error mask of weight at most one.
    `kind` is the error type: "X" errors are seen by the Z checks, "Z" errors by the
    X checks. Undecodable syndromes return None.
    """
    bits = gf2kit.as_vector(bits)
    correction = np.zeros(code.n, dtype=np.uint8)
    if not bits.any():
        return correction
    table = code._x_decoder if kind == 'X' else code._z_decoder
    qubit = table.get(gf2kit.row_key(bits))
    if qubit is None:
        logger.warning('%s: syndrome %s is not a single %s error', code.name, gf2kit.format_vector(bits), kind)
        return None
    correction[qubit] = 1
    return correction


def _classify(masks: np.ndarray, checks: np.ndarray, stabilizers: np.ndarray, logical: np.ndarray) -> Tuple[int, int, int]:
    weights = 1 << np.arange(max(checks.shape[0], logical.shape[0], 1), dtype=np.int64)
    syndromes = (masks.astype(np.int64) @ checks.T.astype(np.int64)) % 2 if checks.shape[0] else np.zeros((len(masks), 0))
    syndrome_ids = syndromes.astype(np.int64) @ weights[:syndromes.shape[1]]
    silent = masks[syndrome_ids == 0]
    stabilizer_set = {gf2kit.row_key(w) for w in gf2kit.span_elements(stabilizers)}
    members = sum(1 for w in silent if gf2kit.row_key(w) in stabilizer_set)
    classes = (silent.astype(np.int64) @ logical.T.astype(np.int64)) % 2 if logical.shape[0] else np.zeros((len(silent), 0))
    logical_ids = classes.astype(np.int64) @ weights[:classes.shape[1]]
    return members, len(np.unique(logical_ids)), len(np.unique(syndrome_ids))


def pauli_partition(code: CssCode, limit: int = CLASSIFY_LIMIT) -> PartitionReport:
    """
    `pauli_partition` function returns the six class counts of one block.
    For n up to `limit` every X-type and Z-type mask is classified explicitly and
    the result is checked against the closed form.
    """
    counts = dict(
        x_stabilizers=2 ** code.kappa, z_stabilizers=2 ** code.kappa_z,
        logical_x=2 ** code.k, logical_z=2 ** code.k,
        detectable_x=2 ** code.kappa_z, detectable_z=2 ** code.kappa,
    )
    explicit = code.n <= limit
    if explicit:
        masks = ((np.arange(2 ** code.n)[:, None] >> np.arange(code.n)) & 1).astype(np.uint8)
        x_members, x_classes, x_syndromes = _classify(masks, code.z_checks, code.x_checks, code.zbar)
        z_members, z_classes, z_syndromes = _classify(masks, code.x_checks, code.z_checks, code.leaders)
        found = dict(
            x_stabilizers=x_members, z_stabilizers=z_members, logical_x=x_classes,
            logical_z=z_classes, detectable_x=x_syndromes, detectable_z=z_syndromes,
        )
        if found != counts:
            raise CodeError(f'{code.name}: explicit classification {found} disagrees with {counts}')
    return PartitionReport(code=code.name, n=code.n, explicit=explicit, **counts)


def code_summary(code: CssCode) -> CodeSummary:
    return CodeSummary(
        name=code.name, n=code.n, k=code.k, kappa=code.kappa, kappa_z=code.kappa_z, d=code.d,
        leaders=[gf2kit.format_vector(row) for row in code.leaders],
        logical_z=[gf2kit.format_vector(row) for row in code.zbar],
        gram=[gf2kit.format_vector(row) for row in code.gram],
        dual_contained=code.dual_contained, symmetric=code.symmetric,
        doubly_even=code.doubly_even, weights_mult4=code.weights_mult4,
        ddt_identity=code.ddt_identity, zbar_consistent=code.zbar_consistent,
        partition=pauli_partition(code),
    )


def parse_code(lines: Sequence[str], orthonormalize: bool = True) -> CssCode:
    """
    `parse_code` function reads a code file. Two header forms are accepted:
    1. `<name> <n> <k_c> [<d>]` followed by the classical generator matrix.
    2. `css <name> <n> <k> [<d>]` followed by the G0 block and then the D block.
    """
    index = 0
    header = None
    while index < len(lines):
        text = lines[index].split('#', 1)[0].strip()
        index += 1
        if text:
            header = text.split()
            break
    if header is None:
        raise MalformedMatrix(MalformedMatrixMessage().error.format(index, 'missing code header'))
    coset_form = header[0] == 'css'
    fields = header[1:] if coset_form else header
    try:
        name, n, size = fields[0], int(fields[1]), int(fields[2])
        d = int(fields[3]) if len(fields) > 3 else None
    except (IndexError, ValueError) as e:
        raise MalformedMatrix(
            MalformedMatrixMessage().error.format(index, f'bad code header "{" ".join(header)}"')
        ) from e
    if coset_form:
        g0, index = gf2kit.parse_matrix(lines, index)
        leaders, index = gf2kit.parse_matrix(lines, index)
        if leaders.shape[0] != size or g0.shape[1] != n or leaders.shape[1] != n:
            raise MalformedMatrix(MalformedMatrixMessage().error.format(index, 'blocks do not match the header'))
        return build_from_cosets(name, g0, leaders, d)
    k_c = size
    generator, index = gf2kit.parse_matrix(lines, index)
    if generator.shape != (k_c, n):
        raise MalformedMatrix(MalformedMatrixMessage().error.format(index, f'generator is not {k_c}x{n}'))
    return build_css(ClassicalCode(name=name, generator=generator, d=d), orthonormalize)


def format_code(code: CssCode) -> str:
    header = f'css {code.name} {code.n} {code.k}' + (f' {code.d}' if code.d is not None else '')
    return '\n'.join([header, gf2kit.format_matrix(code.x_checks), gf2kit.format_matrix(code.leaders)]) + '\n'
