"""
`gf2kit` module stores exact linear algebra over GF(2).

Matrices are numpy uint8 arrays with one 0/1 entry per cell and one code word per
row; vectors are 1-D uint8 arrays. Elimination packs the rows into 64-bit words and
adds rows with word-wide XOR. Nothing here touches floating point.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from schemas.errors import DimensionMismatch as DimensionMismatchMessage
from schemas.errors import MalformedMatrix as MalformedMatrixMessage

logger = logging.getLogger(__name__)

WORD = 64


class DimensionMismatch(ValueError):
    pass


class MalformedMatrix(ValueError):
    pass


@dataclass(frozen=True)
class RowEchelon:
    """
    `RowEchelon` holds a reduced row-echelon form together with its pivot columns.
    Zero rows are kept at the bottom, so the row space of the input is preserved.
    """
    matrix: np.ndarray
    pivots: Tuple[int, ...]
    rank: int


def as_vector(data) -> np.ndarray:
    return (np.asarray(data, dtype=np.int64).reshape(-1) % 2).astype(np.uint8)


def as_matrix(data, cols: Optional[int] = None) -> np.ndarray:
    array = np.asarray(data, dtype=np.int64)
    if array.size == 0:
        width = cols if cols is not None else (array.shape[-1] if array.ndim == 2 else 0)
        return np.zeros((0, width), dtype=np.uint8)
    if array.ndim == 1:
        array = array.reshape(1, -1)
    return (array % 2).astype(np.uint8)


def zeros(rows: int, cols: int) -> np.ndarray:
    return np.zeros((rows, cols), dtype=np.uint8)


def identity(size: int) -> np.ndarray:
    return np.eye(size, dtype=np.uint8)


def stack(*blocks: np.ndarray, cols: Optional[int] = None) -> np.ndarray:
    parts = [as_matrix(block, cols) for block in blocks]
    width = cols if cols is not None else max((p.shape[1] for p in parts), default=0)
    parts = [p if p.shape[0] else np.zeros((0, width), dtype=np.uint8) for p in parts]
    return np.vstack(parts) if parts else zeros(0, width)


def matmul(a, b) -> np.ndarray:
    left = np.asarray(a, dtype=np.int64)
    right = np.asarray(b, dtype=np.int64)
    if left.shape[-1] != right.shape[0]:
        raise DimensionMismatch(
            DimensionMismatchMessage().error.format(left.shape, right.shape)
        )
    return ((left @ right) % 2).astype(np.uint8)


def pack_rows(m) -> np.ndarray:
    """Rows packed into little-endian uint64 words: column j is bit j % 64 of word j // 64."""
    mat = as_matrix(m)
    rows, cols = mat.shape
    width = -(-cols // WORD) * WORD
    padded = np.zeros((rows, width), dtype=np.uint8)
    padded[:, :cols] = mat
    packed = np.packbits(padded, axis=1, bitorder='little')
    return np.ascontiguousarray(packed).view(np.dtype('<u8'))


def unpack_rows(packed: np.ndarray, cols: int) -> np.ndarray:
    raw = np.ascontiguousarray(packed).view(np.uint8).reshape(packed.shape[0], -1)
    return np.unpackbits(raw, axis=1, count=cols, bitorder='little')


def rref(m) -> RowEchelon:
    """
    `rref` reduces a binary matrix over GF(2).
    Columns are scanned left to right and the lowest-index row holding a one becomes
    the pivot, so the result is deterministic for golden tests.
    """
    mat = as_matrix(m)
    rows, cols = mat.shape
    if not rows or not cols:
        return RowEchelon(matrix=mat.copy(), pivots=(), rank=0)
    packed = pack_rows(mat)
    pivots: List[int] = []
    row = 0
    for col in range(cols):
        if row == rows:
            break
        word, bit = divmod(col, WORD)
        shift, one = np.uint64(bit), np.uint64(1)
        candidates = np.flatnonzero((packed[row:, word] >> shift) & one)
        if candidates.size == 0:
            continue
        pivot = row + int(candidates[0])
        if pivot != row:
            packed[[row, pivot]] = packed[[pivot, row]]
        others = np.flatnonzero((packed[:, word] >> shift) & one)
        others = others[others != row]
        packed[others] ^= packed[row]
        pivots.append(col)
        row += 1
    return RowEchelon(matrix=unpack_rows(packed, cols), pivots=tuple(pivots), rank=len(pivots))


def rank(m) -> int:
    return rref(m).rank


def row_basis(m) -> np.ndarray:
    """Nonzero rows of the reduced form: a canonical basis of the row space."""
    echelon = rref(m)
    return echelon.matrix[:echelon.rank].copy()


def nullspace(m) -> np.ndarray:
    """
    `nullspace` returns a basis of {v : m v^T = 0}, one vector per row.
    The row count is cols(m) - rank(m); each basis vector has a single free column set.
    """
    echelon = rref(m)
    cols = echelon.matrix.shape[1]
    pivot_set = set(echelon.pivots)
    free = [c for c in range(cols) if c not in pivot_set]
    basis = zeros(len(free), cols)
    for i, column in enumerate(free):
        basis[i, column] = 1
        for r, pivot in enumerate(echelon.pivots):
            basis[i, pivot] = echelon.matrix[r, column]
    return basis


def solve(a, b) -> Optional[np.ndarray]:
    """
    `solve` returns some x with x·a = b, or None when the system is inconsistent.
    Free variables are set to zero, which gives the lexicographically least solution
    in pivot order.
    """
    mat = as_matrix(a)
    target = as_vector(b)
    rows, cols = mat.shape
    if target.size != cols:
        raise DimensionMismatch(DimensionMismatchMessage().error.format(cols, target.size))
    augmented = np.hstack([mat.T, target.reshape(-1, 1)])
    echelon = rref(augmented)
    if rows in echelon.pivots:
        return None
    solution = np.zeros(rows, dtype=np.uint8)
    for r, pivot in enumerate(echelon.pivots):
        solution[pivot] = echelon.matrix[r, rows]
    return solution


def inverse(m) -> Optional[np.ndarray]:
    mat = as_matrix(m)
    size = mat.shape[0]
    if mat.shape != (size, size):
        raise DimensionMismatch(DimensionMismatchMessage().error.format(mat.shape, "square"))
    echelon = rref(np.hstack([mat, identity(size)]))
    if echelon.pivots[:size] != tuple(range(size)):
        return None
    return echelon.matrix[:, size:].copy()


def in_span(basis, v) -> bool:
    basis = as_matrix(basis, cols=as_vector(v).size)
    if basis.shape[0] == 0:
        return not as_vector(v).any()
    return solve(basis, v) is not None


def span_elements(basis) -> np.ndarray:
    """All 2^r combinations of the basis rows, combination j uses the bits of j."""
    basis = as_matrix(basis)
    count = basis.shape[0]
    coefficients = ((np.arange(2 ** count)[:, None] >> np.arange(count)) & 1).astype(np.uint8)
    if count == 0:
        return zeros(1, basis.shape[1])
    return matmul(coefficients, basis)


def weight(v) -> int:
    return int(as_vector(v).sum())


def overlap(x, y) -> int:
    left, right = as_vector(x), as_vector(y)
    if left.size != right.size:
        raise DimensionMismatch(DimensionMismatchMessage().error.format(left.size, right.size))
    return int(np.sum(left & right))


def to_int(v) -> int:
    return sum(1 << int(j) for j in np.flatnonzero(as_vector(v)))


def from_int(value: int, length: int) -> np.ndarray:
    return np.array([(value >> j) & 1 for j in range(length)], dtype=np.uint8)


def row_key(v) -> bytes:
    """Bit-packed key of a vector, used for lookup tables."""
    return np.packbits(as_vector(v), bitorder='little').tobytes()


def format_vector(v) -> str:
    return ''.join(str(int(bit)) for bit in as_vector(v))


def parse_vector(text: str) -> np.ndarray:
    cleaned = ''.join(text.split())
    if not cleaned or set(cleaned) - {'0', '1'}:
        raise MalformedMatrix(MalformedMatrixMessage().error.format(0, f'bad bits "{text}"'))
    return np.array([int(c) for c in cleaned], dtype=np.uint8)


def format_matrix(m) -> str:
    mat = as_matrix(m)
    lines = [f'{mat.shape[0]} {mat.shape[1]}']
    lines.extend(' '.join(str(int(bit)) for bit in row) for row in mat)
    return '\n'.join(lines)


def parse_matrix(lines: Sequence[str], start: int = 0) -> Tuple[np.ndarray, int]:
    """
    `parse_matrix` reads the matrix text format starting at `lines[start]`.
    The first non-blank line is "rows cols", then one row per line written as 0/1
    characters, optionally separated by whitespace. Comments start with '#'.
    It returns the matrix and the index of the first unread line.
    """
    index = start
    header = None
    while index < len(lines):
        text = lines[index].split('#', 1)[0].strip()
        index += 1
        if text:
            header = text
            break
    if header is None:
        raise MalformedMatrix(MalformedMatrixMessage().error.format(index, 'missing "rows cols" header'))
    try:
        rows, cols = (int(token) for token in header.split())
    except ValueError as e:
        raise MalformedMatrix(
            MalformedMatrixMessage().error.format(index, f'bad header "{header}"')
        ) from e
    matrix = zeros(rows, cols)
    filled = 0
    while filled < rows:
        if index >= len(lines):
            raise MalformedMatrix(
                MalformedMatrixMessage().error.format(index, f'expected {rows} rows, got {filled}')
            )
        text = ''.join(lines[index].split('#', 1)[0].split())
        index += 1
        if not text:
            continue
        if len(text) != cols or set(text) - {'0', '1'}:
            raise MalformedMatrix(
                MalformedMatrixMessage().error.format(index, f'row "{text}" is not {cols} bits')
            )
        matrix[filled] = [int(c) for c in text]
        filled += 1
    logger.debug('parsed %dx%d matrix ending at line %d', rows, cols, index)
    return matrix, index
