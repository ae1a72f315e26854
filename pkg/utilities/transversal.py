"""
`transversal` module stores the legitimacy checks of transversal gates on CSS code blocks.

Every check is double-entry: a combinatorial condition on codeword weights or
overlaps, and an exact simulation of the gate on `SparseState` codewords. A gate is
reported legitimate only when both entries agree. Phases are sixteenths of a turn.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import partial, reduce
from typing import List, Optional, Sequence, Tuple

import numpy as np

from schemas.errors import PreconditionFailed as PreconditionFailedMessage
from schemas.transversal import LegitimacyReport
from utilities import gf2kit
from utilities.config import PHASE_UNIT
from utilities.csscode import CssCode, SparseState, encode_logical
from utilities.logicsim import branch_rng
from utilities.workers import run_partitioned

logger = logging.getLogger(__name__)

GATE_ARITY = {'P': 1, 'CP': 2, 'CCP': 3, 'CX': 2, 'H': 1, 'CZ': 2, 'S': 1, 'CCZ-CAT': 3}
MODULI = (2, 4, 8, 16)
HALF_TURN = PHASE_UNIT // 2


class PreconditionFailed(ValueError):
    pass


@dataclass(frozen=True)
class TransversalGate:
    """
    `TransversalGate` names one gate of the transversal inventory and, for the
    phase family, its modulus w: P(2π/w), C-P(4π/w), CC-P(8π/w).
    """
    kind: str
    w: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', self.kind.upper())
        if self.kind not in GATE_ARITY:
            raise ValueError(f'No such transversal gate like "{self.kind}"')
        if self.kind in ('P', 'CP', 'CCP') and self.w not in MODULI:
            raise ValueError(f'Phase gates need w in {MODULI}, got {self.w}')

    @property
    def arity(self) -> int:
        return GATE_ARITY[self.kind]


def _precondition(what: str, reason: str) -> PreconditionFailed:
    return PreconditionFailed(PreconditionFailedMessage().error.format(what, reason))


def _word(value: int, length: int) -> str:
    return gf2kit.format_vector(gf2kit.from_int(value, length)) if length else '-'


def _split(index: int, k: int, parts: int) -> List[int]:
    mask = (1 << k) - 1
    return [(index >> (k * i)) & mask for i in range(parts)]


def _encode(code: CssCode, u: int) -> SparseState:
    return encode_logical(code, gf2kit.from_int(u, code.k))


def _tensor(states: Sequence[SparseState]) -> SparseState:
    return reduce(lambda a, b: a.tensor(b), states)


def _select(bits: int, sample: Optional[int], seed: int) -> Tuple[List[int], bool]:
    """All 2^bits indices, or a seeded sample of them when `sample` is smaller."""
    total = 2 ** bits
    if not sample or total <= sample:
        return list(range(total)), False
    picks = branch_rng(seed).choice(total, size=sample, replace=False)
    return sorted(int(p) for p in picks), True


def _bilinear(code: CssCode, u: int, v: int) -> int:
    """u G v^T over GF(2) with G = D D^T."""
    if not code.k:
        return 0
    left, right = gf2kit.from_int(u, code.k), gf2kit.from_int(v, code.k)
    return int(left @ code.gram.astype(np.int64) @ right) % 2


def _angle(numerator: int, w: int) -> str:
    value = Fraction(2 * numerator, w) % 2
    if value == 0:
        return '0'
    top = '' if value.numerator == 1 else str(value.numerator)
    return f'{top}π' if value.denominator == 1 else f'{top}π/{value.denominator}'


def _report(code: CssCode, gate: str, combinatorial: bool, simulated: bool, action: str,
            witness: Optional[str], **extra) -> LegitimacyReport:
    legitimate = combinatorial and simulated
    if not legitimate and witness is None:
        witness = 'no witness recorded'
    report = LegitimacyReport(
        code=code.name, gate=gate, legitimate=legitimate, combinatorial=combinatorial,
        simulated=simulated, logical_action=action if legitimate else 'not legitimate',
        witness=None if legitimate else witness, **extra
    )
    logger.info('%s on %s: legitimate=%s', gate, code.name, report.legitimate)
    return report


def _block_overlap(word: int, n: int, blocks: int) -> int:
    mask = (1 << n) - 1
    common = mask
    for b in range(blocks):
        common &= word >> (b * n)
    return (common & mask).bit_count()


def _phase_tuple(code: CssCode, w: int, blocks: int, expected: List[int], index: int) -> Tuple[Optional[str], int]:
    us = _split(index, code.k, blocks)
    state = _tensor([_encode(code, u) for u in us])
    step = (PHASE_UNIT * 2 ** (blocks - 1)) // w
    phased = state.add_phase(lambda word: step * _block_overlap(word, code.n, blocks))
    offset = phased.relative_phase(state)
    target = expected[index]
    if offset != target:
        seen = 'not uniform' if offset is None else f'{offset}/16'
        return f'blocks={"".join(str(u) for u in us)} phase {seen}, expected {target}/16', len(state)
    return None, len(state)


def check_phase_gates(code: CssCode, w: int, jobs: int = 1) -> LegitimacyReport:
    """
    `check_phase_gates` function checks transversal P(2π/w), C-P(4π/w) and
    CC-P(8π/w) on a k = 1 code.
    It takes three parameters:
    1. `code` must encode one logical qubit.
    2. `w` is the modulus in {2, 4, 8, 16}.
    3. `jobs` spreads the three-block enumeration across workers.
    The combinatorial entry asks every |u>_L weight to share one residue r_u mod w,
    C0 pair overlaps to vanish mod w/2 and triple overlaps mod w/4. The simulated
    entry expects relative phases r, 2r, 4r (in units of 2π/w) on |1>, |11>, |111>.
    """
    if code.k != 1:
        raise _precondition('phase gates', f'k must be 1, got {code.k}')
    if w not in MODULI:
        raise _precondition('phase gates', f'w must be one of {MODULI}, got {w}')
    residues = []
    witness = None
    for u in (0, 1):
        words = sorted(_encode(code, u).words())
        values = {word.bit_count() % w for word in words}
        if len(values) > 1 and witness is None:
            first = words[0].bit_count() % w
            odd = next(word for word in words if word.bit_count() % w != first)
            witness = (f'|{u}>_L word {_word(odd, code.n)} has weight residue '
                       f'{odd.bit_count() % w} mod {w}, another has {first}')
        residues.append(min(values))
    uniform = witness is None
    c0 = code.c0_words.astype(np.int64)
    pairs = c0 @ c0.T
    pair_ok = bool(np.all(pairs % max(w // 2, 1) == 0))
    triple_ok = True
    if w >= 4:
        for x in c0:
            if np.any(((c0 * x) @ c0.T) % (w // 4)):
                triple_ok = False
                break
    if witness is None and not pair_ok:
        a, b = (int(i) for i in np.argwhere(pairs % (w // 2))[0])
        witness = f'C0 words {gf2kit.format_vector(c0[a])} and {gf2kit.format_vector(c0[b])} overlap {pairs[a, b]}'
    if witness is None and not triple_ok:
        witness = f'C0 triple overlap is not a multiple of {w // 4}'
    combinatorial = uniform and pair_ok and triple_ok
    r0, r1 = residues
    r = (r1 - r0) % w
    simulated = True
    terms = checked = 0
    for blocks in (1, 2, 3):
        expected = []
        for index in range(2 ** blocks):
            product = int(all(_split(index, 1, blocks)))
            expected.append((PHASE_UNIT * (r0 + 2 ** (blocks - 1) * r * product) // w) % PHASE_UNIT)
        results = run_partitioned(partial(_phase_tuple, code, w, blocks, expected), range(2 ** blocks), jobs)
        for failure, count in results:
            terms += count
            checked += 1
            if failure is not None:
                simulated = False
                witness = witness or f'{["P", "C-P", "CC-P"][blocks - 1]}: {failure}'
    action = f'P({_angle(r, w)})'
    details = [
        f'residues r0={r0} r1={r1} mod {w}',
        f'C-P({_angle(2 * r, w)}) on two blocks',
        f'CC-P({_angle(4 * r, w)}) on three blocks',
    ]
    return _report(code, 'P', combinatorial, simulated, action, witness, w=w,
                   global_phase=(PHASE_UNIT * r0 // w) % PHASE_UNIT, checked=checked, terms=terms, details=details)


def _cnot_pair(code: CssCode, index: int) -> Tuple[Optional[str], int]:
    u, v = _split(index, code.k, 2)
    state = _encode(code, u).tensor(_encode(code, v))
    mask = (1 << code.n) - 1
    moved = state.permute(lambda word: word ^ ((word & mask) << code.n))
    expected = _encode(code, u).tensor(_encode(code, u ^ v))
    if moved.relative_phase(expected) != 0:
        return f'u={_word(u, code.k)} v={_word(v, code.k)}', len(state)
    return None, len(state)


def _row_name(code: CssCode, index: int) -> str:
    return f'G0 row {index}' if index < code.kappa else f'D row {index - code.kappa}'


def _x_words(code: CssCode) -> np.ndarray:
    """Generators of every codeword term: the G0 rows, then the D rows."""
    return gf2kit.stack(code.x_checks, code.leaders, cols=code.n)


def _z_checks_clash(code: CssCode) -> Optional[str]:
    """Witness of a Z check that flips the sign of some codeword term, None when all fix them."""
    words = _x_words(code)
    if not code.kappa_z or not words.shape[0]:
        return None
    odd = np.argwhere(gf2kit.matmul(code.z_checks, words.T))
    if not odd.size:
        return None
    row, column = (int(i) for i in odd[0])
    return f'Z check row {row} meets {_row_name(code, column)} oddly'


def _odd_overlap(code: CssCode, cat: Optional[np.ndarray] = None) -> Optional[str]:
    """
    Witness of an odd overlap |c x y| with x a G0 row and y a G0 or D row, where c is
    the cat word (all ones when omitted); None when every overlap is even. The parity
    is bilinear in x and y, so the generators settle it for all of C0 + span(D).
    """
    words = _x_words(code)
    for i, x in enumerate(code.x_checks):
        masked = x if cat is None else x & cat
        odd = np.flatnonzero(gf2kit.matmul(masked.reshape(1, -1), words.T)[0])
        if odd.size:
            return f'G0 row {i} and {_row_name(code, int(odd[0]))} overlap oddly'
    return None


def check_cnot(code: CssCode, sample: Optional[int] = None, seed: int = 0, jobs: int = 1) -> LegitimacyReport:
    """
    `check_cnot` function checks blockwise CX on every pair |u>_L|v>_L,
    or on a seeded sample of pairs when `sample` is smaller than 2^(2k).
    The combinatorial entry asks every Z check to be even on the G0 and D rows, so
    that the sum of two codeword terms is again fixed by the Z stabilizers.
    """
    clash = _z_checks_clash(code)
    indices, sampled = _select(2 * code.k, sample, seed)
    results = run_partitioned(partial(_cnot_pair, code), indices, jobs)
    failures = [failure for failure, _ in results if failure is not None]
    action = 'blockwise CX' if code.k else 'identity (k = 0)'
    return _report(code, 'CX', clash is None, not failures, action, clash or (failures[0] if failures else None),
                   checked=len(indices), terms=sum(count for _, count in results), sampled=sampled)


def walsh_hadamard(state: SparseState) -> SparseState:
    """
    Transversal H on a real-signed `SparseState`; the transform must again have equal
    magnitudes on its support.
    """
    if any(p % HALF_TURN for p in state.terms.values()):
        raise ValueError('Transversal H is only simulated on real-signed states')
    vector = np.zeros(2 ** state.n, dtype=np.int64)
    for word, phase in state.terms.items():
        vector[word] = -1 if phase else 1
    h = 1
    while h < vector.size:
        vector = vector.reshape(-1, 2, h)
        vector = np.stack([vector[:, 0, :] + vector[:, 1, :], vector[:, 0, :] - vector[:, 1, :]], axis=1)
        h *= 2
    vector = vector.reshape(-1)
    support = np.flatnonzero(vector)
    magnitudes = set(np.abs(vector[support]).tolist())
    if len(magnitudes) > 1:
        raise ValueError('Transversal H left the equal-weight superpositions')
    return SparseState(state.n, {int(word): (HALF_TURN if vector[word] < 0 else 0) for word in support})


def _hadamard_basis(code: CssCode, u: int) -> Tuple[Optional[str], int]:
    image = walsh_hadamard(_encode(code, u))
    expected = SparseState(code.n)
    for v in range(2 ** code.k):
        sign = HALF_TURN * _bilinear(code, u, v)
        expected.terms.update(_encode(code, v).shifted(sign).terms)
    if image.relative_phase(expected) is None:
        return f'u={_word(u, code.k)}', len(image)
    return None, len(image)


def _require_self_orthogonal(code: CssCode, gate: str) -> None:
    if not code.dual_contained:
        raise _precondition(gate, 'C0 is not contained in its dual')


def _overlap_entry(code: CssCode, symmetric_needed: bool = False,
                   cat: Optional[np.ndarray] = None) -> Optional[str]:
    """Witness against the combinatorial entry of H, CZ and CCZ-cat, None when it holds."""
    if symmetric_needed and not code.symmetric:
        return 'the Z stabilizers do not span C0'
    if not code.zbar_consistent:
        return f'logical Z support of qubit {code.zbar_clash()} leaves the dual of C0'
    return _odd_overlap(code, cat)


def _gram_details(code: CssCode) -> List[str]:
    return [f'gram {gf2kit.format_vector(row)}' for row in code.gram]


def check_hadamard(code: CssCode, sample: Optional[int] = None, seed: int = 0, jobs: int = 1) -> LegitimacyReport:
    """
    `check_hadamard` function expands H^n|u>_L over the 2^(n-kappa) words of the dual
    of C0 and matches the pattern sum over v of (-1)^(u G v^T)|v>_L, G = D D^T.
    The combinatorial entry asks for a symmetric code, logical Z supports inside the
    dual of C0 and even overlaps between the G0 rows and the G0 and D rows.
    """
    _require_self_orthogonal(code, 'H')
    witness = _overlap_entry(code, symmetric_needed=True)
    indices, sampled = _select(code.k, sample, seed)
    results = run_partitioned(partial(_hadamard_basis, code), indices, jobs)
    failures = [failure for failure, _ in results if failure is not None]
    action = 'blockwise H' if code.ddt_identity else 'H followed by the transform (-1)^(u G v^T)'
    return _report(code, 'H', witness is None, not failures, action, witness or (failures[0] if failures else None),
                   checked=len(indices), terms=sum(count for _, count in results), sampled=sampled,
                   details=_gram_details(code))


def _cz_pair(code: CssCode, cat: Optional[int], index: int) -> Tuple[Optional[str], int]:
    u, v = _split(index, code.k, 2)
    blocks = [_encode(code, u), _encode(code, v)]
    if cat is not None:
        blocks.append(SparseState.from_words(code.n, [((1 << code.n) - 1) if cat else 0]))
    state = _tensor(blocks)
    phased = state.add_phase(lambda word: HALF_TURN * (_block_overlap(word, code.n, len(blocks)) % 2))
    target = HALF_TURN * ((1 if cat is None else cat) * _bilinear(code, u, v))
    offset = phased.relative_phase(state)
    if offset != target:
        seen = 'not uniform over terms' if offset is None else f'{offset}/16'
        label = '' if cat is None else f' a={cat}'
        return f'u={_word(u, code.k)} v={_word(v, code.k)}{label}: phase {seen}, expected {target}/16', len(state)
    return None, len(state)


def check_cz(code: CssCode, sample: Optional[int] = None, seed: int = 0, jobs: int = 1) -> LegitimacyReport:
    """
    `check_cz` function checks the phase (-1)^(u G v^T) of transversal CZ on every basis
    pair; the combinatorial entry is the even-overlap condition of `check_hadamard`
    without symmetry.
    """
    _require_self_orthogonal(code, 'CZ')
    witness = _overlap_entry(code)
    indices, sampled = _select(2 * code.k, sample, seed)
    results = run_partitioned(partial(_cz_pair, code, None), indices, jobs)
    failures = [failure for failure, _ in results if failure is not None]
    action = 'blockwise CZ' if code.ddt_identity else 'CZ-type phase (-1)^(u G v^T)'
    return _report(code, 'CZ', witness is None, not failures, action, witness or (failures[0] if failures else None),
                   checked=len(indices), terms=sum(count for _, count in results), sampled=sampled,
                   details=_gram_details(code))


def _s_basis(code: CssCode, u: int) -> Tuple[Optional[str], Optional[str], int]:
    state = _encode(code, u)
    leader = gf2kit.to_int(code.leader_word(gf2kit.from_int(u, code.k)))
    base = leader.bit_count() % 4
    odd = next((word for word in state.words() if word.bit_count() % 4 != base), None)
    combinatorial = None if odd is None else f'|x + uD| = {odd.bit_count()} for u={_word(u, code.k)}'
    phased = state.add_phase(lambda word: (PHASE_UNIT // 4) * (word.bit_count() % 4))
    offset = phased.relative_phase(state)
    simulated = None if offset == (PHASE_UNIT // 4) * base else f'u={_word(u, code.k)} phase {offset}'
    return combinatorial, simulated, len(state)


def check_s(code: CssCode, sample: Optional[int] = None, seed: int = 0, jobs: int = 1) -> LegitimacyReport:
    """
    `check_s` function checks transversal S: every |x + uD| must agree with |uD| mod 4,
    and the simulated phase of |u>_L must be i^|uD|. With D D^T = I the action is
    S^(r_i) on logical qubit i, r_i = |D_i| mod 4.
    """
    for index, row in enumerate(code.x_checks):
        if gf2kit.weight(row) % 4:
            raise _precondition('S', f'row {index} of G0 has weight {gf2kit.weight(row)}, not a multiple of 4')
    if not code.dual_contained:
        raise _precondition('S', 'C0 is not contained in its dual')
    indices, sampled = _select(code.k, sample, seed)
    results = run_partitioned(partial(_s_basis, code), indices, jobs)
    combinatorial = [entry for entry, _, _ in results if entry is not None]
    simulated = [entry for _, entry, _ in results if entry is not None]
    powers = [gf2kit.weight(row) % 4 for row in code.leaders]
    if code.ddt_identity:
        action = f'S^{powers[0]}' if code.k == 1 else 'S^r per logical qubit, r=' + ''.join(map(str, powers))
    else:
        action = 'phase i^|uD|'
    details = []
    if code.k <= 3:
        for u in indices:
            leader = code.leader_word(gf2kit.from_int(u, code.k))
            details.append(f'u={_word(u, code.k)} phase=i^{gf2kit.weight(leader) % 4}')
    witness = (combinatorial or simulated or [None])[0]
    return _report(code, 'S', not combinatorial, not simulated, action, witness, checked=len(indices),
                   terms=sum(count for _, _, count in results), sampled=sampled, details=details)


def check_ccz_cat(code: CssCode, sample: Optional[int] = None, seed: int = 0, jobs: int = 1) -> LegitimacyReport:
    """
    `check_ccz_cat` function checks transversal CCZ with the third block in |a^n>,
    a in {0, 1}: the phase must be (-1)^(a u G v^T) on every term of every pair.
    The combinatorial entry asks the triple overlaps |a^n x y| to be even for both cat
    words, x a G0 row and y a G0 or D row.
    """
    cz = check_cz(code, sample, seed, jobs)
    if not cz.legitimate:
        raise _precondition('CCZ-cat', 'transversal CZ is not legitimate')
    witness = None
    for a in (0, 1):
        witness = witness or _overlap_entry(code, cat=np.full(code.n, a, dtype=np.uint8))
    indices, sampled = _select(2 * code.k, sample, seed)
    failures, terms = [], 0
    for cat in (0, 1):
        results = run_partitioned(partial(_cz_pair, code, cat), indices, jobs)
        failures.extend(failure for failure, _ in results if failure is not None)
        terms += sum(count for _, count in results)
    action = 'blockwise CZ controlled by the cat' if code.ddt_identity else 'phase (-1)^(a u G v^T)'
    return _report(code, 'CCZ-cat', witness is None, not failures, action,
                   witness or (failures[0] if failures else None),
                   checked=2 * len(indices), terms=terms, sampled=sampled)


def check_transversal(code: CssCode, gate: TransversalGate, sample: Optional[int] = None,
                      seed: int = 0, jobs: int = 1) -> LegitimacyReport:
    if gate.kind in ('P', 'CP', 'CCP'):
        return check_phase_gates(code, gate.w, jobs)
    checks = {'CX': check_cnot, 'H': check_hadamard, 'CZ': check_cz, 'S': check_s, 'CCZ-CAT': check_ccz_cat}
    return checks[gate.kind](code, sample=sample, seed=seed, jobs=jobs)
