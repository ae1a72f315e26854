"""
`ftnet` module stores the fault-tolerant network model: blocks laid out over time
steps that each end in a global recovery, the network text format, the builtin
constructions, resource accounting, simulation at the logical and the physical
level, fault injection and the single-online-step compiler for Clifford networks.
"""
import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from itertools import product as cartesian
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from schemas.errors import (
    InvalidPlacement as InvalidPlacementMessage, LevelMismatch as LevelMismatchMessage,
    NonCliffordGate as NonCliffordGateMessage, ParseError as ParseErrorMessage,
    UnknownBuiltin as UnknownBuiltinMessage, WrongNetwork as WrongNetworkMessage,
)
from schemas.networks import FaultReport, ResourceReport, ToffoliAnalysis
from utilities.config import Settings, VERIFY_TRIALS, settings as default_settings
from utilities.csscode import CssCode
from utilities.logicsim import (
    DenseState, MeasurementRecord, Tableau, TraceEvent, branch_rng, fidelity, random_clifford_circuit
)
from utilities.pauli import (
    CLIFFORD_GATES, LogicalObservable, PauliOp, conjugate_circuit, min_weight_modulo
)
from utilities.recovery import (
    CliffordObservable, EncodedRegister, MergedMeasurementSpec, cat_measure, encode_zero,
    merged_measure, prepare_bit, prepare_logical_bell
)
from utilities.workers import run_partitioned

logger = logging.getLogger(__name__)

ROLES = ('memory', 'accumulator', 'ancilla', 'cat')
LABELS = ('online', 'offline')
LEVELS = ('logical', 'physical')
OP_KINDS = ('prep', 'bell', 'tgate', 'pgate', 'meas', 'catmeas', 'cond', 'recover')
DENSE_GATES = {'T': 1, 'CS': 2, 'CCX': 3, 'CCZ': 3}
GATES = {**CLIFFORD_GATES, **DENSE_GATES}
PAULI_STATES = {'0': ('Z', 1), '1': ('Z', -1), '+': ('X', 1), '-': ('X', -1)}
FORMAT_VERSION = 'v1'
TOLERANCE = 1e-9
# Branch of the generator that draws verification cases; runs use branches 0, 1, ...
CASE_BRANCH = 2 ** 31

Address = Tuple[str, Optional[int]]
Gate = Tuple[str, List[int]]


class NetworkParseError(ValueError):
    pass


class InvalidPlacement(ValueError):
    pass


class LevelMismatch(ValueError):
    pass


class UnknownBuiltin(ValueError):
    pass


class NonCliffordGate(ValueError):
    pass


class WrongNetwork(ValueError):
    pass


def _placement(what: str, reason: str) -> InvalidPlacement:
    return InvalidPlacement(InvalidPlacementMessage().error.format(what, reason))


def _level(what: str, level: str) -> LevelMismatch:
    return LevelMismatch(LevelMismatchMessage().error.format(what, level))


def parse_address(text: str, separator: str = ':') -> Address:
    block, found, bit = text.partition(separator)
    if not block:
        raise ValueError(f'bad address "{text}"')
    return block, (int(bit) if found else None)


def format_address(address: Address, separator: str = ':') -> str:
    block, bit = address
    return block if bit is None else f'{block}{separator}{bit}'


def parse_action(text: str) -> List[Gate]:
    """`parse_action` reads "I" or gate lines joined by ';', e.g. "CX 0 1; CX 2 3"."""
    gates = []
    for part in text.split(';'):
        tokens = part.split()
        if not tokens or tokens == ['I']:
            continue
        name = tokens[0].upper()
        if name not in GATES or GATES[name] != len(tokens) - 1:
            raise ValueError(f'bad action gate "{part.strip()}"')
        gates.append((name, [int(t) for t in tokens[1:]]))
    return gates


def format_action(gates: Sequence[Gate]) -> str:
    return '; '.join(f'{name} {" ".join(map(str, targets))}' for name, targets in gates) or 'I'


@dataclass
class Block:
    name: str
    role: str


@dataclass
class BlockOp:
    """
    `BlockOp` is one operation of a time step. `targets` are (block, bit) addresses,
    bit None meaning the whole block; for `pgate` the bit is a physical qubit.
    """
    kind: str
    targets: List[Address]
    gate: Optional[str] = None
    letters: Optional[str] = None
    state: Optional[str] = None
    label: Optional[str] = None
    condition: Optional[str] = None
    gate_targets: List[Address] = field(default_factory=list)
    override: Optional[str] = None

    @property
    def blocks(self) -> List[str]:
        return list(dict.fromkeys(block for block, _ in self.targets + self.gate_targets))

    @property
    def blockwise(self) -> bool:
        return self.kind == 'tgate' and all(bit is None for _, bit in self.targets)

    @property
    def two_block(self) -> bool:
        """An unconditional set of gates connecting different blocks."""
        return self.kind in ('tgate', 'pgate') and len(self.blocks) > 1

    def effective_label(self, step_label: str) -> str:
        if self.kind in ('prep', 'bell'):
            return 'offline'
        return self.override or step_label

    def __str__(self) -> str:
        addresses = ' '.join(format_address(t, '.' if self.kind == 'pgate' else ':') for t in self.targets)
        if self.kind == 'prep':
            line = f'PREP {addresses} {self.state}'
        elif self.kind == 'bell':
            line = f'PREP {format_address(self.targets[0])} BELL {format_address(self.targets[1])}'
        elif self.kind in ('tgate', 'pgate'):
            line = f'{self.kind.upper()} {self.gate} {addresses}'
        elif self.kind == 'meas':
            line = f'MEAS {self.letters} {addresses} -> {self.label}'
        elif self.kind == 'catmeas':
            extra = ' '.join(format_address(t) for t in self.gate_targets)
            line = f'CATMEAS {self.letters} {addresses} {self.gate} {extra} -> {self.label}'
        elif self.kind == 'cond':
            line = f'COND {self.condition}=-1 APPLY {self.gate or self.letters} {addresses}'
        else:
            line = 'RECOVER'
        return f'{line} @{self.override}' if self.override else line


@dataclass
class TimeStep:
    label: str
    ops: List[BlockOp] = field(default_factory=list)


@dataclass
class Network:
    """
    `Network` is a named layout of blocks holding k logical bits each and the time
    steps run over them; `inputs`, `outputs` and `action` advertise what it computes.
    """
    name: str
    k: int
    blocks: List[Block]
    steps: List[TimeStep] = field(default_factory=list)
    inputs: List[Address] = field(default_factory=list)
    outputs: List[Address] = field(default_factory=list)
    action: List[Gate] = field(default_factory=list)

    def block_index(self, name: str) -> int:
        for index, block in enumerate(self.blocks):
            if block.name == name:
                return index
        raise _placement(self.name, f'no block named "{name}"')

    def role(self, name: str) -> str:
        return self.blocks[self.block_index(name)].role

    def ops(self):
        for index, step in enumerate(self.steps, start=1):
            for op in step.ops:
                yield index, step, op

    @property
    def needs_dense(self) -> bool:
        gates = [op.gate for _, _, op in self.ops() if op.kind in ('tgate', 'cond') and op.gate]
        gates += [name for name, _ in self.action]
        return any(op.kind == 'catmeas' for _, _, op in self.ops()) or any(g not in CLIFFORD_GATES for g in gates)

    def validate(self) -> 'Network':
        """
        Checks names, roles and addresses, that conditions only use earlier outcomes,
        and that within a step no block takes part in two different sets of
        gates connecting blocks.
        """
        if self.k < 1:
            raise _placement(self.name, f'k must be positive, got {self.k}')
        names = [block.name for block in self.blocks]
        if len(set(names)) != len(names):
            raise _placement(self.name, 'block names repeat')
        for block in self.blocks:
            if block.role not in ROLES:
                raise _placement(self.name, f'unknown role "{block.role}" of block {block.name}')
        for address in self.inputs + self.outputs:
            self._check_address(address, bit_required=True)
        if len(self.inputs) != len(self.outputs):
            raise _placement(self.name, f'{len(self.inputs)} inputs but {len(self.outputs)} outputs')
        for name, targets in self.action:
            if any(not 0 <= t < len(self.inputs) for t in targets):
                raise _placement(self.name, f'action gate {name} {targets} leaves the {len(self.inputs)} inputs')
        seen = set()
        for index, step in enumerate(self.steps, start=1):
            if step.label not in LABELS:
                raise _placement(self.name, f'step {index} has label "{step.label}"')
            partners: Dict[str, frozenset] = {}
            for op in step.ops:
                self._check_op(op, index, seen)
                if op.two_block:
                    group = frozenset(op.blocks)
                    for block in group:
                        if partners.setdefault(block, group) != group:
                            raise _placement(
                                self.name, f'block {block} joins two sets of block-connecting gates in step {index}'
                            )
        return self

    def _check_address(self, address: Address, bit_required: bool = False, physical: bool = False) -> None:
        block, bit = address
        self.block_index(block)
        if bit is None and bit_required:
            raise _placement(self.name, f'address {block} needs a bit')
        if bit is not None and (bit < 0 or (not physical and bit >= self.k)):
            raise _placement(self.name, f'bit {bit} of block {block} is outside k = {self.k}')

    def _check_op(self, op: BlockOp, index: int, seen: set) -> None:
        if op.kind not in OP_KINDS:
            raise _placement(self.name, f'unknown operation "{op.kind}" in step {index}')
        if op.override not in (None,) + LABELS:
            raise _placement(self.name, f'unknown label override "{op.override}"')
        whole_allowed = op.kind in ('prep', 'tgate')
        for address in op.targets:
            self._check_address(address, bit_required=not whole_allowed, physical=op.kind == 'pgate')
        for address in op.gate_targets:
            self._check_address(address, bit_required=True)
        if op.kind in ('tgate', 'pgate', 'cond', 'catmeas') and op.gate is not None:
            arity = GATES.get(op.gate)
            count = len(op.gate_targets) if op.kind == 'catmeas' else len(op.targets)
            if arity is None or arity != count:
                raise _placement(self.name, f'gate {op.gate} does not fit {count} targets in step {index}')
        if op.kind == 'tgate' and len({bit is None for _, bit in op.targets}) > 1:
            raise _placement(self.name, f'{op} mixes whole blocks and bits')
        if op.kind in ('meas', 'catmeas') or (op.kind == 'cond' and op.gate is None):
            if not op.letters or len(op.letters) != len(op.targets) or set(op.letters) - set('XYZ'):
                raise _placement(self.name, f'{op} needs one Pauli letter per target')
        if op.kind == 'cond' and op.condition not in seen:
            raise _placement(self.name, f'{op} uses an outcome not measured before step {index} ends')
        if op.kind == 'bell' and op.targets[0] == op.targets[1]:
            raise _placement(self.name, f'{op} pairs a bit with itself')
        if op.kind in ('meas', 'catmeas'):
            if op.label in seen:
                raise _placement(self.name, f'label {op.label} is measured twice')
            seen.add(op.label)


def _strip_override(tokens: List[str]) -> Tuple[List[str], Optional[str]]:
    if tokens and tokens[-1].startswith('@'):
        return tokens[:-1], tokens[-1][1:]
    return tokens, None


def _letters_for(text: str, count: int) -> str:
    letters = text.upper()
    return letters * count if len(letters) == 1 else letters


def _parse_op(tokens: List[str]) -> BlockOp:
    tokens, override = _strip_override(tokens)
    head = tokens[0].upper()
    if head == 'PREP':
        if len(tokens) == 4 and tokens[2].upper() == 'BELL':
            op = BlockOp('bell', [parse_address(tokens[1]), parse_address(tokens[3])])
        else:
            if len(tokens) < 3 or tokens[-1] not in ('0', '+'):
                raise ValueError('expected "PREP <address>... <0|+>"')
            op = BlockOp('prep', [parse_address(t) for t in tokens[1:-1]], state=tokens[-1])
    elif head in ('TGATE', 'PGATE'):
        if len(tokens) < 3:
            raise ValueError(f'expected "{head} <gate> <address>..."')
        separator = '.' if head == 'PGATE' else ':'
        op = BlockOp(head.lower(), [parse_address(t, separator) for t in tokens[2:]], gate=tokens[1].upper())
    elif head in ('MEAS', 'CATMEAS'):
        if len(tokens) < 5 or tokens[-2] != '->':
            raise ValueError(f'expected "{head} <letters> <address>... -> <label>"')
        body, label = tokens[2:-2], tokens[-1]
        if head == 'MEAS':
            op = BlockOp('meas', [parse_address(t) for t in body], letters=_letters_for(tokens[1], len(body)), label=label)
        else:
            split = next((i for i, t in enumerate(body) if t.upper() in ('CX', 'CZ')), None)
            if split is None:
                raise ValueError('CATMEAS needs a CX or CZ part')
            targets = [parse_address(t) for t in body[:split]]
            op = BlockOp('catmeas', targets, gate=body[split].upper(), letters=_letters_for(tokens[1], len(targets)),
                         label=label, gate_targets=[parse_address(t) for t in body[split + 1:]])
    elif head == 'COND':
        if len(tokens) < 5 or tokens[2].upper() != 'APPLY' or not tokens[1].endswith('=-1'):
            raise ValueError('expected "COND <label>=-1 APPLY <pauli|gate> <address>..."')
        targets = [parse_address(t) for t in tokens[4:]]
        what = tokens[3].upper()
        if what in GATES and len(what) > 1:
            op = BlockOp('cond', targets, gate=what, condition=tokens[1][:-3])
        else:
            op = BlockOp('cond', targets, letters=_letters_for(what, len(targets)), condition=tokens[1][:-3])
    elif head == 'RECOVER':
        op = BlockOp('recover', [])
    else:
        raise ValueError(f'unknown op "{tokens[0]}"')
    op.override = override
    return op


def parse_network(lines: Sequence[str]) -> Network:
    """
    `parse_network` function reads the network text format. The first line is
    `NETWORK <name> v1 k=<k>`, followed by `BLOCK`, `INPUT`, `OUTPUT` and `ACTION`
    declarations and then `STEP <online|offline>` sections of op lines.
    Blank lines and '#' comments are skipped; errors carry 1-based line numbers.
    """
    net = None
    for number, raw in enumerate(lines, start=1):
        text = raw.split('#', 1)[0].strip()
        if not text:
            continue
        tokens = text.split()
        head = tokens[0].upper()
        try:
            if net is None:
                if head != 'NETWORK' or len(tokens) != 4 or not tokens[3].startswith('k='):
                    raise ValueError('expected "NETWORK <name> v1 k=<k>" first')
                if tokens[2] != FORMAT_VERSION:
                    raise ValueError(f'unsupported format version "{tokens[2]}"')
                net = Network(tokens[1], int(tokens[3][2:]), [])
            elif head == 'BLOCK':
                if len(tokens) != 3:
                    raise ValueError('expected "BLOCK <name> <role>"')
                net.blocks.append(Block(tokens[1], tokens[2].lower()))
            elif head in ('INPUT', 'OUTPUT'):
                getattr(net, head.lower() + 's').extend(parse_address(t) for t in tokens[1:])
            elif head == 'ACTION':
                net.action = parse_action(text[len(tokens[0]):])
            elif head == 'STEP':
                if len(tokens) != 2 or tokens[1].lower() not in LABELS:
                    raise ValueError('expected "STEP <online|offline>"')
                net.steps.append(TimeStep(tokens[1].lower()))
            else:
                if not net.steps:
                    raise ValueError(f'"{tokens[0]}" comes before any STEP')
                net.steps[-1].ops.append(_parse_op(tokens))
        except (ValueError, IndexError) as e:
            raise NetworkParseError(ParseErrorMessage().error.format(number, e)) from e
    if net is None:
        raise NetworkParseError(ParseErrorMessage().error.format(len(lines), 'no NETWORK header'))
    try:
        return net.validate()
    except InvalidPlacement as e:
        raise NetworkParseError(ParseErrorMessage().error.format(len(lines), e)) from e


def format_network(net: Network) -> str:
    lines = [f'NETWORK {net.name} {FORMAT_VERSION} k={net.k}']
    lines += [f'BLOCK {block.name} {block.role}' for block in net.blocks]
    if net.inputs:
        lines.append('INPUT ' + ' '.join(map(format_address, net.inputs)))
        lines.append('OUTPUT ' + ' '.join(map(format_address, net.outputs)))
        lines.append(f'ACTION {format_action(net.action)}')
    for step in net.steps:
        lines.append(f'STEP {step.label}')
        lines += [f'  {op}' for op in step.ops]
    return '\n'.join(lines) + '\n'


def resources(net: Network) -> ResourceReport:
    """
    `resources` function counts blocks, steps and area per label.
    A step is online when it holds an online op; preparations are always offline.
    Blocks are those touched during steps of the label, and the area sums, step by
    step, the blocks touched by ops of the label.
    """
    counts = {label: {'steps': 0, 'blocks': set(), 'area': 0} for label in LABELS}
    for step in net.steps:
        labelled = [(op, op.effective_label(step.label)) for op in step.ops]
        step_label = 'online' if any(label == 'online' for _, label in labelled) else 'offline'
        counts[step_label]['steps'] += 1
        for op, _ in labelled:
            counts[step_label]['blocks'].update(op.blocks)
        for label in LABELS:
            counts[label]['area'] += len({b for op, own in labelled if own == label for b in op.blocks})
    return ResourceReport(
        network=net.name,
        **{f'{what}_{label}': len(entry[what]) if what == 'blocks' else entry[what]
           for label, entry in counts.items() for what in ('blocks', 'steps', 'area')}
    )


# Builtin constructions

def _prep(state: str, *targets: Address) -> BlockOp:
    return BlockOp('prep', list(targets), state=state)


def _bell(a: Address, b: Address) -> BlockOp:
    return BlockOp('bell', [a, b])


def _tgate(gate: str, *targets: Address, override: Optional[str] = None) -> BlockOp:
    return BlockOp('tgate', list(targets), gate=gate, override=override)


def _meas(letters: str, label: str, *targets: Address, override: Optional[str] = None) -> BlockOp:
    return BlockOp('meas', list(targets), letters=_letters_for(letters, len(targets)), label=label, override=override)


def _cond(label: str, what: str, *targets: Address, override: Optional[str] = None) -> BlockOp:
    if what in GATES and len(what) > 1:
        return BlockOp('cond', list(targets), gate=what, condition=label, override=override)
    return BlockOp('cond', list(targets), letters=_letters_for(what, len(targets)), condition=label, override=override)


def _bits(block: str, k: int, skip: Sequence[int] = ()) -> List[Address]:
    return [(block, m) for m in range(k) if m not in skip]


def _prep_rest(state: str, block: str, k: int, skip: Sequence[int]) -> List[BlockOp]:
    rest = _bits(block, k, skip)
    return [_prep(state, *rest)] if rest else []


def _need(name: str, k: int, minimum: int) -> None:
    if k < minimum:
        raise _placement(name, f'needs k >= {minimum}, got {k}')


def _check_bits(name: str, k: int, *bits: int) -> None:
    for bit in bits:
        if not 0 <= bit < k:
            raise _placement(name, f'bit {bit} is outside k = {k}')


def transversal_cx(k: int) -> Network:
    blocks = [Block('C', 'memory'), Block('T', 'memory')]
    steps = [TimeStep('online', [_tgate('CX', ('C', None), ('T', None))])]
    inputs = _bits('C', k) + _bits('T', k)
    return Network('transversal-cx', k, blocks, steps, inputs, list(inputs), [('CX', [m, k + m]) for m in range(k)])


def transfer_out(k: int, bit: int = 0) -> Network:
    """Moves bit `bit` of memory block S to the free slot of accumulator D (online)."""
    _check_bits('transfer-out', k, bit)
    blocks = [Block('S', 'memory'), Block('D', 'accumulator')]
    steps = [
        TimeStep('offline', [_prep('0', ('D', bit))] + _prep_rest('+', 'D', k, [bit])),
        TimeStep('online', [
            _tgate('CX', ('S', None), ('D', None)),
            _meas('X', 's', ('S', bit)),
            _cond('s', 'Z', ('D', bit)),
            _prep('0', ('S', bit)),
        ]),
    ]
    return Network('transfer-out', k, blocks, steps, [('S', bit)], [('D', bit)], [])


def transfer_in(k: int, bit: int = 0) -> Network:
    """Moves bit `bit` of accumulator S back into the free slot of memory block D (offline)."""
    _check_bits('transfer-in', k, bit)
    blocks = [Block('S', 'accumulator'), Block('D', 'memory')]
    steps = [
        TimeStep('offline', _prep_rest('+', 'S', k, [bit]) + [_prep('+', ('D', bit))]),
        TimeStep('offline', [
            _tgate('CX', ('D', None), ('S', None)),
            _meas('Z', 'g', ('S', bit)),
            _cond('g', 'X', ('D', bit)),
            _prep('0', ('S', bit)),
        ]),
    ]
    return Network('transfer-in', k, blocks, steps, [('S', bit)], [('D', bit)], [])


def _pair_into(ancilla: str, other: str, k: int, i: int, j: int) -> Tuple[List[BlockOp], List[BlockOp]]:
    """
    Two offline steps leaving a Bell pair between ancilla:i and other:j, with every
    other bit of the ancilla in |+>; other:j must be free.
    """
    if i != j:
        first = [_bell((ancilla, i), (ancilla, j))] + _prep_rest('0', ancilla, k, [i, j])
    else:
        first = [_prep('+', (ancilla, i))] + _prep_rest('0', ancilla, k, [i])
    first += [_prep('0', (other, j))]
    second = [_tgate('CX', (ancilla, None), (other, None))]
    if i != j:
        second += [_meas('X', 't', (ancilla, j)), _cond('t', 'Z', (other, j))]
    second += _prep_rest('+', ancilla, k, [i])
    return first, second


def teleport(k: int, source: int = 0, target: int = 0) -> Network:
    """Teleports S:source into D:target in three steps, the last one online."""
    _check_bits('teleport', k, source, target)
    blocks = [Block('S', 'memory'), Block('E', 'ancilla'), Block('D', 'accumulator')]
    first, second = _pair_into('E', 'D', k, source, target)
    first += _prep_rest('+', 'D', k, [target])
    steps = [
        TimeStep('offline', first),
        TimeStep('offline', second),
        TimeStep('online', [
            _tgate('CX', ('S', None), ('E', None)),
            _meas('X', 'a', ('S', source)),
            _meas('Z', 'b', ('E', source)),
            _cond('b', 'X', ('D', target)),
            _cond('a', 'Z', ('D', target)),
        ]),
    ]
    return Network('teleport', k, blocks, steps, [('S', source)], [('D', target)], [])


def teleport_into_full(k: int, source: int = 0, target: int = 0) -> Network:
    """
    Teleports S:source into the one free slot D:target of a full memory block; the
    teleportation and the transfer into D share the last step.
    """
    _check_bits('teleport-into-full', k, source, target)
    blocks = [Block('S', 'memory'), Block('E', 'ancilla'), Block('G', 'accumulator'), Block('D', 'memory')]
    first, second = _pair_into('E', 'G', k, source, target)
    first += _prep_rest('+', 'G', k, [target]) + [_prep('+', ('D', target))]
    steps = [
        TimeStep('offline', first),
        TimeStep('offline', second),
        TimeStep('online', [
            _tgate('CX', ('D', None), ('G', None)),
            _tgate('CX', ('S', None), ('E', None)),
            _meas('Z', 'g', ('G', target)),
            _meas('X', 'a', ('S', source)),
            _meas('Z', 'b', ('E', source)),
            _cond('g', 'X', ('D', target)),
            _cond('b', 'X', ('D', target)),
            _cond('a', 'Z', ('D', target)),
        ]),
    ]
    passives = _bits('D', k, [target])
    return Network('teleport-into-full', k, blocks, steps,
                   [('S', source)] + passives, [('D', target)] + passives, [])


def cnot_two_teleport(k: int, control: int = 0, target: int = 1) -> Network:
    """
    CX between two bits of memory block M: the target bit is teleported out to B,
    the blockwise CX M -> B acts, and the bit is teleported back through G and E.
    """
    _need('cnot-two-teleport', k, 2)
    _check_bits('cnot-two-teleport', k, control, target)
    if control == target:
        raise _placement('cnot-two-teleport', 'control and target coincide')
    c, t = control, target
    blocks = [Block('M', 'memory'), Block('E', 'ancilla'), Block('B', 'accumulator'), Block('G', 'ancilla')]
    steps = [
        TimeStep('offline', [_bell(('E', t), ('E', c))] + _prep_rest('+', 'E', k, [c, t])
                 + [_prep('0', ('B', c))] + _prep_rest('+', 'B', k, [c])
                 + [_bell(('G', c), ('G', t))] + _prep_rest('+', 'G', k, [c, t])),
        TimeStep('offline', [
            _tgate('CX', ('E', None), ('B', None)),
            _meas('X', 'e', ('E', c)),
            _cond('e', 'Z', ('B', c)),
            _prep('+', ('E', c)),
        ]),
        TimeStep('online', [
            _tgate('CX', ('M', None), ('E', None)),
            _meas('X', 'a', ('M', t)),
            _meas('Z', 'b', ('E', t)),
            _cond('b', 'X', ('B', c)),
            _cond('a', 'Z', ('B', c)),
            _prep('+', ('M', t)),
            _prep('0', ('E', t)),
        ]),
        TimeStep('online', [
            _tgate('CX', ('M', None), ('B', None)),
            _tgate('CX', ('G', None), ('E', None), override='offline'),
            _meas('X', 'h', ('G', t), override='offline'),
            _cond('h', 'Z', ('E', t), override='offline'),
            _prep('+', ('G', t)),
        ]),
        TimeStep('offline', [
            _tgate('CX', ('M', None), ('E', None)),
            _tgate('CX', ('B', None), ('G', None)),
            _meas('Z', 'u', ('E', t)),
            _meas('X', 'v', ('B', c)),
            _meas('Z', 'w', ('G', c)),
            _cond('u', 'X', ('M', t)),
            _cond('v', 'Z', ('M', t)),
            _cond('w', 'X', ('M', t)),
        ]),
    ]
    inputs = _bits('M', k)
    return Network('cnot-two-teleport', k, blocks, steps, inputs, list(inputs), [('CX', [c, t])])


def _merged_cnot(name: str, k: int, pairs: Sequence[Tuple[int, int]]) -> Network:
    """
    CX on disjoint (control, target) pairs of memory block M with one online step:
    the Bell pairs of E take both bits of each pair, the target comes back through P and G.
    """
    used = [bit for pair in pairs for bit in pair]
    _check_bits(name, k, *used)
    if len(set(used)) != len(used) or not pairs:
        raise _placement(name, f'pairs {list(pairs)} must be nonempty and disjoint')
    blocks = [Block('M', 'memory'), Block('E', 'ancilla'), Block('P', 'ancilla'), Block('G', 'ancilla')]
    targets = [t for _, t in pairs]
    first = [_bell(('E', c), ('E', t)) for c, t in pairs] + _prep_rest('+', 'E', k, used)
    first += [_prep('+', ('P', None)), _prep('0', *[('G', t) for t in targets])]
    first += _prep_rest('+', 'G', k, targets) + [_tgate('CX', ('P', None), ('G', None))]
    online = [_tgate('CX', ('M', None), ('E', None))]
    for c, t in pairs:
        online += [
            _meas('Z', f'z{c}', ('E', c)),
            _meas('X', f'x{t}', ('M', t)),
            _cond(f'z{c}', 'X', ('E', t)),
            _cond(f'x{t}', 'ZZ', ('M', c), ('E', t)),
            _prep('+', ('M', t)),
            _prep('0', ('E', c)),
        ]
    back = [_tgate('CX', ('M', None), ('G', None)), _tgate('CX', ('E', None), ('P', None))]
    for _, t in pairs:
        back += [
            _meas('Z', f'g{t}', ('G', t)),
            _meas('X', f'e{t}', ('E', t)),
            _meas('Z', f'p{t}', ('P', t)),
            _cond(f'g{t}', 'X', ('M', t)),
            _cond(f'e{t}', 'Z', ('M', t)),
            _cond(f'p{t}', 'X', ('M', t)),
        ]
    steps = [TimeStep('offline', first), TimeStep('online', online), TimeStep('offline', back)]
    inputs = _bits('M', k)
    return Network(name, k, blocks, steps, inputs, list(inputs), [('CX', [c, t]) for c, t in pairs])


def cnot_teleport_merged(k: int, control: int = 0, target: int = 1) -> Network:
    _need('cnot-teleport-merged', k, 2)
    return _merged_cnot('cnot-teleport-merged', k, [(control, target)])


def cnot_multi(k: int, pairs: Optional[Sequence[Tuple[int, int]]] = None) -> Network:
    _need('cnot-multi', k, 4 if pairs is None else 2)
    return _merged_cnot('cnot-multi', k, pairs or [(0, 1), (2, 3)])


def _teleport_corrections(label_prefix: Tuple[str, str], source: str, k: int,
                          images: Dict[Tuple[str, int], List[Tuple[str, List[Address]]]],
                          outputs: List[Address]) -> List[BlockOp]:
    """
    Bell measurement of every bit of `source` against the ancilla halves, then the
    corrections U P U^† listed in `images` keyed by (letter, bit); plain Paulis elsewhere.
    """
    x_prefix, z_prefix = label_prefix
    ops = []
    for m in range(k):
        ops += [_meas('X', f'{x_prefix}{m}', (source, m)), _meas('Z', f'{z_prefix}{m}', ('A', m))]
    for letter, prefix in (('X', z_prefix), ('Z', x_prefix)):
        for m in range(k):
            for what, where in images.get((letter, m), [(letter, [outputs[m]])]):
                ops.append(_cond(f'{prefix}{m}', what, *where))
    return ops


def _toffoli(name: str, k: int, shared: bool) -> Network:
    """
    Toffoli on bits 0, 1, 2 of memory block M by teleportation into the state
    CCX (Bell pairs), prepared offline with one cat measurement.
    Outputs land on B:0, C:1 and E:2 (B:2 when `shared`).
    """
    _need(name, k, 3)
    third = 'B' if shared else 'E'
    blocks = [Block('M', 'memory'), Block('A', 'ancilla'), Block('B', 'accumulator'), Block('C', 'ancilla')]
    blocks += [] if shared else [Block('E', 'ancilla')]
    blocks.append(Block('T', 'cat'))
    o0, o1, o2 = ('B', 0), ('C', 1), (third, 2)
    first = [_prep('+', ('A', 0), ('A', 1)), _prep('0', ('A', 2))] + _prep_rest('+', 'A', k, [0, 1, 2])
    first += [_prep('0', ('B', 0)), _prep('+', ('B', 1)), _prep('+' if shared else '0', ('B', 2))]
    first += _prep_rest('0', 'B', k, [0, 1, 2])
    first += [_prep('0', ('C', 1))] + _prep_rest('+', 'C', k, [1])
    if not shared:
        first += [_prep('+', ('E', 2))] + _prep_rest('+', 'E', k, [2])
    first.append(_tgate('CX', ('A', None), ('B', None)))
    second = [
        _tgate('CX', ('A', None), ('C', None)),
        _meas('XX', 'm3', ('A', 2), o2),
        _cond('m3', 'Z', ('A', 2)),
    ]
    third_step = [
        BlockOp('catmeas', [('A', 2), o2], gate='CZ', letters='ZZ', label='m7', gate_targets=[o0, o1]),
        _cond('m7', 'X', ('A', 2)),
    ]
    outputs = [o0, o1, o2] + _bits('B', k, [0, 1, 2])
    images = {
        ('X', 0): [('X', [o0]), ('CX', [o1, o2])],
        ('X', 1): [('X', [o1]), ('CX', [o0, o2])],
        ('Z', 2): [('Z', [o2]), ('CZ', [o0, o1])],
    }
    online = [_tgate('CX', ('M', None), ('A', None))] + _teleport_corrections(('x', 'z'), 'M', k, images, outputs)
    steps = [TimeStep('offline', first), TimeStep('offline', second), TimeStep('offline', third_step),
             TimeStep('online', online)]
    return Network(name, k, blocks, steps, _bits('M', k), outputs, [('CCX', [0, 1, 2])])


def toffoli(k: int) -> Network:
    return _toffoli('toffoli', k, shared=False)


def toffoli_shared(k: int) -> Network:
    return _toffoli('toffoli-shared', k, shared=True)


def cnot_gc(k: int, control: int = 0, target: int = 1) -> Network:
    """
    CX by teleporting every bit of M through Bell pairs that already carry the CX;
    the resource is built offline in three steps and the online step only measures.
    """
    _need('cnot-gc', k, 2)
    _check_bits('cnot-gc', k, control, target)
    if control == target:
        raise _placement('cnot-gc', 'control and target coincide')
    c, t = control, target
    blocks = [Block('M', 'memory'), Block('A', 'ancilla'), Block('T', 'memory')]
    steps = [
        TimeStep('offline', [_bell(('A', c), ('A', t))] + _prep_rest('+', 'A', k, [c, t])
                 + [_prep('0', ('T', t))] + _prep_rest('+', 'T', k, [t])),
        TimeStep('offline', [
            _tgate('CX', ('A', None), ('T', None)),
            _meas('X', 'a', ('A', t)),
            _cond('a', 'Z', ('T', t)),
            _prep('+', ('A', t)),
            _prep('0', *_bits('T', k, [t])),
        ]),
        TimeStep('offline', [_tgate('CX', ('A', None), ('T', None))]),
    ]
    outputs = _bits('T', k)
    images = {
        ('X', c): [('XX', [('T', c), ('T', t)])],
        ('Z', t): [('ZZ', [('T', c), ('T', t)])],
    }
    online = [_tgate('CX', ('M', None), ('A', None))] + _teleport_corrections(('x', 'z'), 'M', k, images, outputs)
    steps.append(TimeStep('online', online))
    return Network('cnot-gc', k, blocks, steps, _bits('M', k), outputs, [('CX', [c, t])])


BUILTINS: Dict[str, Tuple[Callable[..., Network], int, int]] = {
    # name: (constructor, minimal k, number of placement integers)
    'transversal-cx': (transversal_cx, 1, 0),
    'transfer-out': (transfer_out, 1, 1),
    'transfer-in': (transfer_in, 1, 1),
    'teleport': (teleport, 1, 2),
    'teleport-into-full': (teleport_into_full, 1, 2),
    'cnot-two-teleport': (cnot_two_teleport, 2, 2),
    'cnot-teleport-merged': (cnot_teleport_merged, 2, 2),
    'cnot-multi': (cnot_multi, 4, -1),
    'cnot-gc': (cnot_gc, 2, 2),
    'toffoli': (toffoli, 3, 0),
    'toffoli-shared': (toffoli_shared, 3, 0),
}


def builtin(name: str, k: Optional[int] = None, place: Optional[Sequence[int]] = None) -> Network:
    """
    `builtin` function builds one of the named constructions.
    It takes three parameters:
    1. `name` is a key of `BUILTINS`.
    2. `k` is the number of logical bits per block, the smallest workable one by default.
    3. `place` lists the placement bits: the bit for transfers, (source, target) for
       teleports, (control, target) for CX networks and flattened pairs for cnot-multi.
    """
    try:
        constructor, minimum, arity = BUILTINS[name]
    except KeyError as e:
        raise UnknownBuiltin(UnknownBuiltinMessage().error.format(name)) from e
    place = list(place or [])
    if k is None:
        k = max([minimum] + [bit + 1 for bit in place])
    if arity == -1:
        if len(place) % 2:
            raise _placement(name, f'pairs need an even number of bits, got {place}')
        args = [list(zip(place[::2], place[1::2]))] if place else []
    elif len(place) not in (0, arity):
        raise _placement(name, f'expects {arity} placement bits, got {place}')
    else:
        args = place
    return constructor(k, *args).validate()


# Single online step compilation

def compile_single_step(gates: Sequence[Gate], k: int, blocks: int = 1) -> Network:
    """
    `compile_single_step` function turns a Clifford circuit on blocks x k logical bits
    (bit q lives in block q // k) into a network with one online step: each block is
    teleported through Bell pairs that carry the circuit, and the Pauli by-products
    are fixed by the conjugated Paulis U P U^†.
    """
    total = blocks * k
    for name, targets in gates:
        if name.upper() not in CLIFFORD_GATES:
            raise NonCliffordGate(NonCliffordGateMessage().error.format(name))
        if CLIFFORD_GATES[name.upper()] != len(targets) or any(not 0 <= q < total for q in targets):
            raise _placement('compile-network', f'gate {name} {list(targets)} does not fit {total} bits')
    gates = [(name.upper(), list(targets)) for name, targets in gates]
    suffix = [''] if blocks == 1 else [str(b) for b in range(blocks)]
    memory = [f'M{s}' for s in suffix]
    ancilla = [f'A{s}' for s in suffix]
    output = [f'T{s}' for s in suffix]
    layout = [Block(name, 'memory') for name in memory]
    layout += [Block(name, 'ancilla') for name in ancilla] + [Block(name, 'memory') for name in output]

    def address(q: int, names: Sequence[str]) -> Address:
        return names[q // k], q % k

    steps = [TimeStep('offline', [_prep('+', (a, None)) for a in ancilla] + [_prep('0', (t, None)) for t in output]
                      + [_tgate('CX', (a, None), (t, None)) for a, t in zip(ancilla, output)])]
    current: Optional[TimeStep] = None
    partners: Dict[str, frozenset] = {}
    for name, targets in gates:
        op = _tgate(name, *[address(q, output) for q in targets])
        group = frozenset(op.blocks)
        clash = len(group) > 1 and any(partners.get(b, group) != group for b in group)
        if current is None or clash:
            current, partners = TimeStep('offline'), {}
            steps.append(current)
        if len(group) > 1:
            partners.update({b: group for b in group})
        current.ops.append(op)
    online = [_tgate('CX', (m, None), (a, None)) for m, a in zip(memory, ancilla)]
    for q in range(total):
        online += [_meas('X', f'x{q}', address(q, memory)), _meas('Z', f'z{q}', address(q, ancilla))]
    for q in range(total):
        for letter, label in (('X', f'z{q}'), ('Z', f'x{q}')):
            image = conjugate_circuit(PauliOp.single(total, letter, q), gates)
            support = image.support
            online.append(_cond(label, ''.join(image.letters[s] for s in support),
                                *[address(s, output) for s in support]))
    steps.append(TimeStep('online', online))
    inputs = [address(q, memory) for q in range(total)]
    outputs = [address(q, output) for q in range(total)]
    return Network('compiled', k, layout, steps, inputs, outputs, gates).validate()


# Toffoli outcome analysis

def toffoli_outcome_analysis(net: Network) -> ToffoliAnalysis:
    """
    `toffoli_outcome_analysis` function enumerates the outcomes that trigger the
    conditional two-bit corrections of the last online step and schedules the
    triggered gates earliest-first, one block-connecting gate per block per step.
    Intra-block gates wait for the step after the measurements. The distribution
    counts correction steps; the mean counts online steps, at least one.
    """
    online = [step for step in net.steps if any(op.effective_label(step.label) == 'online' for op in step.ops)]
    conds = [op for op in online[-1].ops if op.kind == 'cond' and op.gate] if online else []
    if not conds:
        raise WrongNetwork(WrongNetworkMessage().error.format(net.name))
    busy = {b for op in online[-1].ops if op.two_block for b in op.blocks}
    labels = list(dict.fromkeys(op.condition for op in conds))
    distribution: Counter = Counter()
    online_steps = 0
    branches = []
    for outcome in cartesian((1, -1), repeat=len(labels)):
        values = dict(zip(labels, outcome))
        occupied: Dict[int, set] = {0: set(busy)}
        last = -1
        for op in conds:
            if values[op.condition] == 1:
                continue
            step = 0 if len(op.blocks) > 1 else 1
            while occupied.setdefault(step, set()) & set(op.blocks):
                step += 1
            occupied[step].update(op.blocks)
            last = max(last, step)
        needed = last + 1
        distribution[needed] += 1
        online_steps += max(1, needed)
        branches.append(' '.join(f'{label}={value:+d}' for label, value in values.items()) + f' -> {needed}')
    mean = Fraction(online_steps, 2 ** len(labels))
    logger.info('%s: distribution %s mean %s', net.name, dict(distribution), mean)
    return ToffoliAnalysis(
        network=net.name, outcomes=2 ** len(labels), distribution=dict(sorted(distribution.items())),
        mean=f'{mean.numerator}/{mean.denominator}', mean_value=float(mean), branches=branches,
    )


# Simulation

class _QubitBackend:
    """Shared op handling of the logical-level backends: block b, bit m is one qubit."""
    name = 'logical'

    def __init__(self, net: Network, rng: np.random.Generator):
        self.net = net
        self.rng = rng
        self.offsets, self.widths = {}, {}
        width = 0
        for block in net.blocks:
            self.offsets[block.name] = width
            self.widths[block.name] = self._block_width(block)
            width += self.widths[block.name]
        self.width = width

    def _block_width(self, block: Block) -> int:
        if block.role == 'cat':
            raise _level(f'cat block {block.name}', 'tableau')
        return self.net.k

    def qubit(self, address: Address) -> int:
        block, bit = address
        if bit is None or bit >= self.widths[block]:
            raise _placement(self.net.name, f'{format_address(address)} is not a qubit here')
        return self.offsets[block] + bit

    def qubits(self, address: Address) -> List[int]:
        block, bit = address
        if bit is None:
            return list(range(self.offsets[block], self.offsets[block] + self.widths[block]))
        return [self.qubit(address)]

    def pauli(self, letters: str, qubits: Sequence[int]) -> PauliOp:
        op = PauliOp.identity(self.width)
        for letter, q in zip(letters, qubits):
            op = op * PauliOp.single(self.width, letter, q)
        return op

    def load_inputs(self, states: str, circuit: Sequence[Gate]) -> None:
        for state, address in zip(states, self.net.inputs):
            q = self.qubit(address)
            if state in '1-':
                self.gate('X', [q])
            if state in '+-':
                self.gate('H', [q])
        for name, targets in circuit:
            self.gate(name, [self.qubit(self.net.inputs[t]) for t in targets])

    def run(self, op: BlockOp, record: MeasurementRecord, forced: Dict[str, int]) -> Optional[int]:
        if op.kind == 'prep':
            for address in op.targets:
                for q in self.qubits(address):
                    self.reset(q)
                    if op.state == '+':
                        self.gate('H', [q])
        elif op.kind == 'bell':
            a, b = (self.qubit(t) for t in op.targets)
            self.reset(a)
            self.reset(b)
            self.gate('H', [a]).gate('CX', [a, b])
        elif op.kind == 'tgate':
            if op.blockwise:
                for m in range(self.net.k):
                    self.gate(op.gate, [self.qubit((block, m)) for block, _ in op.targets])
            else:
                self.gate(op.gate, [self.qubit(t) for t in op.targets])
        elif op.kind == 'pgate':
            raise _level(str(op), 'logical')
        elif op.kind == 'meas':
            observable = self.pauli(op.letters, [self.qubit(t) for t in op.targets])
            outcome, deterministic = self.measure(observable, forced.get(op.label))
            record.add(op.label, op.letters, outcome, deterministic)
            return outcome
        elif op.kind == 'catmeas':
            outcome = self.cat_measure(op, forced.get(op.label))
            record.add(op.label, f'{op.letters}*{op.gate}', outcome, False)
            return outcome
        elif op.kind == 'cond':
            if record.outcome(op.condition) == -1:
                qubits = [self.qubit(t) for t in op.targets]
                if op.gate:
                    self.gate(op.gate, qubits)
                else:
                    self.apply_pauli(self.pauli(op.letters, qubits))
        return None

    def end_step(self) -> None:
        pass

    def output_qubits(self) -> List[int]:
        return [self.qubit(address) for address in self.net.outputs]


class _TableauBackend(_QubitBackend):
    name = 'tableau'

    def __init__(self, net: Network, rng: np.random.Generator, debug: bool = False):
        super().__init__(net, rng)
        self.state = Tableau(self.width, debug)

    def reset(self, q: int) -> None:
        self.state.reset(q)

    def gate(self, name: str, qubits: Sequence[int]) -> '_TableauBackend':
        self.state.apply(name, qubits)
        return self

    def apply_pauli(self, op: PauliOp) -> None:
        self.state.apply_pauli(op)

    def measure(self, op: PauliOp, forced: Optional[int]) -> Tuple[int, bool]:
        return self.state.measure(op, self.rng, forced)

    def cat_measure(self, op: BlockOp, forced: Optional[int]) -> int:
        raise _level(str(op), 'tableau')

    def expectation(self, op: PauliOp) -> float:
        return float(self.state.expectation(op))


class _DenseBackend(_QubitBackend):
    """Dense logical backend; a cat block is a single scratch qubit."""
    name = 'dense'

    def __init__(self, net: Network, rng: np.random.Generator, cap: int):
        super().__init__(net, rng)
        self.state = DenseState(self.width, cap)
        cats = [block.name for block in net.blocks if block.role == 'cat']
        self.cat = self.offsets[cats[0]] if cats else None

    def _block_width(self, block: Block) -> int:
        return 1 if block.role == 'cat' else self.net.k

    def reset(self, q: int) -> None:
        self.state.reset(q, self.rng)

    def gate(self, name: str, qubits: Sequence[int]) -> '_DenseBackend':
        self.state.apply(name, qubits)
        return self

    def apply_pauli(self, op: PauliOp) -> None:
        self.state.apply_pauli(op)

    def measure(self, op: PauliOp, forced: Optional[int]) -> Tuple[int, bool]:
        deterministic = abs(abs(self.state.expectation(op)) - 1) < TOLERANCE
        return self.state.measure_pauli(op, self.rng, forced), deterministic

    def cat_measure(self, op: BlockOp, forced: Optional[int]) -> int:
        if self.cat is None:
            raise _placement(self.net.name, f'{op} needs a cat block')
        pauli = self.pauli(op.letters, [self.qubit(t) for t in op.targets])
        observable = CliffordObservable(pauli, op.gate, tuple(self.qubit(t) for t in op.gate_targets))
        return cat_measure(self.state, observable, self.cat, self.rng, forced)

    def expectation(self, op: PauliOp) -> float:
        return self.state.expectation(op)


class _PhysicalBackend:
    """
    Physical backend: every block is encoded in `code` on one tableau, blocks
    recover at the end of each step and bit measurements are merged measurements.
    """
    name = 'physical'

    def __init__(self, net: Network, code: CssCode, rng: np.random.Generator, config: Settings):
        if code.k != net.k:
            raise _placement(net.name, f'network has k = {net.k} but code {code.name} has k = {code.k}')
        for block in net.blocks:
            if block.role == 'cat':
                raise _level(f'cat block {block.name}', 'physical')
        self.net, self.code, self.rng, self.config = net, code, rng, config
        self.register = EncodedRegister(code, len(net.blocks), config.debug)
        for index in range(len(net.blocks)):
            encode_zero(self.register, index, rng)

    def _index(self, address: Address) -> int:
        return self.net.block_index(address[0])

    def _logical(self, letters: str, targets: Sequence[Address]) -> PauliOp:
        """Physical representative of a Pauli on logical bits spread over blocks."""
        total = PauliOp.identity(self.register.size)
        for block in dict.fromkeys(t[0] for t in targets):
            local = PauliOp.identity(self.code.k)
            for letter, (name, bit) in zip(letters, targets):
                if name == block:
                    local = local * PauliOp.single(self.code.k, letter, bit)
            total = total * self.register.logical(local, self.net.block_index(block))
        return total

    def _merged(self, block: int, observables: List[LogicalObservable]) -> List[int]:
        kinds = {obs.kind for obs in observables}
        pair = self.config.type_pair
        if kinds - set(pair):
            (kind,) = kinds
            pair = (kind, 'Z' if kind == 'X' else 'X')
        spec = MergedMeasurementSpec(observables, pair)
        return merged_measure(self.register, block, spec, self.rng, self.config.repetitions,
                              self.config.retry_limit).eigenvalues

    def load_inputs(self, states: str, circuit: Sequence[Gate]) -> None:
        if circuit:
            raise _level('an input circuit', 'physical')
        for state, (block, bit) in zip(states, self.net.inputs):
            index = self.net.block_index(block)
            prepare_bit(self.register, index, bit, '0' if state in '01' else '+', self.rng)
            if state in '1-':
                self.register.tableau.apply_pauli(self._logical('X' if state == '1' else 'Z', [(block, bit)]))

    def run(self, op: BlockOp, record: MeasurementRecord, forced: Dict[str, int]) -> Optional[int]:
        if op.kind == 'prep':
            for address in op.targets:
                index = self._index(address)
                if address[1] is None:
                    encode_zero(self.register, index, self.rng)
                    if op.state == '+':
                        for m in range(self.code.k):
                            prepare_bit(self.register, index, m, '+', self.rng)
                else:
                    prepare_bit(self.register, index, address[1], op.state, self.rng)
        elif op.kind == 'bell':
            (first, i), (second, j) = op.targets
            if first != second:
                raise _level(str(op), 'physical')
            prepare_logical_bell(self.register, self._index(op.targets[0]), i, j, self.rng,
                                 self.config.repetitions, self.config.retry_limit)
        elif op.kind == 'tgate':
            if not op.blockwise:
                raise _level(str(op), 'physical')
            self.register.transversal(op.gate, [self._index(t) for t in op.targets])
        elif op.kind == 'pgate':
            qubits = []
            for block, q in op.targets:
                if q >= self.code.n:
                    raise _placement(self.net.name, f'qubit {q} of block {block} is outside n = {self.code.n}')
                qubits.append(self.net.block_index(block) * self.code.n + q)
            self.register.tableau.apply(op.gate, qubits)
        elif op.kind == 'meas':
            if len(op.blocks) > 1 or len(set(op.letters)) > 1:
                raise _level(str(op), 'physical')
            if op.label in forced:
                raise _level('a forced outcome', 'physical')
            u = np.zeros(self.code.k, dtype=np.uint8)
            u[[bit for _, bit in op.targets]] = 1
            observable = self._logical(op.letters, op.targets)
            deterministic = self.register.tableau.expectation(observable) != 0
            outcome = self._merged(self._index(op.targets[0]), [LogicalObservable(op.letters[0], u)])[0]
            record.add(op.label, op.letters, outcome, deterministic)
            return outcome
        elif op.kind == 'catmeas':
            raise _level(str(op), 'physical')
        elif op.kind == 'cond':
            if op.gate:
                raise _level(str(op), 'physical')
            if record.outcome(op.condition) == -1:
                self.register.tableau.apply_pauli(self._logical(op.letters, op.targets))
        elif op.kind == 'recover':
            self.end_step()
        return None

    def end_step(self) -> None:
        for index in range(len(self.net.blocks)):
            self._merged(index, [])

    def expectation(self, letters: str, targets: Sequence[Address]) -> float:
        return float(self.register.tableau.expectation(self._logical(letters, targets)))


Backend = Union[_TableauBackend, _DenseBackend, _PhysicalBackend]


@dataclass
class SimulationRun:
    backend: Backend
    record: MeasurementRecord
    trace: List[TraceEvent]

    @property
    def outcomes(self) -> Dict[str, int]:
        return {label: outcome for label, _, outcome, _ in self.record.entries}


def backend_name(net: Network, level: str) -> str:
    if level == 'physical':
        return 'physical'
    return 'dense' if net.needs_dense else 'tableau'


def simulate(net: Network, code: Optional[CssCode] = None, level: str = 'logical',
             seed: Union[int, np.random.Generator] = 0, inputs: Optional[str] = None,
             circuit: Sequence[Gate] = (), forced: Optional[Dict[str, int]] = None,
             config: Settings = default_settings) -> SimulationRun:
    """
    `simulate` function runs a network step by step and returns the final backend,
    the measurement record and the trace.
    It takes the following parameters:
    1. `net` and `code`; the code is only needed at the physical level.
    2. `level` is "logical" (tableau, or dense for cat measurements and non-Clifford
       gates) or "physical".
    3. `seed` is an int or a numpy generator for every random outcome.
    4. `inputs` gives one of 0, 1, +, - per INPUT bit (all 0 by default) and
       `circuit` is a logical circuit on the input bits applied afterwards.
    5. `forced` maps measurement labels to forced outcomes for branch enumeration.
    """
    if level not in LEVELS:
        raise _level('simulation', level)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    inputs = inputs if inputs is not None else '0' * len(net.inputs)
    if len(inputs) != len(net.inputs) or set(inputs) - set(PAULI_STATES):
        raise _placement(net.name, f'input states "{inputs}" do not match {len(net.inputs)} inputs')
    kind = backend_name(net, level)
    if kind == 'physical':
        if code is None:
            raise _level('a network without a code', 'physical')
        backend: Backend = _PhysicalBackend(net, code, rng, config)
    elif kind == 'dense':
        backend = _DenseBackend(net, rng, config.dense_cap)
    else:
        backend = _TableauBackend(net, rng, config.debug)
    backend.load_inputs(inputs, circuit)
    record, trace = MeasurementRecord(), []
    forced = forced or {}
    for index, step in enumerate(net.steps, start=1):
        for op in step.ops:
            outcome = backend.run(op, record, forced)
            separator = '.' if op.kind == 'pgate' else ':'
            targets = [format_address(t, separator) for t in op.targets + op.gate_targets]
            trace.append(TraceEvent(index, op.kind, targets, outcome))
            logger.debug('%s', trace[-1])
        backend.end_step()
    return SimulationRun(backend, record, trace)


def _expected_stabilizers(m: int, states: str, circuit: Sequence[Gate], action: Sequence[Gate]) -> List[PauliOp]:
    """Stabilizer generators of the ideal output on the m output bits."""
    result = []
    for j, state in enumerate(states):
        letter, sign = PAULI_STATES[state]
        op = PauliOp.single(m, letter, j)
        if sign == -1:
            op = op.with_phase(2)
        result.append(conjugate_circuit(conjugate_circuit(op, circuit), action))
    return result


def _ideal_vector(m: int, states: str, circuit: Sequence[Gate], action: Sequence[Gate], cap: int) -> np.ndarray:
    state = DenseState(m, max(cap, m))
    for j, value in enumerate(states):
        if value in '1-':
            state.apply('X', [j])
        if value in '+-':
            state.apply('H', [j])
    for name, targets in list(circuit) + list(action):
        state.apply(name, targets)
    return state.amplitudes


def _check_run(net: Network, run: SimulationRun, states: str, circuit: Sequence[Gate], cap: int) -> Optional[str]:
    m = len(net.inputs)
    backend = run.backend
    if isinstance(backend, _DenseBackend):
        rho = backend.state.reduced(backend.output_qubits())
        value = fidelity(rho, _ideal_vector(m, states, circuit, net.action, cap))
        return None if value > 1 - 1e-7 else f'fidelity {value:.6f}'
    for op in _expected_stabilizers(m, states, circuit, net.action):
        support = op.support
        targets = [net.outputs[j] for j in support]
        letters = ''.join(op.letters[j] for j in support)
        if isinstance(backend, _PhysicalBackend):
            value = backend.expectation(letters, targets) * op.sign
        else:
            placed = backend.pauli(letters, [backend.qubit(t) for t in targets])
            value = backend.expectation(placed) * op.sign
        if value < 1 - 1e-7:
            return f'expected stabilizer {op} reads {value:+.3f}'
    return None


def _verify_case(net: Network, code: Optional[CssCode], level: str, seed: int,
                 forced: Optional[Dict[str, int]], config: Settings,
                 case: Tuple[int, str, List[Gate]]) -> Optional[str]:
    index, states, circuit = case
    run = simulate(net, code, level, branch_rng(seed, index), states, circuit, forced, config)
    failure = _check_run(net, run, states, circuit, config.dense_cap)
    return None if failure is None else f'input {states} circuit {format_action(circuit)}: {failure}'


@dataclass
class Verification:
    passed: bool
    checked: int
    failure: Optional[str] = None


def verify_network(net: Network, code: Optional[CssCode] = None, level: str = 'logical',
                   trials: int = VERIFY_TRIALS, seed: int = 0, forced: Optional[Dict[str, int]] = None,
                   config: Settings = default_settings) -> Verification:
    """
    `verify_network` function compares the simulated action of `net` with its
    advertised ACTION on basis inputs (all of them for up to four inputs, `trials`
    random ones otherwise) and on `trials` random inputs: stabilizer states from
    random Clifford circuits at the logical level, Pauli eigenstate products at the
    physical level.
    """
    m = len(net.inputs)
    if not m:
        raise _placement(net.name, 'no INPUT bits to verify')
    if level == 'physical' and net.needs_dense:
        raise _level(f'network {net.name}', 'physical')
    rng = branch_rng(seed, CASE_BRANCH)
    if m <= 4:
        basis = [format(value, f'0{m}b')[::-1] for value in range(2 ** m)]
    else:
        basis = [''.join(rng.choice(list('01'), size=m)) for _ in range(trials)]
    cases = [(states, []) for states in basis]
    for _ in range(trials):
        if level == 'physical':
            cases.append((''.join(rng.choice(list(PAULI_STATES), size=m)), []))
        else:
            cases.append(('0' * m, random_clifford_circuit(m, 3 * m, rng)))
    indexed = [(i, states, circuit) for i, (states, circuit) in enumerate(cases)]
    failures = run_partitioned(partial(_verify_case, net, code, level, seed, forced, config), indexed, config.jobs)
    failure = next((f for f in failures if f is not None), None)
    if failure:
        logger.warning('%s failed verification: %s', net.name, failure)
    return Verification(failure is None, len(cases), failure)


# Fault injection

def physical_gates(net: Network, code: CssCode) -> List[List[Gate]]:
    """The physical gates of each step over len(blocks) x n qubits, in order."""
    n = code.n
    steps = []
    for index, step in enumerate(net.steps, start=1):
        gates = []
        for op in step.ops:
            if op.kind == 'tgate':
                if not op.blockwise:
                    raise _level(str(op), 'physical')
                offsets = [net.block_index(block) * n for block, _ in op.targets]
                gates += [(op.gate, [offset + j for offset in offsets]) for j in range(n)]
            elif op.kind == 'pgate':
                gates.append((op.gate, [net.block_index(block) * n + q for block, q in op.targets]))
            elif op.kind == 'catmeas' or (op.kind == 'cond' and op.gate):
                raise _level(str(op), 'physical')
        steps.append(gates)
    return steps


def _residual(steps: List[List[Gate]], code: CssCode, blocks: int,
              location: Tuple[int, int, str, int, str]) -> List[int]:
    step, index, when, qubit, letter = location
    fault = PauliOp.single(blocks * code.n, letter, qubit)
    remaining = steps[step][index if when == 'before' else index + 1:]
    return min_weight_modulo(conjugate_circuit(fault, remaining), code, blocks)


def inject_faults(net: Network, code: CssCode, jobs: int = 1) -> FaultReport:
    """
    `inject_faults` function places a single X, Y or Z before and after every
    physical gate, propagates it to the end of its step and weighs the residual
    error in each block modulo the stabilizer. The network passes when no block
    ever carries weight above one.
    """
    steps = physical_gates(net, code)
    blocks = len(net.blocks)
    locations = [
        (s, g, when, q, letter)
        for s, gates in enumerate(steps) for g, (_, qubits) in enumerate(gates)
        for when in ('before', 'after') for q in qubits for letter in 'XYZ'
    ]
    results = run_partitioned(partial(_residual, steps, code, blocks), locations, jobs)
    worst = {block.name: 0 for block in net.blocks}
    witness = None
    for location, weights in zip(locations, results):
        for block, weight in zip(net.blocks, weights):
            worst[block.name] = max(worst[block.name], weight)
        if witness is None and max(weights, default=0) > 1:
            s, g, when, q, letter = location
            name, qubits = steps[s][g]
            where = ' '.join(f'{net.blocks[p // code.n].name}.{p % code.n}' for p in qubits)
            witness = (f'step={s + 1} gate={name} {where} {when} qubit='
                       f'{net.blocks[q // code.n].name}.{q % code.n} fault={letter} weights={weights}')
    passed = witness is None
    logger.info('%s on %s: %d fault locations, passed=%s', net.name, code.name, len(locations), passed)
    return FaultReport(network=net.name, code=code.name, locations=len(locations), worst=worst,
                       passed=passed, witness=witness)
