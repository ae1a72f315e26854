from argparse import ArgumentTypeError, Namespace
from typing import Tuple

import numpy as np

from utilities.config import Settings
from utilities.file_scripts import FileUtils
from utilities.logicsim import ForcedOutcomeImpossible, Tableau
from utilities.output import render
from utilities.pauli import PauliOp
from utilities.recovery import (
    EncodedRegister, MergedMeasurementSpec, encode_zero, logical_agreement, merged_measure,
    merged_measure_logical, merged_report, prepare_bit, prepare_state
)

TAG = "preparations"
INPUT_STATES = '01+-'


def forced_outcome(text: str) -> Tuple[int, int]:
    """Reads `<i>=<+1|-1>` with 1-based i."""
    try:
        index, value = text.split('=')
        index, value = int(index) - 1, int(value)
    except ValueError as e:
        raise ArgumentTypeError(f'expected <i>=<+1|-1>, got "{text}"') from e
    if value not in (1, -1) or index < 0:
        raise ArgumentTypeError(f'expected <i>=<+1|-1>, got "{text}"')
    return index, value


async def prep_state(args: Namespace, settings: Settings) -> int:
    """
    The `prep-state` verb: runs a preparation plan and checks every M_i holds +1.
    """
    plan = await FileUtils.load_plan(args.plan)
    code = await FileUtils.load_code(args.code) if args.code else None
    rng = np.random.default_rng(settings.seed)
    _, report = prepare_state(plan, rng, dict(args.force or []), code)
    print(render(report, args.format))
    return 0 if report.verified else 1


def _load_input(register: EncodedRegister, logical: Tableau, states: str, rng) -> None:
    k = register.code.k
    for bit, state in enumerate(states):
        prepare_bit(register, 0, bit, '0' if state in '01' else '+', rng)
        if state in '+-':
            logical.apply('H', [bit])
        if state in '1-':
            letter = 'X' if state == '1' else 'Z'
            logical.apply(letter, [bit])
            register.tableau.apply_pauli(register.logical(PauliOp.single(k, letter, bit), 0))


async def merged_measurement(args: Namespace, settings: Settings) -> int:
    """
    The `merged-measure` verb: one recovery of an encoded block that also measures
    the given logical observables, compared with a logical-level tableau oracle.
    """
    code = await FileUtils.load_code(args.code)
    states = args.input or '0' * code.k
    if len(states) != code.k or set(states) - set(INPUT_STATES):
        raise ValueError(f'--input needs {code.k} characters from "{INPUT_STATES}", got "{states}"')
    spec = MergedMeasurementSpec.parse(args.observables, settings.type_pair)
    rng = np.random.default_rng(settings.seed)
    register = EncodedRegister(code, 1, settings.debug)
    encode_zero(register, 0, rng)
    logical = Tableau(code.k, settings.debug)
    _load_input(register, logical, states, rng)
    outcome = merged_measure(register, 0, spec, rng, settings.repetitions, settings.retry_limit)
    try:
        merged_measure_logical(logical, 0, code.k, spec, rng, forced=outcome.eigenvalues)
        agrees = logical_agreement(register, 0, logical)
    except ForcedOutcomeImpossible:
        agrees = False
    print(render(merged_report(code, spec, outcome, settings.repetitions, agrees), args.format))
    return 0 if agrees else 1


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(
        'prep-state', parents=parents, help='Run a stabilizer-based preparation plan'
    )
    parser.add_argument('plan', help='plan name from the materials index or a path')
    parser.add_argument('--code', help='code the plan runs on; cat measurements need CCZ-cat on it')
    parser.add_argument('--force', type=forced_outcome, action='append',
                        help='force the outcome of M_i, e.g. 3=-1 (repeatable)')
    parser.set_defaults(handler=prep_state, tag=TAG)

    parser = subparsers.add_parser(
        'merged-measure', parents=parents, help='Recovery merged with logical measurements'
    )
    parser.add_argument('code', help='code name from the materials index or a path')
    parser.add_argument('observables', nargs='*', help='logical observables like X:1100 or Z:0110')
    parser.add_argument('--input', help=f'one of "{INPUT_STATES}" per logical qubit, all 0 by default')
    parser.set_defaults(handler=merged_measurement, tag=TAG)
