from argparse import Namespace
from typing import Optional

from schemas.networks import SimulationReport
from utilities.config import Settings
from utilities.csscode import CssCode
from utilities.file_scripts import FileUtils
from utilities.ftnet import (
    BUILTINS, LEVELS, Network, backend_name, builtin, compile_single_step, format_action, format_network,
    inject_faults, parse_action, resources, simulate, toffoli_outcome_analysis, verify_network
)
from utilities.output import render

TAG = "networks"


async def _load_network(args: Namespace, code: Optional[CssCode] = None) -> Network:
    """
    Builtins come from `--builtin` or a positional name in `BUILTINS`; k defaults to
    the code's k when a code is given. Anything else is a registered name or a path.
    """
    name = args.builtin or args.network
    if name is None:
        raise ValueError('give a network name, a path or --builtin')
    if name in BUILTINS:
        k = args.k if args.k is not None else (code.k if code is not None else None)
        return builtin(name, k, args.place)
    return await FileUtils.load_network(name)


async def simulate_network(args: Namespace, settings: Settings) -> int:
    """
    The `simulate-network` verb: one seeded run, then optionally the check of the
    advertised action over basis and random inputs.
    """
    code = await FileUtils.load_code(args.code)
    net = await _load_network(args, code)
    run = simulate(net, code, args.level, settings.seed, args.inputs, config=settings)
    verification = None
    if args.verify:
        verification = verify_network(net, code, args.level, settings.trials, settings.seed, config=settings)
    report = SimulationReport(
        network=net.name, code=code.name, level=args.level, backend=backend_name(net, args.level),
        seed=settings.seed, outcomes=run.outcomes, action=format_action(net.action),
        verified=verification.passed if verification else None,
        trials=verification.checked if verification else 0,
        trace=[str(event) for event in run.trace] if args.trace else [],
    )
    print(render(report, args.format))
    if verification and not verification.passed:
        print(f'failure: {verification.failure}')
        return 1
    return 0


async def network_resources(args: Namespace, settings: Settings) -> int:
    """
    The `resources` verb: blocks, steps and area split into online and offline.
    """
    net = await _load_network(args)
    print(render(resources(net), args.format))
    return 0


async def fault_injection(args: Namespace, settings: Settings) -> int:
    """
    The `inject-faults` verb: every single Pauli fault at every gate location.
    """
    code = await FileUtils.load_code(args.code)
    net = await _load_network(args, code)
    report = inject_faults(net, code, settings.jobs)
    print(render(report, args.format))
    return 0 if report.passed else 1


async def toffoli_analysis(args: Namespace, settings: Settings) -> int:
    if args.builtin is None and args.network is None:
        args.builtin = 'toffoli'
    net = await _load_network(args)
    report = toffoli_outcome_analysis(net)
    print(render(report, args.format, skip=() if args.trace else ('branches',)))
    return 0


async def compile_network(args: Namespace, settings: Settings) -> int:
    """
    The `compile-network` verb: a Clifford circuit turned into a network with one online step.
    """
    net = compile_single_step(parse_action(args.gates), args.k, args.blocks)
    if args.out:
        await FileUtils.save_file(args.out, format_network(net))
    print(format_network(net), end='')
    print(render(resources(net), args.format))
    if args.verify:
        verification = verify_network(net, trials=settings.trials, seed=settings.seed, config=settings)
        print(f'verified: {"yes" if verification.passed else "no"}')
        if not verification.passed:
            print(f'failure: {verification.failure}')
            return 1
    return 0


async def show_network(args: Namespace, settings: Settings) -> int:
    net = await _load_network(args)
    print(format_network(net), end='')
    return 0


def _network_arguments(parser, positional: bool = True) -> None:
    if positional:
        parser.add_argument('network', nargs='?', help='builtin name, materials name or path of a network')
    parser.add_argument('--builtin', choices=sorted(BUILTINS), help='use a builtin construction')
    parser.add_argument('-k', type=int, help='logical bits per block of a builtin')
    parser.add_argument('--place', type=int, nargs='+', help='placement bits of a builtin')


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser('simulate-network', parents=parents, help='Simulate a network')
    parser.add_argument('code', help='code name from the materials index or a path')
    _network_arguments(parser)
    parser.add_argument('--level', choices=LEVELS, default='logical')
    parser.add_argument('--inputs', help='one of 0, 1, +, - per INPUT bit')
    parser.add_argument('--verify', action='store_true', help='check the advertised action')
    parser.set_defaults(handler=simulate_network, tag=TAG)

    parser = subparsers.add_parser('resources', parents=parents, help='Online and offline resource counts')
    _network_arguments(parser)
    parser.set_defaults(handler=network_resources, tag=TAG)

    parser = subparsers.add_parser('inject-faults', parents=parents, help='Single-fault certification')
    parser.add_argument('code', help='code name from the materials index or a path')
    _network_arguments(parser)
    parser.set_defaults(handler=fault_injection, tag=TAG)

    parser = subparsers.add_parser(
        'toffoli-analysis', parents=parents, help='Online steps of the Toffoli corrections'
    )
    _network_arguments(parser)
    parser.set_defaults(handler=toffoli_analysis, tag=TAG)

    parser = subparsers.add_parser(
        'compile-network', parents=parents, help='Compile a Clifford circuit to one online step'
    )
    parser.add_argument('gates', help='gates joined by ";", e.g. "CX 0 1; H 2", or I')
    parser.add_argument('-k', type=int, required=True, help='logical bits per block')
    parser.add_argument('--blocks', type=int, default=1)
    parser.add_argument('--out', help='write the network text to this path')
    parser.add_argument('--verify', action='store_true', help='check the compiled action')
    parser.set_defaults(handler=compile_network, tag=TAG)

    parser = subparsers.add_parser('show-network', parents=parents, help='Print a network in text form')
    _network_arguments(parser)
    parser.set_defaults(handler=show_network, tag=TAG)
