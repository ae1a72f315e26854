from argparse import Namespace

from utilities.config import Settings
from utilities.file_scripts import FileUtils
from utilities.output import render
from utilities.transversal import GATE_ARITY, TransversalGate, check_transversal

TAG = "transversal"


async def check_gate(args: Namespace, settings: Settings) -> int:
    """
    The `check-transversal` verb: legitimacy and logical action of one transversal gate.
    Exhaustive unless `--sample` is given.
    """
    code = await FileUtils.load_code(args.code)
    gate = TransversalGate(args.gate, args.w)
    report = check_transversal(code, gate, sample=args.sample, seed=settings.seed, jobs=settings.jobs)
    print(render(report, args.format))
    return 0 if report.legitimate else 1


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(
        'check-transversal', parents=parents, help='Check a transversal gate on a code'
    )
    parser.add_argument('code', help='code name from the materials index or a path')
    parser.add_argument('--gate', required=True, type=str.upper, choices=sorted(GATE_ARITY))
    parser.add_argument('--w', type=int, help='modulus of the phase family P, CP, CCP')
    parser.set_defaults(handler=check_gate, tag=TAG)
