from argparse import Namespace

from utilities.config import Settings
from utilities.csscode import code_summary, format_code, pauli_partition
from utilities.file_scripts import FileUtils
from utilities.output import render

TAG = "codes"


async def build_code(args: Namespace, settings: Settings) -> int:
    """
    The `build-code` verb: loads a code file, builds the CSS code and prints its summary.
    """
    code = await FileUtils.load_code(args.code, orthonormalize=not args.keep_rref)
    if args.out:
        await FileUtils.save_file(args.out, format_code(code))
    print(render(code_summary(code), args.format))
    return 0


async def partition(args: Namespace, settings: Settings) -> int:
    """
    The `partition` verb: counts X-type and Z-type masks by their class.
    """
    code = await FileUtils.load_code(args.code)
    print(render(pauli_partition(code, settings.classify_limit), args.format))
    return 0


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(
        'build-code', parents=parents, help='Build a CSS code and print its invariants'
    )
    parser.add_argument('code', help='code name from the materials index or a path')
    parser.add_argument('--keep-rref', action='store_true',
                        help='keep the row-reduced coset leaders instead of D D^T = I')
    parser.add_argument('--out', help='write the code in coset form to this path')
    parser.set_defaults(handler=build_code, tag=TAG)

    parser = subparsers.add_parser(
        'partition', parents=parents, help='Partition X-type and Z-type Pauli masks'
    )
    parser.add_argument('code', help='code name from the materials index or a path')
    parser.set_defaults(handler=partition, tag=TAG)
