"""
Main CLI Entry Point

Builds the argparse command registry and maps library exceptions to exit
codes: 0 success, 1 property failure or unexpected error, 2 input/config error,
3 numeric error.
"""

import argparse
import sys
from typing import List, Optional

from kfbd.handlers import commands, verify
from kfbd.services.verification_service import SUITES
from kfbd.utils.config import settings
from kfbd.utils.exceptions import InputError, KFBDBaseException, NumericError
from kfbd.utils.logger import get_logger, set_level, set_run_context
from kfbd.utils.parallel import set_thread_count

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_PROPERTY_FAILED = 1
EXIT_INPUT = 2
EXIT_NUMERIC = 3


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="Base seed for every random substream")
    common.add_argument("--threads", type=int, default=None, help="Worker threads (overrides KFBD_THREADS)")
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="format", action="store_const", const="json", help="JSON output")
    fmt.add_argument("--csv", dest="format", action="store_const", const="csv", help="CSV output")
    common.add_argument("--out", default=None, help="Output path (stdout when omitted)")
    common.add_argument("--config", default=None, help="ExperimentConfig JSON file")
    common.add_argument("--log-level", default=None, help="Override LOG_LEVEL")
    return common


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from e


def _add_generator_flags(parser: argparse.ArgumentParser, exponent: bool = True) -> None:
    parser.add_argument("--generator", default=None, help="Radial profile, e.g. exp_centered, quartic:0.5, power:3")
    parser.add_argument("--lambda", dest="lam", type=float, default=None, help="Quartic profile lambda")
    if exponent:
        parser.add_argument("--p", type=float, default=None, help="Power profile exponent (> 2)")


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subcommand per handler"""
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="kfbd", description="Kernelised functional Bregman divergences")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("divergence", parents=[common], help="Divergence between two sample files")
    p.add_argument("--p", dest="p_file", default=None, help="Samples of the first argument (CSV/JSON)")
    p.add_argument("--q", dest="q_file", default=None, help="Samples of the second argument (CSV/JSON)")
    p.add_argument("--kernel", default=None, help="Kernel, e.g. gaussian:1.0, laplace:0.5")
    _add_generator_flags(p, exponent=False)
    p.add_argument("--operator", choices=["identity", "entropy", "profile"], default=None,
                   help="Use the operator-G estimator instead of the closed form")
    p.add_argument("--R", type=float, default=None, help="Radius for the sandwich constants")
    p.set_defaults(handler=commands.cmd_divergence)

    v = sub.add_parser("verify", parents=[common], help="Run a property suite")
    v.add_argument("--suite", required=True, choices=SUITES)
    _add_generator_flags(v)
    v.add_argument("--dims", type=_int_list, nargs="+", default=None,
                   help="Dimensions for the findim suite, e.g. 2,5,10 or 2 5 10")
    v.add_argument("--trials", type=int, default=None, help="Randomized instances per property")
    v.set_defaults(handler=verify.cmd_verify)

    t = sub.add_parser("table2", parents=[common], help="Profile eigenvalue maps and sandwich constants")
    t.add_argument("--R", type=float, default=1.0)
    t.add_argument("--lambda", dest="lam", type=float, default=0.5)
    t.add_argument("--p", type=float, default=3.0)
    t.set_defaults(handler=commands.cmd_table2)

    f = sub.add_parser("fit", parents=[common], help="Minimum-divergence location fit")
    f.add_argument("--model", default="gaussian:1.0", help="Location model, e.g. gaussian:1.0, laplace:0.5")
    f.add_argument("--data", default=None, help="Data file (CSV/JSON)")
    f.add_argument("--kernel", default=None)
    _add_generator_flags(f)
    f.add_argument("--theta0", type=float, default=None, help="Reference parameter for the sanity check")
    f.add_argument("--model-sample-size", type=int, default=settings.MODEL_SAMPLE_SIZE)
    f.set_defaults(handler=commands.cmd_fit)

    a = sub.add_parser("audit-bound", parents=[common], help="Monte Carlo audits of the estimation bounds")
    a.add_argument("--kernel", default=None)
    _add_generator_flags(a)
    a.add_argument("--study", choices=["bound", "triangle", "envelope", "sweep", "robustness"], default="bound")
    a.add_argument("--epsilons", type=float, nargs="+", default=[0.0, 0.05, 0.1, 0.2])
    a.add_argument("--trials", type=int, default=None, help="Instances for the triangle study")
    a.set_defaults(handler=commands.cmd_audit_bound)

    s = sub.add_parser("sandwich-scan", parents=[common], help="Random embedding pairs against the MMD sandwich")
    _add_generator_flags(s)
    s.add_argument("--trials", type=int, default=None)
    s.set_defaults(handler=commands.cmd_sandwich_scan)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments, dispatch to the handler and return its exit code

    Args:
        argv: Arguments without the program name (defaults to sys.argv[1:])
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        if args.log_level:
            set_level(args.log_level)
        if args.threads is not None:
            set_thread_count(args.threads)
        set_run_context(args.command, args.seed)
        logger.debug(f"Dispatching {args.command}")
        return args.handler(args)

    except InputError as e:
        logger.debug(f"Input error in {args.command}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT

    except NumericError as e:
        residual = f" (residual {e.residual:.3e})" if e.residual is not None else ""
        logger.error(f"Numeric error in {args.command}: {e}{residual}", exc_info=True, extra={"residual": e.residual})
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC

    except KFBDBaseException as e:
        logger.error(f"Unhandled kfbd error: {e}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PROPERTY_FAILED

    except Exception as e:
        logger.error(f"Unhandled exception in {args.command}: {e}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PROPERTY_FAILED


if __name__ == "__main__":
    sys.exit(main())
