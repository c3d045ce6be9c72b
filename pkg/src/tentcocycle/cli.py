"""
Command-line front end.

    tentcocycle markov --n-range 5 12 --format csv
    tentcocycle bound --config configs/const1.json --kappa 0.03125 0.0078125
    tentcocycle simulate --config configs/iid_small.json --emit-graph graph.csv
    tentcocycle ly-sweep --samples 10000 --rational
    tentcocycle eta-check --samples 100
    tentcocycle schedule --horizon 1000 --k-p 15 --d-p 98.2

Data goes to standard output (or --out); logs go to standard error. Exit
codes: 0 success, 1 bad arguments or configuration, 2 numerical failure.
"""

import argparse
import sys
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from .base.error_handling import ErrorType, classify_error, exit_code_for
from .configuration import RunConfig
from .logging_config import PipelineLogger, configure_logging, set_run_id
from .orchestrator import create_orchestrator
from .schemas import write_result

pipeline_logger = PipelineLogger(__name__)


class _ArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that exits with status 1 on usage errors."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common_options() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="Seed for drivings and random sweeps (u64)")
    common.add_argument("--format", choices=["csv", "json"], help="Output format (default csv)")
    common.add_argument("--out", help="Output file (default standard output)")
    common.add_argument("--log-level", help="Logging level (default WARNING)")
    common.add_argument("--structured-logs", action="store_true", default=None, help="Emit JSON log lines")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = _ArgumentParser(prog="tentcocycle", description="Transfer operator cocycles of paired tent maps")
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    markov = commands.add_parser("markov", parents=[common], help="Exact lambda2 of the Markov family")
    markov.add_argument("--n-range", nargs=2, type=int, metavar=("A", "B"), help="Inclusive n range")

    bound = commands.add_parser("bound", parents=[common], help="Explicit spectral gap bound")
    bound.add_argument("--kappa", nargs="+", type=float, help="Scales for the small-kappa bound")

    simulate = commands.add_parser("simulate", parents=[common], help="Equivariant density and Lyapunov exponents")
    simulate.add_argument("--emit-graph", metavar="PATH", help="Write (x, T(x), S(x)) samples")

    ly_sweep = commands.add_parser("ly-sweep", parents=[common], help="Random Lasota-Yorke and cone checks")
    ly_sweep.add_argument("--samples", type=int, help="Number of random cases")
    ly_sweep.add_argument("--rational", action="store_true", default=None, help="Exact arithmetic")

    eta_check = commands.add_parser("eta-check", parents=[common], help="Bracketing of the functional eta")
    eta_check.add_argument("--samples", type=int, help="Number of random test functions")

    schedule = commands.add_parser("schedule", parents=[common], help="Contraction schedule along an orbit")
    schedule.add_argument("--horizon", type=int, help="Last step of the schedule")
    schedule.add_argument("--k-p", type=int, help="Contraction window k_P")
    schedule.add_argument("--d-p", type=float, help="Diameter bound D_P")
    schedule.add_argument("--g-every", type=int, help="Use every E-th sigma^2 step as the good set")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {
        "command": args.command,
        "seed": args.seed,
        "format": args.format,
        "path": args.out,
        "log_level": args.log_level,
        "structured_logs": args.structured_logs,
    }
    for name in ("n_range", "kappa", "emit_graph", "samples", "rational", "horizon", "k_p", "d_p", "g_every"):
        overrides[name] = getattr(args, name, None)
    return overrides


def run(config: RunConfig) -> int:
    """Run one configured command and write its output; return the exit code."""
    try:
        result = create_orchestrator(config).run()
        text = write_result(result, config.output.format, config.output.path)
    except Exception as e:
        error_type = classify_error(e)
        pipeline_logger.error_with_fallback(f"{config.command} failed: {error_type.value} - {e}")
        return exit_code_for(error_type)
    if text is not None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        pipeline_logger.info_success(f"wrote {config.output.path}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point of the tentcocycle command."""
    # Load environment variables
    load_dotenv()

    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    configure_logging("WARNING", use_structured=bool(args.structured_logs))
    try:
        config = RunConfig.load(args.config, _overrides(args))
    except Exception as e:
        error_type = classify_error(e)
        if error_type is ErrorType.UNKNOWN_ERROR:
            error_type = ErrorType.CONFIGURATION_ERROR
        pipeline_logger.error_with_fallback(f"invalid configuration: {e}")
        return exit_code_for(error_type)

    configure_logging(config.settings.log_level, use_structured=config.settings.structured_logs)
    set_run_id(command=config.command)
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
