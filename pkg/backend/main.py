"""
nlx - nonlinear expectation experiments on the binomial filtration tree

    nlx run <config> [--strict] [--out DIR]
    nlx sweep <config> --axis N --values 4,6,8,10
    nlx recover <config> [--via-doob-meyer]

Exit codes: 0 all checks pass, 1 check failure under --strict (or a numeric
failure), 2 usage/config error, 3 resource budget exceeded.
"""

import argparse
import os
import sys
from typing import List, Optional

# Add backend directory to path for imports
backend_dir = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, backend_dir)

import structlog  # noqa: E402

from nlx import __version__  # noqa: E402
from nlx.config import settings  # noqa: E402
from nlx.errors import ConfigError, ContractError, NumericError, ResourceBudgetError  # noqa: E402
from nlx.logging_setup import configure_logging  # noqa: E402

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3

logger = structlog.get_logger("nlx.main")


def _values(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"--values must be comma-separated numbers: {exc}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlx", description=__doc__.splitlines()[1])
    parser.add_argument("--version", action="version", version=f"nlx {__version__}")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL)
    parser.add_argument("--log-format", default=settings.LOG_FORMAT, choices=["console", "json"])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the stages selected in a config")
    run.add_argument("config")
    run.add_argument("--out", default=None, help="output directory (overrides [output])")
    run.add_argument("--strict", action="store_true", help="exit 1 when any check fails")

    sw = sub.add_parser("sweep", help="repeat a run over one axis")
    sw.add_argument("config")
    sw.add_argument("--axis", choices=["N", "level", "grid"], default=None)
    sw.add_argument("--values", type=_values, default=None)
    sw.add_argument("--out", default=None)
    sw.add_argument("--strict", action="store_true")

    rec = sub.add_parser("recover", help="recover the generator (and verify it if configured)")
    rec.add_argument("config")
    rec.add_argument("--via-doob-meyer", action="store_true")
    rec.add_argument("--out", default=None)
    rec.add_argument("--strict", action="store_true")
    return parser


def execute(args: argparse.Namespace) -> int:
    from nlx.cli import load_config, parse_config, run_experiment, sweep

    config = load_config(args.config)
    strict = args.strict or config.strict

    if args.command == "run":
        report = run_experiment(config, args.out)
        passed = report.passed
    elif args.command == "sweep":
        frame = sweep(config, args.axis, args.values, args.out)
        passed = bool(frame["passed"].all())
    else:
        if args.via_doob_meyer:
            data = config.model_dump()
            data["recover"]["via_doob_meyer"] = True
            config = parse_config(data)
        stages = ["recover"] + (["represent"] if "represent" in config.run else [])
        report = run_experiment(config, args.out, stages=stages)
        passed = report.passed

    if not passed and strict:
        logger.warning("✗ checks failed under --strict")
        return EXIT_CHECK_FAILED
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    # Configure logging FIRST so every module's output goes through structlog
    configure_logging(args.log_level, args.log_format)

    try:
        return execute(args)
    except ConfigError as exc:
        logger.error("✗ config error", error=str(exc), key=exc.key)
        return EXIT_USAGE
    except ResourceBudgetError as exc:
        logger.error("✗ resource budget", error=str(exc), requested=exc.requested, limit=exc.limit)
        return EXIT_BUDGET
    except ContractError as exc:
        logger.error("✗ precondition violated", error=str(exc))
        return EXIT_USAGE
    except NumericError as exc:
        logger.error("✗ numeric failure", error=str(exc), step=exc.step, node=exc.node)
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
