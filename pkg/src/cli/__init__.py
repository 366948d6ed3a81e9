# Command-line interface for SPARSEADD
# Argument parsing, logging setup and exit-code mapping

import argparse
import logging
import sys
from typing import List, Optional

import config
from src.errors import EXIT_OK, exit_code_for
from src.models import InitMethod, OptimizerMethod

from .commands import cmd_anova, cmd_gen, cmd_report, cmd_sparsify, cmd_trials
from .manifest import build_manifest, load_pipeline_config, parse_float_list

logger = logging.getLogger(__name__)


def configure_logging(debug: bool = False) -> None:
    """Configure the root logger once; --debug switches to DEBUG."""
    logging.basicConfig(
        level=logging.DEBUG if debug else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", default=config.STORAGE_PATH, help="Storage directory (default: %(default)s)")
    parser.add_argument("--seed", type=int, default=None, help="Master seed (default: config)")
    parser.add_argument("--output", default=None, help="Output name (default: derived from inputs)")


def _add_pipeline_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="JSON pipeline configuration file")
    parser.add_argument("--init", choices=[m.value for m in InitMethod], default=None, help="Block initialization")
    parser.add_argument("--h", type=float, default=None, help="Grid step (default 0.25)")
    parser.add_argument(
        "--method", choices=[m.value for m in OptimizerMethod], default=None, help="Manifold optimizer"
    )
    parser.add_argument("--nu", type=float, default=None, help=f"Step size (default {config.STEP_SIZE})")
    parser.add_argument(
        "--lambda", dest="lam", type=float, default=None, help=f"Landing penalty (default {config.LANDING_PENALTY})"
    )
    parser.add_argument("--max-iters", type=int, default=None, help=f"Iteration cap (default {config.MAX_ITERS})")
    parser.add_argument("--eta", default=None, help="Comma-separated reporting thresholds (default 1e-9,1e-4)")
    parser.add_argument("--tau", type=float, default=None, help="Relative vertex SVD threshold")
    parser.add_argument("--delta", type=float, default=None, help="Commutant tolerance")
    parser.add_argument("--jobs", type=int, default=None, help="Parallel blocks / trials")
    parser.add_argument("--timings", action="store_true", help="Record stage wall-clock timings in the manifest")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparseadd",
        description="Sparse additive decomposition by orthogonal change of variables",
    )
    parser.add_argument("--debug", action="store_true", help="Enable debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="Generate matrix sets or sampled test functions")
    gen_sub = gen.add_subparsers(dest="kind", required=True)

    matrices = gen_sub.add_parser("matrices", help="Jointly sparsifiable matrix set H_R(J)")
    matrices.add_argument("--d", type=int, required=True)
    matrices.add_argument("--J-size", dest="J_size", type=int, default=None, help="|J| (unordered, with diagonal)")
    matrices.add_argument("--N", type=int, default=10, help="Number of matrices (default: %(default)s)")
    matrices.add_argument("--sigma", type=float, default=0.0, help="Noise std (default: %(default)s)")
    _add_common(matrices)

    function = gen_sub.add_parser("function", help="Random sparse additive test function")
    function.add_argument("--d", type=int, required=True)
    function.add_argument("--noisy", action="store_true", help="Add the Gaussian-mixture noise")
    function.add_argument("--no-rotate", action="store_true", help="Keep the sparse coordinates")
    function.add_argument("--points", type=int, default=None, help="Sample points (default 100 d)")
    _add_common(function)

    builtin = gen_sub.add_parser("builtin", help="Built-in 7-dimensional benchmark")
    builtin.add_argument("--which", choices=["f1", "f2"], required=True)
    builtin.add_argument("--rotate", action="store_true")
    builtin.add_argument("--noisy", action="store_true")
    builtin.add_argument("--points", type=int, default=None, help="Sample points (default 100 d)")
    _add_common(builtin)

    sparsify = sub.add_parser("sparsify", help="Run the sparsifying pipeline on an instance file")
    sparsify.add_argument("--input", required=True, help="Instance JSON written by gen")
    _add_pipeline_flags(sparsify)
    _add_common(sparsify)

    anova = sub.add_parser("anova", help="Derivative counts and ANOVA term norms")
    anova.add_argument("--which", choices=["f1", "f2"], default="f1")
    anova.add_argument("--input", default=None, help="Function instance JSON (overrides --which)")
    anova.add_argument("--rotate", action="store_true")
    anova.add_argument("--noisy", action="store_true")
    anova.add_argument("--transform", default=None, help="Sparsify report whose U_total is applied first")
    anova.add_argument("--points", type=int, default=2000, help="Points for derivative norms (default: %(default)s)")
    anova.add_argument("--tol", type=float, default=1e-4, help="Smallness tolerance (default: %(default)s)")
    anova.add_argument("--orders", default=None, help="Comma-separated term orders, e.g. 1,2")
    anova.add_argument("--term-points", type=int, default=50, help="Points for term norms (default: %(default)s)")
    anova.add_argument(
        "--mc-samples", type=int, default=config.MC_SAMPLES, help="Monte Carlo samples (default: %(default)s)"
    )
    _add_common(anova)

    report = sub.add_parser("report", help="Aggregate sparsify/trial reports")
    report.add_argument("inputs", nargs="+", help="Report files or directories")
    report.add_argument("--table", default="summary", help="'summary' or 'dimK' (default: %(default)s)")
    _add_common(report)

    trials = sub.add_parser("trials", help="Generate-and-sparsify batch of matrix sets")
    trials.add_argument("--d", type=int, required=True)
    trials.add_argument("--trials", type=int, default=20, help="Number of instances (default: %(default)s)")
    trials.add_argument("--N", type=int, default=10, help="Matrices per instance (default: %(default)s)")
    trials.add_argument("--sigma", type=float, default=0.0, help="Noise std (default: %(default)s)")
    _add_pipeline_flags(trials)
    _add_common(trials)
    return parser


COMMANDS = {
    "gen": cmd_gen,
    "sparsify": cmd_sparsify,
    "anova": cmd_anova,
    "report": cmd_report,
    "trials": cmd_trials,
}


def run(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, dispatch and translate failures into exit codes."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.debug or config.DEBUG)
    try:
        return COMMANDS[args.command](args)
    except Exception as exc:
        code = exit_code_for(exc)
        logger.error(f"{args.command} failed: {exc}")
        print(f"Error: {exc}", file=sys.stderr)
        return code if code != EXIT_OK else 1


__all__ = [
    "build_parser",
    "configure_logging",
    "run",
    "cmd_gen",
    "cmd_sparsify",
    "cmd_anova",
    "cmd_report",
    "cmd_trials",
    "build_manifest",
    "load_pipeline_config",
    "parse_float_list",
]
