"""Command line front end: run, validate, mc.

Verbosity comes from the KDRO_LOG environment variable (debug, info, warning,
or error; default warning). Outputs are plot-ready CSV files; rendering is
left to external tools.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import ConfigError, validate_config
from .dp import StateGrid, interpolate
from .experiment import _solve, derived_seeds, joint_kernel_for, run_experiment, with_overrides
from .kernels import Gaussian
from .rkhs import NumericalError, fit_cme
from .tcl import generate_dataset, mc_safety_probability

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_BAD_CONFIG = 2


def _setup_logging() -> None:
    level_name = os.environ.get("KDRO_LOG", "warning").strip().lower()
    levels = {"debug": logging.DEBUG, "info": logging.INFO,
              "warning": logging.WARNING, "error": logging.ERROR}
    logging.basicConfig(
        level=levels.get(level_name, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _cmd_run(args) -> int:
    try:
        config = validate_config(args.config)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    config = with_overrides(config, out_dir=args.out, seed=args.seed)
    try:
        result = run_experiment(config)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"wrote {result['paths']['summary'].parent}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    try:
        config = validate_config(args.config)
    except ConfigError as exc:
        for line in exc.diagnostics:
            print(line, file=sys.stderr)
        return EXIT_BAD_CONFIG
    print(f"{args.config}: ok ({config.horizon} stages, m = {config.m}, "
          f"epsilons = {list(config.epsilons)})")
    return EXIT_OK


def _cmd_mc(args) -> int:
    try:
        config = validate_config(args.config)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    if args.epsilon < 0:
        print(f"invalid epsilon: {args.epsilon} is negative", file=sys.stderr)
        return EXIT_BAD_CONFIG
    if args.ntraj < 1:
        print(f"invalid ntraj: {args.ntraj}", file=sys.stderr)
        return EXIT_BAD_CONFIG

    dataset_seed, mc_seed = derived_seeds(config.seed, 2)
    try:
        dataset = generate_dataset(
            config.tcl, config.m, config.tcl.safe_lo, config.tcl.safe_hi, dataset_seed
        )
        estimator = fit_cme(dataset, joint_kernel_for(config), Gaussian(config.gamma), config.lam)
        grid = StateGrid(config.grid_lo, config.grid_hi, config.grid_count)
        values, policy = _solve(config, estimator, grid, args.epsilon)
        dp_v0 = interpolate(values[0], args.x0)
        mc = mc_safety_probability(
            config.tcl, policy, args.x0, config.horizon, args.ntraj, mc_seed
        )
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"dp_v0 = {dp_v0!r}")
    print(f"mc_estimate = {mc!r}")
    print(f"abs_error = {abs(dp_v0 - mc)!r}")
    return EXIT_OK


def main(argv=None) -> int:
    _setup_logging()
    parser = argparse.ArgumentParser(
        prog="kdro",
        description="Distributionally robust dynamic programming over "
                    "kernel-embedding ambiguity sets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the configured experiment end to end")
    p_run.add_argument("--config", required=True, help="path to a key = value config file")
    p_run.add_argument("--out", default=None, help="override the configured output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override the configured seed")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="check a config file and report every violation")
    p_val.add_argument("--config", required=True)
    p_val.set_defaults(func=_cmd_validate)

    p_mc = sub.add_parser("mc", help="compare the stage-0 value against Monte Carlo at one state")
    p_mc.add_argument("--config", required=True)
    p_mc.add_argument("--epsilon", type=float, required=True, help="ambiguity radius")
    p_mc.add_argument("--x0", type=float, required=True, help="initial temperature")
    p_mc.add_argument("--ntraj", type=int, required=True, help="number of trajectories")
    p_mc.set_defaults(func=_cmd_mc)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
