"""End-to-end experiment: sample, fit, solve for each radius, cross-check.

One run writes, under the output directory:

    dataset.csv                the sampled transitions (x, a, x_next)
    values_eps<e>.csv          value functions per stage for each radius
    policy_eps<e>.csv          greedy policies per stage for each radius
    summary.csv                stage-0 values per radius (epsilon, x, v0)
    mc_check.csv               stage-0 value vs Monte Carlo at probe states
    manifest.txt               configuration, version, and phase timings

CSV artifacts are byte-identical across runs with equal seeds; the manifest
carries wall-clock times and is not.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .dp import StateGrid, interpolate, safety_value_iteration, write_policy_csv, write_values_csv
from .kernels import Gaussian, Kernel, Product, Spline1, StateAction
from .rkhs import fit_cme
from .tcl import generate_dataset, mc_safety_probability

__all__ = ["run_experiment", "derived_seeds", "with_overrides", "joint_kernel_for", "ACTIONS"]

log = logging.getLogger(__name__)

ACTIONS = (0.0, 1.0)


def derived_seeds(seed: int, n: int) -> list[int]:
    """n independent substream seeds derived deterministically from one seed."""
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n, np.uint64)]


def joint_kernel_for(config: ExperimentConfig) -> Kernel:
    """The configured coupling of the state and action kernels.

    ``additive`` is k_x + k_a; its hypothesis space is additive in state and
    action, which makes the fitted action effect state independent. ``product``
    is k_x * k_a, whose tensor space carries state-action interactions and can
    express state-dependent switching.
    """
    state_kernel = Gaussian(config.gamma)
    action_kernel = Spline1()
    if config.joint_kernel == "product":
        return Product(
            StateAction(state_kernel=state_kernel, action_kernel=None),
            StateAction(state_kernel=None, action_kernel=action_kernel),
        )
    return StateAction(state_kernel=state_kernel, action_kernel=action_kernel)


def _solve(config: ExperimentConfig, estimator, grid: StateGrid, epsilon: float):
    return safety_value_iteration(
        grid=grid,
        actions=ACTIONS,
        estimator=estimator,
        epsilon=epsilon,
        horizon=config.horizon,
        safe_lo=config.tcl.safe_lo,
        safe_hi=config.tcl.safe_hi,
        lambda_norm=config.lambda_norm,
        clip=config.clipping,
    )


def run_experiment(config: ExperimentConfig) -> dict:
    """Run the configured experiment and write the artifact bundle.

    Returns a dict with the output paths, the per-radius solutions
    (``solutions[eps] = (values, policy)``), and the fitted estimator.
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    timings: list[tuple[str, float]] = []
    t_start = time.perf_counter()

    dataset_seed, mc_seed = derived_seeds(config.seed, 2)

    t0 = time.perf_counter()
    dataset = generate_dataset(
        config.tcl, config.m, config.tcl.safe_lo, config.tcl.safe_hi, dataset_seed
    )
    dataset_path = out / "dataset.csv"
    dataset.to_csv(dataset_path)
    timings.append(("dataset", time.perf_counter() - t0))
    log.info("sampled %d transitions", dataset.count)

    t0 = time.perf_counter()
    estimator = fit_cme(dataset, joint_kernel_for(config), Gaussian(config.gamma), config.lam)
    timings.append(("fit", time.perf_counter() - t0))
    log.info("factorized the %d x %d regularized Gram matrix", config.m, config.m)

    grid = StateGrid(config.grid_lo, config.grid_hi, config.grid_count)
    solutions = {}
    paths = {"dataset": dataset_path, "values": {}, "policies": {}}
    for eps in config.epsilons:
        t0 = time.perf_counter()
        values, policy = _solve(config, estimator, grid, eps)
        solutions[eps] = (values, policy)
        values_path = out / f"values_eps{eps}.csv"
        policy_path = out / f"policy_eps{eps}.csv"
        write_values_csv(values, values_path)
        write_policy_csv(policy, policy_path)
        paths["values"][eps] = values_path
        paths["policies"][eps] = policy_path
        timings.append((f"dp_eps{eps}", time.perf_counter() - t0))
        log.info("solved %d stages at epsilon = %s", config.horizon, eps)

    summary_path = out / "summary.csv"
    with open(summary_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epsilon", "x", "v0"])
        for eps in config.epsilons:
            v0 = solutions[eps][0][0]
            for x, val in zip(grid.points, v0.values):
                writer.writerow([repr(float(eps)), repr(float(x)), repr(float(val))])
    paths["summary"] = summary_path

    t0 = time.perf_counter()
    if 0.0 in solutions:
        nominal_values, nominal_policy = solutions[0.0]
    else:
        nominal_values, nominal_policy = _solve(config, estimator, grid, 0.0)
    mc_path = out / "mc_check.csv"
    probe_seeds = derived_seeds(mc_seed, len(config.mc_probes))
    with open(mc_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x0", "dp_v0", "mc_estimate", "abs_error"])
        for x0, probe_seed in zip(config.mc_probes, probe_seeds):
            dp_v0 = interpolate(nominal_values[0], float(x0))
            mc = mc_safety_probability(
                config.tcl, nominal_policy, float(x0), config.horizon,
                config.mc_ntraj, probe_seed,
            )
            writer.writerow([repr(float(x0)), repr(dp_v0), repr(mc), repr(abs(dp_v0 - mc))])
    timings.append(("mc_check", time.perf_counter() - t0))
    paths["mc_check"] = mc_path

    timings.append(("total", time.perf_counter() - t_start))
    manifest_path = out / "manifest.txt"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        fh.write(f"version = {__version__}\n")
        fh.write("\n# configuration\n")
        fh.write(f"gamma = {config.gamma!r}\n")
        fh.write(f"lambda = {config.lam!r}\n")
        fh.write(f"lambda_norm = {config.lambda_norm!r}\n")
        fh.write(f"joint_kernel = {config.joint_kernel}\n")
        fh.write(f"m = {config.m}\n")
        fh.write(f"grid_lo = {config.grid_lo!r}\n")
        fh.write(f"grid_hi = {config.grid_hi!r}\n")
        fh.write(f"grid_count = {config.grid_count}\n")
        fh.write(f"horizon_minutes = {config.horizon_minutes!r}\n")
        fh.write(f"horizon_stages = {config.horizon}\n")
        fh.write(f"epsilons = {', '.join(repr(float(e)) for e in config.epsilons)}\n")
        fh.write(f"seed = {config.seed}\n")
        fh.write(f"clipping = {'on' if config.clipping else 'off'}\n")
        fh.write(f"output_dir = {config.output_dir}\n")
        fh.write(f"mc.probes = {', '.join(repr(float(p)) for p in config.mc_probes)}\n")
        fh.write(f"mc.ntraj = {config.mc_ntraj}\n")
        for name in ("R", "C", "theta", "h", "P", "eta", "noise_std", "safe_lo", "safe_hi"):
            fh.write(f"tcl.{name} = {getattr(config.tcl, name)!r}\n")
        fh.write("\n# mc_check caveat\n")
        fh.write(
            "# The stage-0 value and the Monte Carlo estimate differ by design:\n"
            "# the value carries bias from grid discretization, linear interpolation\n"
            f"# between grid points, and ridge regularization (lambda = {config.lam!r}),\n"
            "# while the Monte Carlo side is unbiased up to sampling error.\n"
        )
        fh.write("\n# wall clock, seconds\n")
        for name, secs in timings:
            fh.write(f"time.{name} = {secs:.3f}\n")
    paths["manifest"] = manifest_path

    return {
        "paths": paths,
        "solutions": solutions,
        "estimator": estimator,
        "grid": grid,
        "dataset": dataset,
    }


def with_overrides(config: ExperimentConfig, out_dir=None, seed=None) -> ExperimentConfig:
    """Apply command-line overrides without touching other fields."""
    if out_dir is not None:
        config = replace(config, output_dir=str(out_dir))
    if seed is not None:
        config = replace(config, seed=int(seed))
    return config
