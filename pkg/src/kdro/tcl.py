"""Thermostatically controlled load: dynamics, sampling, Monte Carlo checks.

One cooling unit regulating a temperature x against a warmer ambient. With the
unit off (a = 0) the temperature relaxes toward the ambient theta; with it on
(a = 1) it relaxes toward theta - eta R P, well below the comfort band. Per
step of length h hours,

    x_next = alpha x + (1 - alpha) (theta - eta R P a) + omega,
    alpha  = exp(-h / (C R)),

with additive zero-mean Gaussian noise omega.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .dp import PolicyTable
from .rkhs import TransitionDataset

__all__ = [
    "RngSeed",
    "TclParams",
    "tcl_step",
    "generate_dataset",
    "mc_safety_probability",
]

# seeds are plain unsigned ints; identical seeds reproduce identical streams
RngSeed = int


@dataclass(frozen=True)
class TclParams:
    """Physical constants and noise level; defaults are the case-study values."""

    R: float = 2.0          # thermal resistance, degC per kW
    C: float = 2.0          # thermal capacitance, kWh per degC
    theta: float = 32.0     # ambient temperature, degC
    h: float = 5.0 / 60.0   # step length, hours
    P: float = 14.0         # energy transfer rate, kW
    eta: float = 0.7        # coefficient of performance
    noise_std: float = 0.25
    safe_lo: float = 19.0
    safe_hi: float = 22.0

    def __post_init__(self):
        for name in ("R", "C", "theta", "h", "P", "eta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.noise_std >= 0:
            raise ValueError(f"noise_std must be nonnegative, got {self.noise_std}")
        if not self.safe_lo < self.safe_hi:
            raise ValueError(f"safe interval is empty: [{self.safe_lo}, {self.safe_hi}]")

    @property
    def alpha(self) -> float:
        """Per-step relaxation factor exp(-h / (C R)), strictly inside (0, 1)."""
        return math.exp(-self.h / (self.C * self.R))


def tcl_step(params: TclParams, x, a, omega):
    """One transition; broadcasts over arrays of states, actions, and noise.

    Actions are meant to be 0 (off) or 1 (on); intermediate values act as a
    fractional duty cycle.
    """
    alpha = params.alpha
    target = params.theta - params.eta * params.R * params.P * np.asarray(a, dtype=float)
    out = alpha * np.asarray(x, dtype=float) + (1.0 - alpha) * target + omega
    return float(out) if np.ndim(out) == 0 else out


def generate_dataset(
    params: TclParams,
    m: int,
    state_lo: float,
    state_hi: float,
    seed: RngSeed,
) -> TransitionDataset:
    """Sample m one-step transitions from uniform states and coin-flip actions.

    States are uniform on [state_lo, state_hi], actions uniform on {0, 1},
    noise Gaussian with the configured deviation. Draw order is fixed, so a
    seed pins the dataset exactly.
    """
    if m < 1:
        raise ValueError(f"need at least one sample, got m={m}")
    if not state_lo < state_hi:
        raise ValueError(f"empty sampling interval [{state_lo}, {state_hi}]")
    rng = np.random.default_rng(seed)
    x = rng.uniform(state_lo, state_hi, m)
    a = rng.integers(0, 2, m).astype(float)
    omega = rng.normal(0.0, params.noise_std, m)
    return TransitionDataset(states=x, actions=a, next_states=tcl_step(params, x, a, omega))


def mc_safety_probability(
    params: TclParams,
    policy: PolicyTable,
    x0: float,
    horizon: int,
    n_traj: int,
    seed: RngSeed,
    dump_path=None,
) -> float:
    """Fraction of closed-loop trajectories staying inside the safe interval.

    Simulates ``n_traj`` trajectories x_0 .. x_{horizon-1} from ``x0``, picking
    actions from ``policy`` at the nearest grid point, and returns the fraction
    with every visited state in [safe_lo, safe_hi]. Each trajectory draws its
    noise from its own spawned substream, so the estimate depends only on the
    seed, not on evaluation order.

    ``dump_path`` writes every trajectory as rows ``traj,k,x,a`` with the
    action applied at step k (empty for the final state, where none is taken).
    """
    if horizon < 1:
        raise ValueError(f"horizon must be at least 1, got {horizon}")
    if n_traj < 1:
        raise ValueError(f"need at least one trajectory, got {n_traj}")
    steps = horizon - 1
    if policy.stages < steps:
        raise ValueError(f"policy covers {policy.stages} stages, horizon needs {steps}")

    children = np.random.SeedSequence(seed).spawn(n_traj)
    noise = np.empty((n_traj, steps))
    for i, child in enumerate(children):
        noise[i] = np.random.default_rng(child).normal(0.0, params.noise_std, steps)

    x = np.full(n_traj, float(x0))
    safe_all = (x >= params.safe_lo) & (x <= params.safe_hi)
    xs = np.empty((n_traj, horizon))
    acts = np.empty((n_traj, steps))
    xs[:, 0] = x
    for k in range(steps):
        a = policy.actions[policy.choice[k, policy.grid.nearest_index(x)]]
        x = tcl_step(params, x, a, noise[:, k])
        safe_all &= (x >= params.safe_lo) & (x <= params.safe_hi)
        xs[:, k + 1] = x
        acts[:, k] = a

    if dump_path is not None:
        with open(dump_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["traj", "k", "x", "a"])
            for i in range(n_traj):
                for k in range(horizon):
                    a_str = repr(float(acts[i, k])) if k < steps else ""
                    writer.writerow([i, k, repr(float(xs[i, k])), a_str])

    return float(safe_all.mean())
