"""Robust value iteration on a scalar state grid.

Value functions live on a uniform grid and extend to the continuum by linear
interpolation, constant beyond the grid hull and hard zero outside the safe
interval. Each backward stage computes, for every (grid point, action) pair,
the extreme expectation of the interpolated next value over the ambiguity
ball: the embedding-weight cache is built once (it does not depend on the
stage), and the function norm entering the epsilon term is estimated once per
stage by kernel ridge regression on the anchor points.

Both recursions are single sequential passes; results do not depend on any
intra-stage evaluation order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .kernels import as_points
from .rkhs import CmeEstimator, cme_weights_many, rkhs_norm

__all__ = [
    "StateGrid",
    "ValueFunction",
    "PolicyTable",
    "interpolate",
    "safety_value_iteration",
    "cost_value_iteration",
    "extract_policy_action",
    "write_values_csv",
    "write_policy_csv",
]


@dataclass(frozen=True)
class StateGrid:
    """Uniform grid of ``count`` points on [lo, hi]."""

    lo: float
    hi: float
    count: int

    def __post_init__(self):
        if self.count < 2:
            raise ValueError(f"grid needs at least 2 points, got {self.count}")
        if not self.lo < self.hi:
            raise ValueError(f"grid bounds must satisfy lo < hi, got [{self.lo}, {self.hi}]")

    @cached_property
    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count)

    def nearest_index(self, x) -> np.ndarray:
        """Index of the nearest grid point, ties resolved to the lower index."""
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        return np.abs(xs[:, None] - self.points[None, :]).argmin(axis=1)


@dataclass(frozen=True, eq=False)
class ValueFunction:
    """Grid values for one stage, zero outside [safe_lo, safe_hi].

    ``safe_lo = -inf, safe_hi = +inf`` disables the zeroing (cost objective).
    """

    grid: StateGrid
    values: np.ndarray
    safe_lo: float
    safe_hi: float
    stage: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).ravel()
        if vals.shape[0] != self.grid.count:
            raise ValueError(f"{vals.shape[0]} values for a {self.grid.count}-point grid")
        object.__setattr__(self, "values", vals)

    def __call__(self, x):
        return interpolate(self, x)


def interpolate(v: ValueFunction, x):
    """Evaluate ``v`` at scalar or array ``x``.

    Linear between neighbors, constant beyond the grid hull, and exactly zero
    outside the safe interval (grid points outside the safe set hold value 0
    by construction, so interpolation near the safe boundary already decays).
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.interp(xs, v.grid.points, v.values)
    out[(xs < v.safe_lo) | (xs > v.safe_hi)] = 0.0
    return float(out[0]) if np.ndim(x) == 0 else out


@dataclass(frozen=True, eq=False)
class PolicyTable:
    """Greedy action index per (stage, grid point); stages 0..L-2."""

    grid: StateGrid
    actions: np.ndarray
    choice: np.ndarray

    def __post_init__(self):
        acts = np.asarray(self.actions, dtype=float).ravel()
        ch = np.asarray(self.choice, dtype=int)
        if ch.ndim != 2 or ch.shape[1] != self.grid.count:
            raise ValueError(f"choice must be (stages, {self.grid.count}), got {ch.shape}")
        if ch.size and (ch.min() < 0 or ch.max() >= acts.shape[0]):
            raise ValueError("choice entries must index into actions")
        object.__setattr__(self, "actions", acts)
        object.__setattr__(self, "choice", ch)

    @property
    def stages(self) -> int:
        return self.choice.shape[0]


def extract_policy_action(policy: PolicyTable, stage: int, x: float) -> float:
    """Action at the grid point nearest to ``x`` (ties to the lower point)."""
    if not 0 <= stage < policy.stages:
        raise ValueError(f"stage {stage} outside 0..{policy.stages - 1}")
    idx = int(policy.grid.nearest_index(float(x))[0])
    return float(policy.actions[policy.choice[stage, idx]])


def _norm_values(v: ValueFunction, anchors: np.ndarray, on_grid: bool) -> np.ndarray:
    # on the default anchors (the grid itself) the stored values are exact
    return v.values if on_grid else interpolate(v, anchors[:, 0])


def safety_value_iteration(
    grid: StateGrid,
    actions,
    estimator: CmeEstimator,
    epsilon: float,
    horizon: int,
    safe_lo: float,
    safe_hi: float,
    lambda_norm: float,
    clip: bool = True,
    norm_anchors=None,
) -> tuple[list[ValueFunction], PolicyTable]:
    """Robust maximal safety probabilities by backward induction.

    The terminal value is the indicator of [safe_lo, safe_hi] on the grid.
    Earlier stages take, at each safe grid point, the best action under the
    worst-case (inf) expectation of the next value; points outside the safe
    interval stay at zero. ``clip`` truncates each stage into [0, 1], which
    the exact recursion satisfies but the estimated one may leave slightly.

    Returns stage-ascending value functions (one per stage, stage L-1 last)
    and the greedy policy for stages 0..L-2, ties to the lower action index.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be at least 1, got {horizon}")
    acts = np.asarray(actions, dtype=float).ravel()
    if acts.shape[0] == 0:
        raise ValueError("need at least one action")
    if not epsilon >= 0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    if not safe_lo <= safe_hi:
        raise ValueError(f"safe interval is empty: [{safe_lo}, {safe_hi}]")

    pts = grid.points
    n_pts, n_act = pts.shape[0], acts.shape[0]
    safe = (pts >= safe_lo) & (pts <= safe_hi)

    terminal = ValueFunction(grid, safe.astype(float), safe_lo, safe_hi, horizon - 1)
    if horizon == 1:
        return [terminal], PolicyTable(grid, acts, np.zeros((0, n_pts), dtype=int))

    anchors = pts[:, None] if norm_anchors is None else as_points(norm_anchors)
    on_grid = norm_anchors is None
    beta = cme_weights_many(
        estimator, np.repeat(pts, n_act), np.tile(acts, n_pts)
    )  # column g * n_act + j holds beta(grid g, action j); stage independent
    x_next = estimator.dataset.next_states[:, 0]

    values = [terminal]
    choice = np.zeros((horizon - 1, n_pts), dtype=int)
    for stage in range(horizon - 2, -1, -1):
        v_next = values[-1]
        f_norm = rkhs_norm(
            _norm_values(v_next, anchors, on_grid), anchors,
            estimator.state_kernel, lambda_norm,
        )
        f_vals = interpolate(v_next, x_next)
        objective = (beta.T @ f_vals).reshape(n_pts, n_act)
        objective -= epsilon * f_norm
        best = objective.argmax(axis=1)  # first maximum, so ties go low
        vals = np.where(safe, objective[np.arange(n_pts), best], 0.0)
        if clip:
            np.clip(vals, 0.0, 1.0, out=vals)
        choice[stage] = best
        values.append(ValueFunction(grid, vals, safe_lo, safe_hi, stage))

    values.reverse()
    return values, PolicyTable(grid, acts, choice)


def cost_value_iteration(
    grid: StateGrid,
    actions,
    estimator: CmeEstimator,
    epsilon: float,
    horizon: int,
    stage_cost,
    terminal_cost,
    lambda_norm: float,
    norm_anchors=None,
) -> tuple[list[ValueFunction], PolicyTable]:
    """Robust minimal cost-to-go by backward induction.

    ``stage_cost(x, a)`` and ``terminal_cost(x)`` are scalar callables. Each
    stage minimizes stage cost plus the worst-case (sup) expectation of the
    next value; no clipping and no safe-set zeroing apply. Ties in the argmin
    go to the lower action index.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be at least 1, got {horizon}")
    acts = np.asarray(actions, dtype=float).ravel()
    if acts.shape[0] == 0:
        raise ValueError("need at least one action")
    if not epsilon >= 0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")

    pts = grid.points
    n_pts, n_act = pts.shape[0], acts.shape[0]
    no_lo, no_hi = -np.inf, np.inf

    term_vals = np.array([float(terminal_cost(x)) for x in pts])
    terminal = ValueFunction(grid, term_vals, no_lo, no_hi, horizon - 1)
    if horizon == 1:
        return [terminal], PolicyTable(grid, acts, np.zeros((0, n_pts), dtype=int))

    anchors = pts[:, None] if norm_anchors is None else as_points(norm_anchors)
    on_grid = norm_anchors is None
    beta = cme_weights_many(estimator, np.repeat(pts, n_act), np.tile(acts, n_pts))
    x_next = estimator.dataset.next_states[:, 0]
    cost = np.array([[float(stage_cost(x, a)) for a in acts] for x in pts])

    values = [terminal]
    choice = np.zeros((horizon - 1, n_pts), dtype=int)
    for stage in range(horizon - 2, -1, -1):
        v_next = values[-1]
        f_norm = rkhs_norm(
            _norm_values(v_next, anchors, on_grid), anchors,
            estimator.state_kernel, lambda_norm,
        )
        f_vals = interpolate(v_next, x_next)
        objective = cost + (beta.T @ f_vals).reshape(n_pts, n_act)
        objective += epsilon * f_norm
        best = objective.argmin(axis=1)  # first minimum, so ties go low
        choice[stage] = best
        values.append(
            ValueFunction(grid, objective[np.arange(n_pts), best], no_lo, no_hi, stage)
        )

    values.reverse()
    return values, PolicyTable(grid, acts, choice)


def write_values_csv(values: list[ValueFunction], path) -> None:
    """Write stage-ascending value functions as rows ``stage,x,value``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["stage", "x", "value"])
        for v in sorted(values, key=lambda v: v.stage):
            for x, val in zip(v.grid.points, v.values):
                writer.writerow([v.stage, repr(float(x)), repr(float(val))])


def write_policy_csv(policy: PolicyTable, path) -> None:
    """Write the policy as rows ``stage,x,action`` (action values, not indices)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["stage", "x", "action"])
        for stage in range(policy.stages):
            for g, x in enumerate(policy.grid.points):
                action = policy.actions[policy.choice[stage, g]]
                writer.writerow([stage, repr(float(x)), repr(float(action))])
