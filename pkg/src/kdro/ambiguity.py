"""Worst-case expectations over a norm ball around a conditional embedding.

The ambiguity set is the ball of radius epsilon, in the embedding norm, around
the estimated conditional mean embedding at a query (state, action). For a
function f with expansion values f(x_next_i) and norm ||f||, the extreme
expectations over the ball are available in closed form:

    sup = sum_i beta_i f(x_next_i) + epsilon ||f||
    inf = sum_i beta_i f(x_next_i) - epsilon ||f||

since the linear functional mu -> <f, mu> over a ball is maximized at
center + epsilon f / ||f|| and minimized at the antipode.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .rkhs import (
    CmeEstimator,
    RkhsFunction,
    _sqrt_clamped,
    cme_embedding,
    cme_weights,
    expectation,
)

__all__ = [
    "Direction",
    "AmbiguityBall",
    "TightnessReport",
    "support_value",
    "worst_case_expectation",
    "support_tightness_check",
]


class Direction(Enum):
    SUP = "sup"
    INF = "inf"


@dataclass(frozen=True)
class AmbiguityBall:
    """Ball of radius epsilon around the estimated embedding at (state, action)."""

    estimator: CmeEstimator
    epsilon: float
    state: float
    action: float

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")


def support_value(
    weights: np.ndarray,
    f_values: np.ndarray,
    f_norm: float,
    epsilon: float,
    direction: Direction,
) -> float:
    """Extreme expectation given precomputed embedding weights.

    ``weights`` are the embedding weights over the dataset's next states and
    ``f_values`` the function values at those next states; the center term is
    their dot product and the radius term is epsilon * f_norm.
    """
    if f_norm < 0:
        raise ValueError(f"f_norm must be nonnegative, got {f_norm}")
    w = np.asarray(weights, dtype=float).ravel()
    f = np.asarray(f_values, dtype=float).ravel()
    if w.shape[0] != f.shape[0]:
        raise ValueError(f"{w.shape[0]} weights but {f.shape[0]} function values")
    center = float(w @ f)
    if direction is Direction.SUP:
        return center + epsilon * f_norm
    if direction is Direction.INF:
        return center - epsilon * f_norm
    raise ValueError(f"unknown direction {direction!r}")


def worst_case_expectation(
    ball: AmbiguityBall,
    f_values,
    f_norm: float,
    direction: Direction,
) -> float:
    """Sup or inf of the expectation of f over the ambiguity ball.

    ``f_values`` must hold f evaluated at the estimator dataset's next states,
    in dataset order, and ``f_norm`` the caller's norm (or norm bound) for f.
    """
    f = np.asarray(f_values, dtype=float).ravel()
    m = ball.estimator.dataset.count
    if f.shape[0] != m:
        raise ValueError(f"expected {m} function values, got {f.shape[0]}")
    beta = cme_weights(ball.estimator, ball.state, ball.action)
    return support_value(beta, f, f_norm, ball.epsilon, direction)


@dataclass(frozen=True)
class TightnessReport:
    """Outcome of a randomized check of the closed-form support value."""

    passed: bool
    worst_margin: float   # max over sampled directions of value - sup
    maximizer_gap: float  # |value at the analytic maximizer - sup|
    trials: int


def _exact_norm(f: RkhsFunction) -> float:
    k_mat = f.kernel.pairwise(f.points, f.points)
    return _sqrt_clamped(float(f.weights @ k_mat @ f.weights), "expansion norm")


def support_tightness_check(
    ball: AmbiguityBall,
    f: RkhsFunction,
    trials: int,
    rng,
    margin_tol: float = 1e-10,
    maximizer_tol: float = 1e-8,
) -> TightnessReport:
    """Verify the closed-form sup empirically.

    Samples ``trials`` random unit-norm expansions g, each an embedding
    perturbation center + epsilon g inside the ball boundary, and checks that
    no sampled candidate exceeds the closed-form sup beyond ``margin_tol``.
    Also evaluates the analytic maximizer g* = f / ||f||, which must attain
    the sup within ``maximizer_tol``.

    ``f`` must be an expansion in the estimator's state kernel with nonzero
    norm; ``rng`` is a seed or numpy Generator.
    """
    if f.kernel != ball.estimator.state_kernel:
        raise ValueError("f must use the estimator's state kernel")
    f_norm = _exact_norm(f)
    if f_norm == 0.0:
        raise ValueError("f has zero norm; the maximizing direction is undefined")
    rng = np.random.default_rng(rng)

    center = cme_embedding(ball.estimator, ball.state, ball.action)
    f_values = f(ball.estimator.dataset.next_states)
    sup = support_value(center.weights, f_values, f_norm, ball.epsilon, Direction.SUP)

    def candidate_value(g: RkhsFunction) -> float:
        # <f, center + epsilon g> = <f, center> + epsilon <f, g>
        return expectation(f, center) + ball.epsilon * expectation(f, g)

    lo = ball.estimator.dataset.next_states.min(axis=0)
    hi = ball.estimator.dataset.next_states.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)

    worst_margin = -np.inf
    done = 0
    while done < trials:
        npts = int(rng.integers(1, 6))
        pts = lo + span * rng.random((npts, lo.shape[0]))
        w = rng.standard_normal(npts)
        g = RkhsFunction(kernel=f.kernel, points=pts, weights=w)
        g_norm = _exact_norm(g)
        if g_norm < 1e-9:
            continue  # degenerate draw, resample
        g = RkhsFunction(kernel=f.kernel, points=pts, weights=w / g_norm)
        worst_margin = max(worst_margin, candidate_value(g) - sup)
        done += 1
    if trials == 0:
        worst_margin = 0.0

    g_star = RkhsFunction(kernel=f.kernel, points=f.points, weights=f.weights / f_norm)
    maximizer_gap = abs(candidate_value(g_star) - sup)

    passed = worst_margin <= margin_tol and maximizer_gap <= maximizer_tol
    return TightnessReport(
        passed=passed,
        worst_margin=float(worst_margin),
        maximizer_gap=float(maximizer_gap),
        trials=trials,
    )
