"""RKHS expansions, mean embeddings, MMD, and conditional mean embeddings.

Everything here is a finite kernel expansion: a function f = sum_i w_i k(z_i, .)
is stored as (kernel, points, weights). Inner products between two expansions
reduce to w' K w over the cross Gram matrix, which is all the maximum mean
discrepancy and expectation operators need.

The conditional mean embedding estimator solves the regularized system
(K_Y + m lambda I) beta = k_Y(y) once per query against a Cholesky
factorization computed at fit time.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .kernels import Kernel, as_points

__all__ = [
    "NumericalError",
    "RkhsFunction",
    "TransitionDataset",
    "CmeEstimator",
    "empirical_embedding",
    "expectation",
    "mmd",
    "fit_cme",
    "cme_weights",
    "cme_weights_many",
    "cme_embedding",
    "rkhs_norm",
]

# negative radicands beyond this are treated as a real failure, not roundoff
SQRT_CLAMP_TOL = 1e-12


class NumericalError(RuntimeError):
    """Raised when a linear-algebra step fails beyond roundoff tolerances."""


def _sqrt_clamped(radicand: float, what: str) -> float:
    if radicand < -SQRT_CLAMP_TOL:
        raise NumericalError(f"{what}: squared value {radicand} is negative beyond tolerance")
    return float(np.sqrt(max(radicand, 0.0)))


@dataclass(frozen=True, eq=False)
class RkhsFunction:
    """Finite expansion f(.) = sum_i weights[i] * kernel(points[i], .)."""

    kernel: Kernel
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = as_points(self.points)
        w = np.asarray(self.weights, dtype=float).ravel()
        if pts.shape[0] != w.shape[0]:
            raise ValueError(f"{pts.shape[0]} points but {w.shape[0]} weights")
        if pts.shape[0] == 0:
            raise ValueError("an expansion needs at least one point")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __call__(self, x):
        """Evaluate at one point or a batch; returns a scalar or 1-d array."""
        q = as_points(x)
        vals = self.kernel.pairwise(q, self.points) @ self.weights
        return float(vals[0]) if np.ndim(x) == 0 else vals


def empirical_embedding(kernel: Kernel, samples) -> RkhsFunction:
    """Mean embedding of the empirical measure on ``samples``: weights 1/m."""
    pts = as_points(samples)
    m = pts.shape[0]
    if m == 0:
        raise ValueError("empirical embedding needs at least one sample")
    return RkhsFunction(kernel=kernel, points=pts, weights=np.full(m, 1.0 / m))


def expectation(f: RkhsFunction, embedding: RkhsFunction) -> float:
    """Inner product <f, embedding>, i.e. the expectation encoded by the embedding.

    Both expansions must share the same kernel; the value is
    sum_ij w_f[i] w_e[j] k(z_f[i], z_e[j]).
    """
    if f.kernel != embedding.kernel:
        raise ValueError(f"kernel mismatch: {f.kernel} vs {embedding.kernel}")
    cross = f.kernel.pairwise(f.points, embedding.points)
    return float(f.weights @ cross @ embedding.weights)


def mmd(kernel: Kernel, samples_p, samples_q) -> float:
    """Maximum mean discrepancy between two empirical measures.

    Computed in closed form from the three Gram blocks,
    mean(K_pp) + mean(K_qq) - 2 mean(K_pq), with the radicand clamped to 0
    when it is negative within roundoff.
    """
    xp = as_points(samples_p)
    xq = as_points(samples_q)
    if xp.shape[0] == 0 or xq.shape[0] == 0:
        raise ValueError("mmd needs at least one sample on each side")
    radicand = (
        float(kernel.pairwise(xp, xp).mean())
        + float(kernel.pairwise(xq, xq).mean())
        - 2.0 * float(kernel.pairwise(xp, xq).mean())
    )
    return _sqrt_clamped(radicand, "mmd")


@dataclass(frozen=True, eq=False)
class TransitionDataset:
    """Sampled one-step transitions (state, action, next state), row-aligned."""

    states: np.ndarray
    actions: np.ndarray
    next_states: np.ndarray

    def __post_init__(self):
        s = as_points(self.states)
        a = np.asarray(self.actions, dtype=float).ravel()
        ns = as_points(self.next_states)
        if not (s.shape[0] == a.shape[0] == ns.shape[0]):
            raise ValueError(
                f"row counts differ: {s.shape[0]} states, {a.shape[0]} actions, "
                f"{ns.shape[0]} next states"
            )
        if s.shape[1] != ns.shape[1]:
            raise ValueError("state and next-state dimensions differ")
        object.__setattr__(self, "states", s)
        object.__setattr__(self, "actions", a)
        object.__setattr__(self, "next_states", ns)

    @property
    def count(self) -> int:
        return self.states.shape[0]

    def joint_points(self) -> np.ndarray:
        """Stacked (state, action) rows, action last, shape (m, d+1)."""
        return np.column_stack([self.states, self.actions])

    def to_csv(self, path) -> None:
        """Write rows as ``x,a,x_next`` (scalar states only), order preserved."""
        if self.states.shape[1] != 1:
            raise ValueError("csv serialization is defined for scalar states")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["x", "a", "x_next"])
            for x, a, xn in zip(self.states[:, 0], self.actions, self.next_states[:, 0]):
                writer.writerow([repr(float(x)), repr(float(a)), repr(float(xn))])

    @classmethod
    def from_csv(cls, path) -> "TransitionDataset":
        with open(path, "r", newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["x", "a", "x_next"]:
                raise ValueError(f"{path}: expected header x,a,x_next, got {header}")
            rows = [(float(r[0]), float(r[1]), float(r[2])) for r in reader]
        if not rows:
            raise ValueError(f"{path}: no data rows")
        arr = np.asarray(rows, dtype=float)
        return cls(states=arr[:, 0], actions=arr[:, 1], next_states=arr[:, 2])


@dataclass(frozen=True, eq=False)
class CmeEstimator:
    """Conditional mean embedding of the transition kernel, fit by kernel ridge.

    Holds the dataset, the joint kernel over (state, action), the state kernel
    used for next-state embeddings, the ridge level, and the Cholesky factor of
    K_Y + m lambda I computed once at fit time.
    """

    dataset: TransitionDataset
    joint_kernel: Kernel
    state_kernel: Kernel
    lam: float
    factor: tuple

    def weights(self, x, a) -> np.ndarray:
        return cme_weights(self, x, a)


def fit_cme(
    dataset: TransitionDataset,
    joint_kernel: Kernel,
    state_kernel: Kernel,
    lam: float,
) -> CmeEstimator:
    """Factorize K_Y + m lambda I over the dataset's (state, action) rows.

    Raises
    ------
    ValueError
        If the dataset is empty or ``lam`` is not positive.
    NumericalError
        If the shifted Gram matrix is not positive definite; the message
        carries its smallest eigenvalue.
    """
    if dataset.count == 0:
        raise ValueError("cannot fit on an empty dataset")
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    y = dataset.joint_points()
    a_mat = joint_kernel.pairwise(y, y)
    m = dataset.count
    a_mat[np.diag_indices_from(a_mat)] += m * lam
    try:
        factor = cho_factor(a_mat, lower=True, overwrite_a=True)
    except np.linalg.LinAlgError as exc:
        min_eig = float(np.linalg.eigvalsh(joint_kernel.pairwise(y, y)).min()) + m * lam
        raise NumericalError(
            f"regularized Gram matrix is not positive definite "
            f"(smallest eigenvalue about {min_eig:.3e})"
        ) from exc
    return CmeEstimator(
        dataset=dataset,
        joint_kernel=joint_kernel,
        state_kernel=state_kernel,
        lam=lam,
        factor=factor,
    )


def _query_rows(est: CmeEstimator, states, actions) -> np.ndarray:
    s = as_points(states)
    a = np.asarray(actions, dtype=float).ravel()
    if s.shape[0] != a.shape[0]:
        raise ValueError(f"{s.shape[0]} states but {a.shape[0]} actions")
    if s.shape[1] != est.dataset.states.shape[1]:
        raise ValueError(
            f"query state dimension {s.shape[1]} does not match "
            f"dataset dimension {est.dataset.states.shape[1]}"
        )
    return np.column_stack([s, a])


def cme_weights(est: CmeEstimator, x, a) -> np.ndarray:
    """Embedding weights beta(x, a) solving (K_Y + m lambda I) beta = k_Y((x, a)).

    The returned vector weighs the dataset's next states: the embedding of the
    estimated transition distribution at (x, a) is sum_i beta_i k_X(x_next_i, .).
    """
    q = _query_rows(est, np.asarray(x, dtype=float).reshape(1, -1), [float(a)])
    k_y = est.joint_kernel.pairwise(est.dataset.joint_points(), q)
    return cho_solve(est.factor, k_y[:, 0])


def cme_weights_many(est: CmeEstimator, states, actions) -> np.ndarray:
    """Weights for a batch of queries, one column per (state, action) row."""
    q = _query_rows(est, states, actions)
    k_y = est.joint_kernel.pairwise(est.dataset.joint_points(), q)
    return cho_solve(est.factor, k_y)


def cme_embedding(est: CmeEstimator, x, a) -> RkhsFunction:
    """The estimated next-state embedding at (x, a) as an explicit expansion."""
    return RkhsFunction(
        kernel=est.state_kernel,
        points=est.dataset.next_states,
        weights=cme_weights(est, x, a),
    )


def rkhs_norm(f_values, anchor_points, kernel: Kernel, lambda_norm: float) -> float:
    """Norm of the kernel ridge interpolant of ``f_values`` at ``anchor_points``.

    Solves (K + lambda_norm I) alpha = f_values and returns
    sqrt(alpha' K alpha), the RKHS norm of the fitted expansion. A negative
    radicand within roundoff is clamped to zero; beyond tolerance it raises.
    """
    anchors = as_points(anchor_points)
    f = np.asarray(f_values, dtype=float).ravel()
    if anchors.shape[0] != f.shape[0]:
        raise ValueError(f"{anchors.shape[0]} anchors but {f.shape[0]} values")
    if anchors.shape[0] == 0:
        raise ValueError("norm estimation needs at least one anchor")
    if not lambda_norm > 0:
        raise ValueError(f"lambda_norm must be positive, got {lambda_norm}")
    k_mat = kernel.pairwise(anchors, anchors)
    a_mat = k_mat.copy()
    a_mat[np.diag_indices_from(a_mat)] += lambda_norm
    try:
        factor = cho_factor(a_mat, lower=True, overwrite_a=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("shifted anchor Gram matrix is not positive definite") from exc
    alpha = cho_solve(factor, f)
    return _sqrt_clamped(float(alpha @ k_mat @ alpha), "rkhs_norm")
