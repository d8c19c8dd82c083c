"""Positive semidefinite kernels and Gram matrix assembly.

Kernels are small frozen dataclasses so that two specs built from the same
parameters compare equal; downstream code relies on that to detect mismatched
kernels. Points are row vectors. Scalars are accepted anywhere a point is
expected and are treated as 1-d points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

__all__ = [
    "Kernel",
    "Gaussian",
    "Spline1",
    "Sum",
    "Product",
    "StateAction",
    "GramMatrix",
    "kernel_eval",
    "gram",
    "as_points",
]


def as_points(points) -> np.ndarray:
    """Normalize scalars / sequences / arrays to a float array of shape (m, d)."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        # a flat sequence is a list of 1-d points, not one d-dim point
        arr = arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise ValueError(f"points must be at most 2-d, got shape {arr.shape}")
    return arr


def _as_single_point(u) -> np.ndarray:
    arr = np.asarray(u, dtype=float)
    if arr.ndim == 0:
        return arr.reshape(1)
    if arr.ndim == 1:
        return arr
    raise ValueError(f"a single point must be a scalar or 1-d, got shape {arr.shape}")


class Kernel:
    """Base class. Concrete kernels implement ``pairwise``; ``eval`` reuses it
    so that scalar evaluation and Gram assembly cannot drift apart."""

    def pairwise(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def eval(self, u, v) -> float:
        u = _as_single_point(u)
        v = _as_single_point(v)
        if u.shape != v.shape:
            raise ValueError(f"point dimensions differ: {u.shape[0]} vs {v.shape[0]}")
        return float(self.pairwise(u[None, :], v[None, :])[0, 0])

    def __call__(self, u, v) -> float:
        return self.eval(u, v)


@dataclass(frozen=True)
class Gaussian(Kernel):
    """k(u, v) = exp(-gamma * ||u - v||^2) on R^n. gamma > 0."""

    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    def pairwise(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        d2 = cdist(x, y, "sqeuclidean")
        np.multiply(d2, -self.gamma, out=d2)
        return np.exp(d2, out=d2)


@dataclass(frozen=True)
class Spline1(Kernel):
    """First-order spline kernel on nonnegative scalars.

    k(a, b) = 1 + a b + a b min(a,b) - (a+b)/2 min(a,b)^2 + min(a,b)^3 / 3.

    Positive semidefinite on [0, inf); the intended domain here is the binary
    action set {0, 1}, where the Gram over (0, 1) is [[1, 1], [1, 7/3]].
    """

    def pairwise(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        if x.shape[1] != 1 or y.shape[1] != 1:
            raise ValueError("spline kernel is defined for scalars only")
        if np.any(x < 0) or np.any(y < 0):
            raise ValueError("spline kernel arguments must be nonnegative")
        a = x[:, 0][:, None]
        b = y[:, 0][None, :]
        m = np.minimum(a, b)
        ab = a * b
        return 1.0 + ab + ab * m - 0.5 * (a + b) * m**2 + m**3 / 3.0


@dataclass(frozen=True)
class Sum(Kernel):
    """Pointwise sum of two kernels on the same domain."""

    left: Kernel
    right: Kernel

    def pairwise(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        out = self.left.pairwise(x, y)
        out += self.right.pairwise(x, y)
        return out


@dataclass(frozen=True)
class Product(Kernel):
    """Pointwise product of two kernels on the same domain."""

    left: Kernel
    right: Kernel

    def pairwise(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        out = self.left.pairwise(x, y)
        out *= self.right.pairwise(x, y)
        return out


@dataclass(frozen=True)
class StateAction(Kernel):
    """Additive kernel on stacked (state, action) points.

    A point is a vector whose last coordinate is the action and whose leading
    coordinates are the state. Evaluates state_kernel on the state block plus
    action_kernel on the action coordinate. Either side may be None, which
    drops that term and lifts the other kernel alone to the joint domain;
    combined with Product this also expresses multiplicative couplings, e.g.
    Product(StateAction(k_x, None), StateAction(None, k_a)).
    """

    state_kernel: Kernel | None
    action_kernel: Kernel | None

    def __post_init__(self):
        if self.state_kernel is None and self.action_kernel is None:
            raise ValueError("state_kernel and action_kernel cannot both be None")

    def pairwise(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        if x.shape[1] < 2 or y.shape[1] < 2:
            raise ValueError("state-action points need at least 2 coordinates")
        parts = []
        if self.state_kernel is not None:
            parts.append(self.state_kernel.pairwise(x[:, :-1], y[:, :-1]))
        if self.action_kernel is not None:
            parts.append(self.action_kernel.pairwise(x[:, -1:], y[:, -1:]))
        out = parts[0]
        for extra in parts[1:]:
            out += extra
        return out


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Kernel matrix together with the points it was evaluated on.

    entries[i, j] equals kernel.eval(points[i], points[j]); symmetric, and
    positive semidefinite up to roundoff (eigenvalues above -1e-8 * trace / m).
    """

    entries: np.ndarray
    points: np.ndarray


def kernel_eval(kernel: Kernel, u, v) -> float:
    """Evaluate ``kernel`` at a single pair of points (scalars allowed)."""
    return kernel.eval(u, v)


def gram(kernel: Kernel, points) -> GramMatrix:
    """Assemble the Gram matrix of ``kernel`` over ``points``.

    Parameters
    ----------
    kernel : Kernel
    points : array-like, shape (m, d) or (m,) for scalar points

    Returns
    -------
    GramMatrix with entries of shape (m, m), rows ordered as given.
    """
    pts = as_points(points)
    if pts.shape[0] == 0:
        raise ValueError("gram needs at least one point")
    return GramMatrix(entries=kernel.pairwise(pts, pts), points=pts)
