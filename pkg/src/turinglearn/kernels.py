"""Kernels on histograms and on target vectors.

Histogram inputs are nonnegative vectors on a shared binning; the squared
Wasserstein distance treats bin indices as positions on a line with cost
(i - j)^2 and is computed exactly through the inverse-CDF (quantile-matching)
formulation, which for one-dimensional transport needs no linear program.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "KernelSpec",
    "chi2_symmetric",
    "chi2_exponential",
    "chi2_divergence",
    "wasserstein_sq",
    "wasserstein_kernel",
    "gaussian_output",
    "gram_gaussian",
    "gram_matrix",
    "kernel_vector",
    "pairwise_divergence",
    "gram_from_divergence",
    "cross_divergence",
]

KERNEL_KINDS = ("chi2", "chi2exp", "wasserstein")


def _check_histogram_pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError(f"histograms must be 1-D with equal length, got {x.shape} and {y.shape}")
    if np.any(x < 0) or np.any(y < 0):
        raise ValueError("histogram entries must be nonnegative")
    return x, y


def chi2_symmetric(x, y) -> float:
    """Parameter-free overlap kernel: sum of x_i y_i / (x_i + y_i).

    Bins empty in both histograms contribute zero.
    """
    x, y = _check_histogram_pair(x, y)
    denom = x + y
    mask = denom > 0
    return float(np.sum(x[mask] * y[mask] / denom[mask]))


def chi2_divergence(x, y) -> float:
    """The chi-squared distance sum of (x_i - y_i)^2 / (x_i + y_i)."""
    x, y = _check_histogram_pair(x, y)
    denom = x + y
    mask = denom > 0
    diff = x[mask] - y[mask]
    return float(np.sum(diff * diff / denom[mask]))


def chi2_exponential(x, y, gamma: float) -> float:
    """exp(-chi2_divergence / gamma); gamma must be > 0."""
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    return float(np.exp(-chi2_divergence(x, y) / gamma))


def wasserstein_sq(x, y) -> float:
    """Exact squared Wasserstein distance between two binned distributions.

    Masses must agree to 1e-9.  Bin index differences enter the cost
    quadratically, so two unit point masses k bins apart are at distance k^2.
    The quantile functions of both histograms are piecewise constant; the
    transport integral is accumulated over the merged breakpoints.
    """
    x, y = _check_histogram_pair(x, y)
    total_x, total_y = float(x.sum()), float(y.sum())
    if abs(total_x - total_y) > 1e-9:
        raise ValueError(f"histogram masses differ: {total_x} vs {total_y}")
    if total_x == 0:
        return 0.0
    cum_x = np.cumsum(x)
    cum_y = np.cumsum(y)
    breaks = np.union1d(cum_x, cum_y)
    last = len(x) - 1
    total = 0.0
    prev = 0.0
    for t in breaks:
        if t <= prev:
            continue
        ix = min(int(np.searchsorted(cum_x, prev, side="right")), last)
        iy = min(int(np.searchsorted(cum_y, prev, side="right")), last)
        total += (t - prev) * (ix - iy) ** 2
        prev = t
    return float(total)


def wasserstein_kernel(x, y, gamma: float) -> float:
    """exp(-wasserstein_sq / gamma); gamma must be > 0."""
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    return float(np.exp(-wasserstein_sq(x, y) / gamma))


def gaussian_output(y, y2, gamma: float) -> float:
    """Gaussian kernel on target vectors: exp(-||y - y2||^2 / gamma)."""
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    y = np.asarray(y, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    if y.shape != y2.shape:
        raise ValueError(f"target vectors must share a shape, got {y.shape} and {y2.shape}")
    diff = y - y2
    return float(np.exp(-np.dot(diff, diff) / gamma))


def gram_gaussian(Y: np.ndarray, gamma: float) -> np.ndarray:
    """Gaussian gram matrix over the rows of ``Y`` (vectorized)."""
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    sq = np.sum(Y * Y, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (Y @ Y.T)
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-d2 / gamma)


@dataclass(frozen=True)
class KernelSpec:
    """A histogram kernel selected by name.

    ``kind`` is one of "chi2" (parameter-free overlap), "chi2exp", or
    "wasserstein"; the exponential kinds require ``gamma``.
    """

    kind: str
    gamma: float | None = None

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}; expected one of {KERNEL_KINDS}")
        if self.kind == "chi2":
            if self.gamma is not None:
                raise ValueError("the chi2 overlap kernel takes no gamma")
        elif self.gamma is None or not self.gamma > 0:
            raise ValueError(f"kernel {self.kind!r} needs gamma > 0, got {self.gamma}")

    def evaluate(self, x, y) -> float:
        if self.kind == "chi2":
            return chi2_symmetric(x, y)
        if self.kind == "chi2exp":
            return chi2_exponential(x, y, self.gamma)
        return wasserstein_kernel(x, y, self.gamma)


def gram_matrix(spec: KernelSpec, X: np.ndarray) -> np.ndarray:
    """Symmetric kernel matrix over the rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    K = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            K[i, j] = K[j, i] = spec.evaluate(X[i], X[j])
    return K


def kernel_vector(spec: KernelSpec, X: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Kernel evaluations of one point against the rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.array([spec.evaluate(row, x) for row in X])


def pairwise_divergence(kind: str, X: np.ndarray) -> np.ndarray:
    """The gamma-independent part of a kernel matrix.

    For the exponential kinds this is the divergence matrix D with
    K = exp(-D / gamma); for "chi2" the kernel itself is returned, since it
    has no parameter.  Precomputing D lets a hyperparameter sweep reuse the
    expensive pairwise pass.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    D = np.empty((n, n))
    if kind == "chi2":
        fn = chi2_symmetric
    elif kind == "chi2exp":
        fn = chi2_divergence
    elif kind == "wasserstein":
        fn = wasserstein_sq
    else:
        raise ValueError(f"unknown kernel kind {kind!r}")
    for i in range(n):
        for j in range(i, n):
            D[i, j] = D[j, i] = fn(X[i], X[j])
    return D


def gram_from_divergence(kind: str, D: np.ndarray, gamma: float | None) -> np.ndarray:
    """Finish a kernel matrix from its precomputed divergence part."""
    if kind == "chi2":
        return np.asarray(D, dtype=float).copy()
    if gamma is None or not gamma > 0:
        raise ValueError(f"kernel {kind!r} needs gamma > 0, got {gamma}")
    return np.exp(-np.asarray(D, dtype=float) / gamma)


def cross_divergence(kind: str, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Divergence (or chi2 kernel) of every row of ``A`` against every row of ``B``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if kind == "chi2":
        fn = chi2_symmetric
    elif kind == "chi2exp":
        fn = chi2_divergence
    elif kind == "wasserstein":
        fn = wasserstein_sq
    else:
        raise ValueError(f"unknown kernel kind {kind!r}")
    D = np.empty((A.shape[0], B.shape[0]))
    for i in range(A.shape[0]):
        for j in range(B.shape[0]):
            D[i, j] = fn(A[i], B[j])
    return D
