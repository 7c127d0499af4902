"""Kernel support vector regression without an intercept.

The primal problem over coefficients alpha and slacks xi is

    min  sum_i xi_i + (lambda/2) alpha^T K alpha
    s.t. xi_i >= 0,
         xi_i >=  (y_i - (K alpha)_i) - epsilon,
         xi_i >= -(y_i - (K alpha)_i) - epsilon,

an epsilon-insensitive loss with kernel-norm regularization.  Training solves
the equivalent box-constrained dual

    max  y^T beta - epsilon ||beta||_1 - (1 / (2 lambda)) beta^T K beta,
    s.t. ||beta||_inf <= 1,       alpha = beta / lambda,

by exact coordinate maximization: each coordinate update is a soft threshold
followed by a clip, so every sweep increases the dual objective and the
iteration converges for any PSD gram matrix.  Optimality is certified by the
KKT residual of the primal-dual pair, which the caller-facing contract caps
at 1e-6.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import KernelSpec, gram_matrix, kernel_vector

__all__ = ["SvrModel", "TrainingError", "svr_train", "svr_predict", "svr_objective", "kkt_residual"]

_RIDGE = 1e-10  # absorbs tiny negative eigenvalues of numerically PSD grams


class TrainingError(RuntimeError):
    """Optimization failed to meet its optimality contract."""


@dataclass(frozen=True)
class SvrModel:
    """A trained regressor: predictions are sum_i alpha_i k(x_i, x)."""

    kernel: KernelSpec
    alphas: np.ndarray
    inputs: np.ndarray
    lam: float
    epsilon_tube: float
    kkt: float
    objective: float


def _primal_parts(K: np.ndarray, y: np.ndarray, alpha: np.ndarray, epsilon: float):
    fitted = K @ alpha
    err = y - fitted
    xi = np.maximum(0.0, np.abs(err) - epsilon)
    return fitted, err, xi


def svr_objective(K: np.ndarray, y: np.ndarray, lam: float, epsilon: float,
                  alpha: np.ndarray) -> float:
    """Primal objective with slacks at their minimal feasible values."""
    _, _, xi = _primal_parts(K, y, alpha, epsilon)
    return float(np.sum(xi) + 0.5 * lam * alpha @ K @ alpha)


def kkt_residual(K: np.ndarray, y: np.ndarray, lam: float, epsilon: float,
                 alpha: np.ndarray) -> float:
    """Max-norm KKT violation of the primal-dual pair encoded by alpha.

    The dual multipliers are reconstructed from beta = lambda * alpha as
    p = max(beta, 0), q = max(-beta, 0), mu = 1 - p - q; the residual collects
    dual feasibility and all three complementarity families.  Stationarity and
    primal feasibility hold by construction.
    """
    beta = lam * alpha
    p = np.maximum(beta, 0.0)
    q = np.maximum(-beta, 0.0)
    mu = 1.0 - p - q
    _, err, xi = _primal_parts(K, y, alpha, epsilon)
    slack_up = xi - err + epsilon    # xi_i >= err_i - epsilon
    slack_dn = xi + err + epsilon    # xi_i >= -err_i - epsilon
    parts = [
        np.max(np.maximum(0.0, -mu), initial=0.0),
        np.max(np.abs(mu * xi), initial=0.0),
        np.max(np.abs(p * slack_up), initial=0.0),
        np.max(np.abs(q * slack_dn), initial=0.0),
    ]
    return float(max(parts))


def svr_train(
    X: np.ndarray,
    y: np.ndarray,
    kernel: KernelSpec,
    lam: float,
    epsilon_tube: float = 0.01,
    gram: np.ndarray | None = None,
    tol: float = 1e-8,
    max_sweeps: int = 100_000,
) -> SvrModel:
    """Fit the regressor by dual coordinate descent.

    ``gram`` may carry a precomputed kernel matrix for the rows of ``X`` (a
    hyperparameter sweep reuses it); otherwise it is built here.  Training
    stops when the KKT residual drops below ``tol`` and raises
    :class:`TrainingError` if the residual is still above 1e-6 when the sweep
    budget runs out.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    if y.shape != (n,):
        raise ValueError(f"targets must have shape ({n},), got {y.shape}")
    if not (np.isfinite(lam) and lam > 0):
        raise ValueError(f"lambda must be finite and > 0, got {lam}")
    if epsilon_tube < 0:
        raise ValueError(f"epsilon_tube must be >= 0, got {epsilon_tube}")
    K = gram_matrix(kernel, X) if gram is None else np.asarray(gram, dtype=float)
    if K.shape != (n, n):
        raise ValueError(f"gram matrix must have shape ({n}, {n}), got {K.shape}")
    K = K + _RIDGE * np.eye(n)

    beta = np.zeros(n)
    k_beta = np.zeros(n)
    diag = np.diagonal(K).copy()
    thresh = lam * epsilon_tube
    residual = np.inf
    for _ in range(max_sweeps):
        max_shift = 0.0
        for i in range(n):
            z = lam * y[i] - (k_beta[i] - diag[i] * beta[i])
            target = np.sign(z) * max(0.0, abs(z) - thresh) / diag[i]
            new = min(1.0, max(-1.0, target))
            shift = new - beta[i]
            if shift != 0.0:
                k_beta += shift * K[:, i]
                beta[i] = new
                max_shift = max(max_shift, abs(shift))
        residual = kkt_residual(K, y, lam, epsilon_tube, beta / lam)
        if residual <= tol:
            break
        if max_shift == 0.0:
            break  # exact fixed point; residual is as small as it gets
    if residual > 1e-6:
        raise TrainingError(
            f"coordinate descent stopped with KKT residual {residual:.3e} > 1e-6"
        )
    alpha = beta / lam
    return SvrModel(
        kernel=kernel,
        alphas=alpha,
        inputs=X.copy(),
        lam=float(lam),
        epsilon_tube=float(epsilon_tube),
        kkt=float(residual),
        objective=svr_objective(K, y, lam, epsilon_tube, alpha),
    )


def svr_predict(model: SvrModel, x: np.ndarray) -> float | np.ndarray:
    """Predict one point (1-D input) or a batch (2-D input, one row each)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return float(model.alphas @ kernel_vector(model.kernel, model.inputs, x))
    return np.array([
        float(model.alphas @ kernel_vector(model.kernel, model.inputs, row)) for row in x
    ])
