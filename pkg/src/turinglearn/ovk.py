"""Structured-output regression with an operator-valued kernel.

Targets are embedded through a Gaussian kernel L on target space; the model
couples input and output kernels through the n x n matrix system

    (K (x) T + n*lambda*I) vec(U) = vec(I_n),
    T = L - (K + n*eps_reg*I)^{-1} K L,

where (x) is the Kronecker product.  The n^2 x n^2 system is never formed:
``vec`` identities turn its action on a matrix V into T V K + n*lambda*V, and
the solve runs as GMRES over matrix-shaped iterates under the trace inner
product (numerically identical to GMRES on the flattened system, while keeping
every operation at matrix cost).

Predicting a target point requires inverting the output embedding: the
embedding vector v weights Gaussian bumps centred at the training targets, and
the pre-image is the maximizer of their sum, found by multi-start gradient
ascent with backtracking and clipped to the unit box that normalized targets
live in.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .kernels import KernelSpec, gram_gaussian, gram_matrix, kernel_vector
from .svr import TrainingError

__all__ = ["OvkModel", "ovk_train", "ovk_embed", "ovk_predict", "global_gmres"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OvkModel:
    """Trained operator-valued-kernel regressor."""

    input_kernel: KernelSpec
    gamma_out: float
    lam: float
    eps_reg: float
    inputs: np.ndarray       # (n, B) training features
    targets: np.ndarray      # (n, d) normalized training targets
    coupling: np.ndarray     # U, solution of the Kronecker system, (n, n)
    output_map: np.ndarray   # T, (n, n)
    solver_residual: float


def global_gmres(apply, rhs: np.ndarray, tol: float = 1e-8,
                 restart: int = 50, max_restarts: int = 20) -> tuple[np.ndarray, float]:
    """Restarted GMRES over matrix-shaped unknowns.

    ``apply`` maps an (n, n) matrix to an (n, n) matrix and must be linear.
    Inner products between iterates are trace (Frobenius) inner products, so
    the Arnoldi recurrence runs exactly as in the vector case.  Returns the
    solution together with the relative residual actually reached.

    Raises
    ------
    TrainingError
        If the residual is still above ``tol`` relative after all restarts.
    """
    rhs = np.asarray(rhs, dtype=float)
    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0:
        return np.zeros_like(rhs), 0.0
    X = np.zeros_like(rhs)
    for _ in range(max_restarts):
        R = rhs - apply(X)
        beta = float(np.linalg.norm(R))
        if beta <= tol * rhs_norm:
            return X, beta / rhs_norm
        basis = [R / beta]
        H = np.zeros((restart + 1, restart))
        # Givens rotations keep the least-squares residual available per step.
        cs = np.zeros(restart)
        sn = np.zeros(restart)
        g = np.zeros(restart + 1)
        g[0] = beta
        steps = 0
        for j in range(restart):
            W = apply(basis[j])
            for i in range(j + 1):
                H[i, j] = float(np.vdot(basis[i], W))
                W = W - H[i, j] * basis[i]
            H[j + 1, j] = float(np.linalg.norm(W))
            for i in range(j):
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            r = float(np.hypot(H[j, j], H[j + 1, j]))
            if r == 0.0:
                # the operator annihilated this direction: the Krylov space
                # closed without containing a solution, so keep what we have
                steps = j
                break
            cs[j], sn[j] = H[j, j] / r, H[j + 1, j] / r
            H[j, j] = r
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            steps = j + 1
            lucky = H[j + 1, j] <= 1e-14 * rhs_norm
            if not lucky:
                basis.append(W / H[j + 1, j])
            if abs(g[j + 1]) <= tol * rhs_norm or lucky:
                break
        y = np.zeros(steps)
        for i in range(steps - 1, -1, -1):
            y[i] = (g[i] - H[i, i + 1:steps] @ y[i + 1:steps]) / H[i, i]
        for i in range(steps):
            X = X + y[i] * basis[i]
        residual = float(np.linalg.norm(rhs - apply(X)))
        if residual <= tol * rhs_norm:
            return X, residual / rhs_norm
    residual = float(np.linalg.norm(rhs - apply(X))) / rhs_norm
    raise TrainingError(f"matrix GMRES stalled at relative residual {residual:.3e} > {tol:.1e}")


def ovk_train(
    X: np.ndarray,
    Y: np.ndarray,
    input_kernel: KernelSpec,
    gamma_out: float,
    lam: float,
    eps_reg: float = 1e-4,
    gram: np.ndarray | None = None,
    tol: float = 1e-8,
) -> OvkModel:
    """Assemble T and solve the coupled system for U.

    ``Y`` holds normalized target rows in the unit box.  ``gram`` may inject a
    precomputed input kernel matrix during hyperparameter sweeps.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n = X.shape[0]
    if Y.shape[0] != n:
        raise ValueError(f"need one target row per input row, got {Y.shape[0]} vs {n}")
    if not (lam > 0 and eps_reg > 0 and gamma_out > 0):
        raise ValueError("lambda, eps_reg, and gamma_out must all be > 0")
    K = gram_matrix(input_kernel, X) if gram is None else np.asarray(gram, dtype=float)
    if K.shape != (n, n):
        raise ValueError(f"gram matrix must have shape ({n}, {n}), got {K.shape}")
    L = gram_gaussian(Y, gamma_out)
    T = L - np.linalg.solve(K + n * eps_reg * np.eye(n), K @ L)
    shift = n * lam
    U, residual = global_gmres(lambda V: T @ V @ K + shift * V, np.eye(n), tol=tol)
    return OvkModel(
        input_kernel=input_kernel,
        gamma_out=float(gamma_out),
        lam=float(lam),
        eps_reg=float(eps_reg),
        inputs=X.copy(),
        targets=Y.copy(),
        coupling=U,
        output_map=T,
        solver_residual=residual,
    )


def ovk_embed(model: OvkModel, x: np.ndarray) -> np.ndarray:
    """Embedding weights of one input: v = T U k_x."""
    k_x = kernel_vector(model.input_kernel, model.inputs, np.asarray(x, dtype=float))
    return model.output_map @ (model.coupling @ k_x)


def _bump_objective(y: np.ndarray, targets: np.ndarray, v: np.ndarray, gamma: float):
    diff = y[None, :] - targets
    weights = np.exp(-np.sum(diff * diff, axis=1) / gamma)
    value = float(v @ weights)
    grad = -(2.0 / gamma) * ((v * weights) @ diff)
    return value, grad


def ovk_predict(
    model: OvkModel,
    x: np.ndarray,
    max_iters: int = 500,
    grad_tol: float = 1e-8,
) -> np.ndarray:
    """Pre-image of the embedded prediction: the best Gaussian-bump maximizer.

    Starts from the five training targets with the largest embedding weights
    (plus their mean) and runs gradient ascent with Armijo backtracking from
    each, keeping the best final value; the result is clipped to the unit box.
    """
    v = ovk_embed(model, x)
    order = np.argsort(-v, kind="stable")[: min(5, len(v))]
    starts = [model.targets[i] for i in order]
    starts.append(np.mean(model.targets[order], axis=0))

    best_y = None
    best_val = -np.inf
    any_progress = False
    for y0 in starts:
        y = y0.astype(float).copy()
        val, grad = _bump_objective(y, model.targets, v, model.gamma_out)
        for _ in range(max_iters):
            gnorm2 = float(grad @ grad)
            if np.sqrt(gnorm2) <= grad_tol:
                break
            step = 1.0
            improved = False
            while step > 1e-12:
                cand = y + step * grad
                cand_val, cand_grad = _bump_objective(cand, model.targets, v, model.gamma_out)
                if cand_val >= val + 1e-4 * step * gnorm2:
                    y, val, grad = cand, cand_val, cand_grad
                    improved = True
                    any_progress = True
                    break
                step *= 0.5
            if not improved:
                break
        if val > best_val:
            best_val, best_y = val, y
    if not any_progress and best_y is not None:
        log.warning("pre-image search made no line-search progress; returning best start")
    return np.clip(best_y, 0.0, 1.0)
