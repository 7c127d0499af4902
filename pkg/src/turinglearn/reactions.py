"""Reaction kinetics: the activator-inhibitor model and its derivatives.

The model couples a slowly produced activator ``u1`` (autocatalytic, with
saturation) to a fast inhibitor ``u2``:

    f1(u) = a - b*u1 + u1^2 / (u2 * (1 + c*u1^2))
    f2(u) = u1^2 - u2

with positive parameters ``a`` (base production), ``b`` (activator decay),
``c`` (saturation), and diffusion matrix ``s * diag(1, delta)``.  The spatially
homogeneous equilibrium solves ``u2 = u1^2`` and a scalar equation in ``u1``
that is strictly decreasing on the positive axis, so the positive equilibrium
is unique.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "GmParams",
    "ReactionModel",
    "gm_model",
    "gm_reaction",
    "gm_jacobian",
    "gm_equilibrium",
    "jacobian",
]


@dataclass(frozen=True)
class GmParams:
    """Kinetic and diffusion parameters; all five must be finite and > 0."""

    a: float
    b: float
    c: float
    delta: float
    s: float

    def __post_init__(self):
        for name in ("a", "b", "c", "delta", "s"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"parameter {name} must be finite and > 0, got {value!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.delta, self.s], dtype=float)


@dataclass(frozen=True)
class ReactionModel:
    """A reaction-diffusion system in evaluation-ready form.

    Attributes
    ----------
    species_count : int
    reaction : callable
        Maps species values of shape (N,) or (N, m) to same-shaped rates.
    diffusion : ndarray, shape (N,)
        Per-species diffusion coefficients (the diagonal of D).
    reaction_jacobian : callable or None
        Closed-form Jacobian at a single point, shape (N,) -> (N, N).  When
        absent, :func:`jacobian` falls back to central differences.
    """

    species_count: int
    reaction: Callable[[np.ndarray], np.ndarray]
    diffusion: np.ndarray
    reaction_jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None


def gm_reaction(params: GmParams, u: np.ndarray) -> np.ndarray:
    """Evaluate the kinetics at strictly positive species values.

    ``u`` may be a pair of scalars or a pair of fields stacked on axis 0.
    Nonpositive or non-finite concentrations are a domain error: the inhibitor
    appears in a denominator.
    """
    u = np.asarray(u, dtype=float)
    if u.shape[0] != 2:
        raise ValueError(f"expected 2 species on axis 0, got shape {u.shape}")
    if not np.all(u > 0):
        raise ValueError("species values must be strictly positive and finite")
    u1, u2 = u[0], u[1]
    sq = u1 * u1
    return np.stack([
        params.a - params.b * u1 + sq / (u2 * (1.0 + params.c * sq)),
        sq - u2,
    ])


def gm_jacobian(params: GmParams, u: np.ndarray) -> np.ndarray:
    """Closed-form 2x2 Jacobian of the kinetics at a single point."""
    u = np.asarray(u, dtype=float)
    if u.shape != (2,):
        raise ValueError(f"expected a single state of shape (2,), got {u.shape}")
    if not np.all(u > 0):
        raise ValueError("species values must be strictly positive and finite")
    u1, u2 = float(u[0]), float(u[1])
    denom = 1.0 + params.c * u1 * u1
    return np.array([
        [-params.b + 2.0 * u1 / (u2 * denom * denom), -u1 * u1 / (u2 * u2 * denom)],
        [2.0 * u1, -1.0],
    ])


def gm_model(params: GmParams) -> ReactionModel:
    """Package the kinetics, Jacobian, and diffusion diagonal s*(1, delta)."""
    return ReactionModel(
        species_count=2,
        reaction=lambda u: gm_reaction(params, u),
        diffusion=np.array([params.s, params.s * params.delta]),
        reaction_jacobian=lambda u: gm_jacobian(params, u),
    )


def _equilibrium_residual(params: GmParams, u1: float) -> float:
    # With u2 = u1^2 substituted, f1 reduces to a single scalar equation.
    return params.a - params.b * u1 + 1.0 / (1.0 + params.c * u1 * u1)


def gm_equilibrium(params: GmParams) -> tuple[float, float]:
    """Find the positive homogeneous equilibrium (u1*, u2*) with u2* = u1*^2.

    The reduced equation g(u) = a - b*u + 1/(1 + c*u^2) is strictly decreasing
    for u > 0 and changes sign on (0, (1+a)/b + 1], so bisection always
    brackets the unique root; a few Newton steps polish it to round-off.
    """
    a, b, c = params.a, params.b, params.c
    lo, hi = 1e-12, (1.0 + a) / b + 1.0
    g_lo = _equilibrium_residual(params, lo)
    g_hi = _equilibrium_residual(params, hi)
    if g_lo <= 0 or g_hi >= 0:
        raise ArithmeticError("equilibrium bracket failed to straddle a sign change")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _equilibrium_residual(params, mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * hi:
            break
    u1 = 0.5 * (lo + hi)
    for _ in range(8):
        g = _equilibrium_residual(params, u1)
        dg = -b - 2.0 * c * u1 / (1.0 + c * u1 * u1) ** 2
        step = g / dg
        if not np.isfinite(step):
            break
        u1 -= step
        if abs(step) <= 1e-16 * u1:
            break
    if u1 <= 0 or abs(_equilibrium_residual(params, u1)) > 1e-12:
        raise ArithmeticError("equilibrium solve did not reach the required residual")
    return float(u1), float(u1 * u1)


def jacobian(model: ReactionModel, u: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Jacobian of the reaction at state ``u``.

    Uses the model's closed form when available, otherwise symmetric finite
    differences with a relative step.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (model.species_count,):
        raise ValueError(f"expected state of shape ({model.species_count},), got {u.shape}")
    if model.reaction_jacobian is not None:
        return np.asarray(model.reaction_jacobian(u), dtype=float)
    n = model.species_count
    out = np.empty((n, n))
    for j in range(n):
        h = step * max(1.0, abs(u[j]))
        up = u.copy()
        dn = u.copy()
        up[j] += h
        dn[j] -= h
        out[:, j] = (model.reaction(up) - model.reaction(dn)) / (2.0 * h)
    return out
