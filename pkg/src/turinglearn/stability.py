"""Linear stability of the homogeneous equilibrium and the pattern criterion.

A diffusion-driven (finite-wavenumber) instability requires the equilibrium to
be stable under the well-mixed dynamics yet unstable once the perturbation is
modulated in space: for some squared wavenumber q2 the matrix

    J(u*) - q2 * D,      D = diag(diffusion)

acquires an eigenvalue with positive real part.  The largest real part as a
function of q2 is the dispersion curve; its maximizer is the fastest-growing
mode and predicts the emerging pattern's length scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .reactions import ReactionModel, jacobian

__all__ = ["StabilityReport", "dispersion", "turing_check"]

_SCAN_POINTS = 512
_Q2_FLOOR = 1e-4


@dataclass(frozen=True)
class StabilityReport:
    """Outcome of a stability scan.

    Attributes
    ----------
    ode_stable : bool
        All eigenvalues of the reaction Jacobian have negative real part.
    turing : bool
        ode_stable and some finite wavenumber grows while the scan's upper
        end decays again (rules out long- and short-wave artefacts).
    q2_star : float
        Squared wavenumber of the fastest-growing mode; 0.0 when no
        instability was found.
    max_growth : float
        Largest real part of the dispersion curve over the scanned range.
    q2_grid, growth : ndarray
        The scanned curve, kept for reporting and plotting.
    """

    ode_stable: bool
    turing: bool
    q2_star: float
    max_growth: float
    q2_grid: np.ndarray = field(repr=False)
    growth: np.ndarray = field(repr=False)


def _growth_rate(J: np.ndarray, diffusion: np.ndarray, q2) -> np.ndarray:
    """Largest real eigenvalue part of J - q2*D for scalar or 1-D q2."""
    q2_arr = np.atleast_1d(np.asarray(q2, dtype=float))
    mats = J[None, :, :] - q2_arr[:, None, None] * np.diag(diffusion)[None, :, :]
    rates = np.max(np.linalg.eigvals(mats).real, axis=1)
    return rates if np.ndim(q2) else float(rates[0])


def dispersion(model: ReactionModel, u_star: np.ndarray, q2: float) -> float:
    """Largest Re(lambda) of ``J(u_star) - q2 * D`` at one squared wavenumber."""
    if q2 < 0:
        raise ValueError(f"squared wavenumber must be >= 0, got {q2}")
    J = jacobian(model, u_star)
    return _growth_rate(J, model.diffusion, float(q2))


def _golden_max(f, lo: float, hi: float, tol: float = 1e-12) -> tuple[float, float]:
    """Golden-section maximization of a unimodal f on [lo, hi]."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol * max(1.0, abs(hi)):
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = f(x1)
    x = 0.5 * (lo + hi)
    return x, f(x)


def turing_check(model: ReactionModel, u_star: np.ndarray) -> StabilityReport:
    """Classify the equilibrium: ODE-stable, and pattern-forming or not.

    Scans the dispersion curve on a 512-point log grid of squared wavenumbers,
    then sharpens the best grid point by golden-section search between its
    neighbours, so instability bands narrower than the grid spacing are still
    resolved.  The scan's upper end is far beyond any root of the dispersion
    relation, and decay there is part of the verdict.

    Raises
    ------
    ValueError
        If ``u_star`` is not an equilibrium (reaction residual above 1e-8).
    """
    u_star = np.asarray(u_star, dtype=float)
    residual = np.max(np.abs(model.reaction(u_star)))
    if not residual <= 1e-8:
        raise ValueError(f"u_star is not an equilibrium (reaction residual {residual:.3e})")

    J = jacobian(model, u_star)
    ode_stable = bool(np.max(np.linalg.eigvals(J).real) < 0)

    trace = float(np.trace(J))
    det = float(np.linalg.det(J))
    d_min = float(np.min(model.diffusion))
    if d_min <= 0:
        raise ValueError("diffusion coefficients must be positive for a stability scan")
    q2_max = 10.0 * (abs(trace) + abs(det) + 1.0) / d_min

    q2_grid = np.geomspace(_Q2_FLOOR, q2_max, _SCAN_POINTS)
    growth = _growth_rate(J, model.diffusion, q2_grid)

    peak = int(np.argmax(growth))
    lo = q2_grid[max(peak - 1, 0)]
    hi = q2_grid[min(peak + 1, _SCAN_POINTS - 1)]
    q2_best, g_best = _golden_max(lambda q2: _growth_rate(J, model.diffusion, q2), lo, hi)
    if growth[peak] > g_best:
        q2_best, g_best = float(q2_grid[peak]), float(growth[peak])

    turing = bool(ode_stable and g_best > 0.0 and growth[-1] < 0.0)
    return StabilityReport(
        ode_stable=ode_stable,
        turing=turing,
        q2_star=float(q2_best) if turing else 0.0,
        max_growth=float(g_best),
        q2_grid=q2_grid,
        growth=np.asarray(growth),
    )
