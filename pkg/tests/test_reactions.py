"""Kinetics, equilibrium, and Jacobians."""

import numpy as np
import pytest
from scipy.optimize import brentq

from turinglearn.reactions import (
    GmParams,
    ReactionModel,
    gm_equilibrium,
    gm_jacobian,
    gm_model,
    gm_reaction,
    jacobian,
)


def test_hand_computed_rates():
    # c = 0 removes saturation: f1 = a - b*u1 + u1^2/u2
    p = GmParams(a=1.0, b=2.0, c=1e-300, delta=1.0, s=1.0)
    rates = gm_reaction(p, np.array([1.0, 1.0]))
    np.testing.assert_allclose(rates, [0.0, 0.0], atol=1e-12)

    p = GmParams(a=0.1, b=0.3, c=0.5, delta=1.0, s=1.0)
    rates = gm_reaction(p, np.array([2.0, 3.0]))
    assert rates[0] == pytest.approx(0.1 - 0.6 + 4.0 / (3.0 * 3.0))
    assert rates[1] == pytest.approx(1.0)


def test_vectorized_rates_match_pointwise():
    p = GmParams(a=0.02, b=1.0, c=0.5, delta=100.0, s=0.25)
    rng = np.random.default_rng(1)
    u = rng.uniform(0.1, 2.0, size=(2, 50))
    batch = gm_reaction(p, u)
    assert batch.shape == (2, 50)
    for k in range(50):
        np.testing.assert_allclose(batch[:, k], gm_reaction(p, u[:, k]))


def test_domain_errors():
    p = GmParams(a=0.1, b=1.0, c=1.0, delta=10.0, s=1.0)
    with pytest.raises(ValueError):
        gm_reaction(p, np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        gm_reaction(p, np.array([-1.0, 1.0]))
    with pytest.raises(ValueError):
        gm_reaction(p, np.array([1.0, np.nan]))
    with pytest.raises(ValueError):
        GmParams(a=0.0, b=1.0, c=1.0, delta=10.0, s=1.0)
    with pytest.raises(ValueError):
        GmParams(a=0.1, b=1.0, c=1.0, delta=-2.0, s=1.0)


def test_equilibrium_properties():
    rng = np.random.default_rng(5)
    for _ in range(200):
        p = GmParams(
            a=rng.uniform(0.01, 0.7),
            b=rng.uniform(0.4, 2.0),
            c=rng.uniform(0.02, 7.0),
            delta=rng.uniform(20.0, 200.0),
            s=rng.uniform(0.1, 1.0),
        )
        u1, u2 = gm_equilibrium(p)
        assert u1 > 0
        assert u2 == pytest.approx(u1 * u1, rel=1e-14)
        rates = gm_reaction(p, np.array([u1, u2]))
        assert np.max(np.abs(rates)) <= 1e-12


def test_equilibrium_against_reference_root_finder():
    rng = np.random.default_rng(6)
    for _ in range(50):
        p = GmParams(
            a=rng.uniform(0.01, 0.7),
            b=rng.uniform(0.4, 2.0),
            c=rng.uniform(0.02, 7.0),
            delta=50.0,
            s=0.5,
        )
        g = lambda u: p.a - p.b * u + 1.0 / (1.0 + p.c * u * u)
        ref = brentq(g, 1e-12, (1.0 + p.a) / p.b + 1.0, xtol=1e-15, rtol=1e-15)
        u1, _ = gm_equilibrium(p)
        assert u1 == pytest.approx(ref, rel=1e-10)


def test_closed_form_jacobian_matches_finite_differences():
    rng = np.random.default_rng(2)
    for _ in range(100):
        p = GmParams(
            a=rng.uniform(0.01, 0.7),
            b=rng.uniform(0.4, 2.0),
            c=rng.uniform(0.02, 7.0),
            delta=rng.uniform(20.0, 200.0),
            s=rng.uniform(0.1, 1.0),
        )
        u = rng.uniform(0.2, 3.0, size=2)
        closed = gm_jacobian(p, u)
        bare = ReactionModel(
            species_count=2,
            reaction=lambda v: gm_reaction(p, v),
            diffusion=np.array([p.s, p.s * p.delta]),
        )
        numeric = jacobian(bare, u)
        np.testing.assert_allclose(closed, numeric, rtol=1e-5, atol=1e-8)


def test_model_diffusion_diagonal():
    p = GmParams(a=0.02, b=1.0, c=1.2, delta=50.0, s=0.5)
    model = gm_model(p)
    np.testing.assert_allclose(model.diffusion, [0.5, 25.0])
    u = np.array(gm_equilibrium(p))
    # the packaged jacobian is the closed form
    np.testing.assert_allclose(jacobian(model, u), gm_jacobian(p, u))
