"""Operator-valued kernel regression against dense Kronecker solves."""

import numpy as np
import pytest

from turinglearn import KernelSpec, TrainingError, ovk_predict, ovk_train
from turinglearn.kernels import gram_gaussian, gram_matrix, kernel_vector
from turinglearn.ovk import OvkModel, global_gmres, ovk_embed


def random_problem(rng, n, bins=6, d=2):
    X = rng.uniform(0.0, 1.0, (n, bins))
    X /= X.sum(axis=1, keepdims=True)
    Y = rng.uniform(0.0, 1.0, (n, d))
    return X, Y


def dense_coupling(K, T, lam):
    """Solve (K kron T + n lam I) vec(U) = vec(I) with a direct method."""
    n = K.shape[0]
    A = np.kron(K, T) + n * lam * np.eye(n * n)
    b = np.eye(n).flatten(order="F")
    return np.linalg.solve(A, b).reshape((n, n), order="F")


@pytest.mark.parametrize("n", [4, 10, 25])
def test_matrix_gmres_matches_dense_kronecker_solve(n):
    rng = np.random.default_rng(n)
    X, Y = random_problem(rng, n)
    spec = KernelSpec("chi2exp", 1.0)
    model = ovk_train(X, Y, spec, gamma_out=1.0, lam=0.01, eps_reg=1e-4)
    K = gram_matrix(spec, X)
    reference = dense_coupling(K, model.output_map, model.lam)
    assert np.max(np.abs(model.coupling - reference)) <= 1e-6
    assert model.solver_residual <= 1e-8


def test_gmres_agrees_with_dense_solve_on_generic_systems():
    rng = np.random.default_rng(17)
    n = 7
    A = rng.normal(size=(n, n))
    B = rng.normal(size=(n, n))
    shift = 5.0 + np.linalg.norm(A) * np.linalg.norm(B)
    rhs = rng.normal(size=(n, n))
    X, residual = global_gmres(lambda V: A @ V @ B + shift * V, rhs)
    dense = np.linalg.solve(
        np.kron(B.T, A) + shift * np.eye(n * n), rhs.flatten(order="F")
    ).reshape((n, n), order="F")
    assert np.allclose(X, dense, atol=1e-7)
    assert residual <= 1e-8


def test_gmres_edge_cases():
    zeros = np.zeros((3, 3))
    X, residual = global_gmres(lambda V: V, zeros)
    assert np.array_equal(X, zeros)
    assert residual == 0.0
    with pytest.raises(TrainingError):
        global_gmres(lambda V: 0.0 * V, np.eye(3), restart=3, max_restarts=2)


def test_strong_regularization_shrinks_the_coupling():
    rng = np.random.default_rng(5)
    X, Y = random_problem(rng, 10)
    lam = 1e8
    model = ovk_train(X, Y, KernelSpec("chi2exp", 1.0), gamma_out=1.0, lam=lam)
    expected = np.eye(10) / (10 * lam)
    assert np.linalg.norm(model.coupling - expected) <= 1e-5 * np.linalg.norm(expected)


def test_large_eps_reg_reduces_to_the_output_gram():
    rng = np.random.default_rng(6)
    X, Y = random_problem(rng, 8)
    model = ovk_train(
        X, Y, KernelSpec("chi2exp", 1.0), gamma_out=0.7, lam=0.1, eps_reg=1e8
    )
    L = gram_gaussian(Y, 0.7)
    assert np.max(np.abs(model.output_map - L)) <= 1e-6


def test_embedding_is_the_documented_contraction():
    rng = np.random.default_rng(22)
    X, Y = random_problem(rng, 9)
    spec = KernelSpec("wasserstein", 2.0)
    model = ovk_train(X, Y, spec, gamma_out=1.0, lam=0.05)
    x = X[3]
    k_x = kernel_vector(spec, X, x)
    assert np.allclose(ovk_embed(model, x), model.output_map @ model.coupling @ k_x)


def test_one_hot_embedding_decodes_to_its_training_target():
    # with coupling chosen so the embedding of X[j] is exactly e_j, the bump
    # objective peaks at the j-th training target and decoding must return it
    rng = np.random.default_rng(8)
    X, Y = random_problem(rng, 12, d=3)
    spec = KernelSpec("chi2exp", 1.0)
    for j in (0, 5, 11):
        k_j = kernel_vector(spec, X, X[j])
        e_j = np.zeros(12)
        e_j[j] = 1.0
        coupling = np.outer(e_j, k_j) / float(k_j @ k_j)
        model = OvkModel(
            input_kernel=spec, gamma_out=0.5, lam=0.1, eps_reg=1e-4,
            inputs=X, targets=Y, coupling=coupling,
            output_map=np.eye(12), solver_residual=0.0,
        )
        assert np.allclose(ovk_embed(model, X[j]), e_j, atol=1e-12)
        decoded = ovk_predict(model, X[j])
        assert np.max(np.abs(decoded - Y[j])) <= 1e-3


def test_predictions_stay_in_the_unit_box():
    rng = np.random.default_rng(40)
    X, Y = random_problem(rng, 10)
    model = ovk_train(X, Y, KernelSpec("chi2exp", 0.5), gamma_out=1.0, lam=0.01)
    for row in X:
        pred = ovk_predict(model, row)
        assert pred.shape == (2,)
        assert np.all(pred >= 0.0) and np.all(pred <= 1.0)


def test_validation():
    rng = np.random.default_rng(1)
    X, Y = random_problem(rng, 5)
    spec = KernelSpec("chi2exp", 1.0)
    with pytest.raises(ValueError):
        ovk_train(X, Y[:4], spec, gamma_out=1.0, lam=0.1)
    with pytest.raises(ValueError):
        ovk_train(X, Y, spec, gamma_out=1.0, lam=0.0)
    with pytest.raises(ValueError):
        ovk_train(X, Y, spec, gamma_out=-1.0, lam=0.1)
    with pytest.raises(ValueError):
        ovk_train(X, Y, spec, gamma_out=1.0, lam=0.1, gram=np.eye(3))
