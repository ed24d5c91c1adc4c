"""Oracle tests: sampling quality, agreement with the eigenvalue reductions, expm."""

import math

import numpy as np
import pytest

from pellipt import core, oracle


def accretive(rng, d, min_lambda=0.05):
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    H = (A + A.conj().T) / 2
    lam = np.linalg.eigvalsh(H)[0]
    if lam < min_lambda:
        A = A + (min_lambda - lam) * np.eye(d)
    return A


def test_sphere_sample_unit_norm_and_determinism():
    pts = oracle.sphere_sample(6, 5000, seed=42)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)
    again = oracle.sphere_sample(6, 5000, seed=42)
    assert pts is again or np.array_equal(pts, again)
    other = oracle.sphere_sample(6, 5000, seed=7)
    assert not np.array_equal(pts, other)


def test_sphere_min_delta_closed_forms():
    assert oracle.sphere_min_delta(np.eye(2), 2.0, n_samples=20000) == pytest.approx(1.0, abs=1e-9)
    assert oracle.sphere_min_delta(np.eye(3), 4.0, n_samples=100000) == pytest.approx(0.5, abs=1e-6)
    val = oracle.sphere_min_delta(np.array([[1 + 1j]]), 4.0, n_samples=100000)
    assert val == pytest.approx(1 - math.sqrt(2) / 2, abs=1e-6)


def test_sphere_min_delta_upper_bound_and_agreement():
    rng = np.random.default_rng(100)
    for _ in range(25):
        d = int(rng.integers(1, 4))
        A = accretive(rng, d)
        p = float(rng.choice([2.0, 3.0, 4.0, 8.0]))
        exact = core.delta_p_point(A, p)
        search = oracle.sphere_min_delta(A, p, n_samples=100000)
        assert search >= exact - 1e-12
        assert search - exact <= 1e-6


def test_sphere_min_delta_rejects_small_samples():
    with pytest.raises(ValueError):
        oracle.sphere_min_delta(np.eye(2), 2.0, n_samples=100)


def test_sphere_min_ratio_closed_forms():
    assert oracle.sphere_min_ratio(np.eye(2), n_samples=50000) == pytest.approx(1.0, abs=1e-6)
    val = oracle.sphere_min_ratio(np.array([[1 + 1j]]), n_samples=50000)
    assert val == pytest.approx(1 / math.sqrt(2), abs=1e-6)


def test_sphere_min_ratio_orthogonal_invariance():
    rng = np.random.default_rng(101)
    A = accretive(rng, 2, min_lambda=0.3)
    theta = 0.7
    U = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    base = oracle.sphere_min_ratio(A, n_samples=50000)
    conj = oracle.sphere_min_ratio(U.T @ A @ U, n_samples=50000)
    assert conj == pytest.approx(base, abs=1e-6)


def test_sphere_min_ratio_rejects_non_accretive():
    with pytest.raises(core.NonAccretiveError):
        oracle.sphere_min_ratio(np.array([[-1.0 + 0j]]), n_samples=2000)


def test_sphere_min_ratio_agrees_with_mu():
    rng = np.random.default_rng(102)
    for _ in range(10):
        d = int(rng.integers(1, 3))
        A = accretive(rng, d, min_lambda=0.2)
        mu = core.mu_point(A, 1e-9)
        search = oracle.sphere_min_ratio(A, n_samples=100000)
        assert search >= mu - 1e-7
        assert search - mu <= 1e-4


# ---------------------------------------------------------------------------
# dense_expm


def test_expm_zero_matrix_is_identity():
    np.testing.assert_array_equal(oracle.dense_expm(np.zeros((3, 3)), 1.0), np.eye(3))


def test_expm_diagonal():
    E = oracle.dense_expm(np.diag([1.0, 2.0]), 1.0)
    np.testing.assert_allclose(E, np.diag([math.exp(-1), math.exp(-2)]), atol=1e-12)


def test_expm_hermitian_psd_contraction():
    rng = np.random.default_rng(103)
    for _ in range(5):
        B = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        M = B @ B.conj().T
        for t in (0.1, 1.0):
            assert np.linalg.norm(oracle.dense_expm(M, t), 2) <= 1.0 + 1e-12


def test_expm_semigroup_law():
    rng = np.random.default_rng(104)
    for _ in range(5):
        M = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        M *= 10.0 / np.linalg.norm(M, 2)
        s, t = float(rng.uniform(0, 1)), float(rng.uniform(0, 1))
        lhs = oracle.dense_expm(M, s + t)
        rhs = oracle.dense_expm(M, s) @ oracle.dense_expm(M, t)
        assert np.linalg.norm(lhs - rhs, 2) <= 1e-8


def test_expm_dimension_cap():
    with pytest.raises(ValueError):
        oracle.dense_expm(np.zeros((oracle.DENSE_EXPM_MAX_DIM + 1,
                                    oracle.DENSE_EXPM_MAX_DIM + 1)), 1.0)
