import numpy as np
import pytest

from landingopt import linalg
from landingopt.exceptions import NotPositiveDefiniteError, RankDeficientError


def test_svd_identity():
    factors = linalg.svd(np.eye(2))
    assert np.allclose(factors.sigma, [1.0, 1.0])
    assert np.allclose(np.abs(factors.u), np.eye(2))
    assert np.allclose(np.abs(factors.v), np.eye(2))


def test_svd_diagonal():
    factors = linalg.svd(np.diag([3.0, 0.5]))
    assert np.allclose(factors.sigma, [3.0, 0.5])


def test_svd_reconstruction_residual():
    rng = np.random.Generator(np.random.PCG64(7))
    x = rng.standard_normal((5, 3))
    factors = linalg.svd(x)
    resid = np.linalg.norm(x - factors.reconstruct()) / np.linalg.norm(x)
    assert resid <= 1e-12


def test_svd_rank_deficient_raises():
    x = np.ones((4, 2))  # duplicate columns
    with pytest.raises(RankDeficientError):
        linalg.svd(x)


def test_svd_residual_suite_many_seeds():
    for seed in range(100):
        rng = np.random.Generator(np.random.PCG64(seed))
        x = rng.standard_normal((8, 4))
        factors = linalg.svd(x)
        resid = np.linalg.norm(x - factors.reconstruct()) / np.linalg.norm(x)
        assert resid <= 1e-12
        assert np.all(np.diff(factors.sigma) <= 0)


def test_solve_spd_identity():
    b = np.array([4.0, -1.0, 2.0])
    assert np.allclose(linalg.solve_spd(np.eye(3), b), b)


def test_solve_spd_diagonal():
    out = linalg.solve_spd(np.diag([2.0, 4.0]), np.array([2.0, 4.0]))
    assert np.allclose(out, [1.0, 1.0])


def test_solve_spd_residual():
    rng = np.random.Generator(np.random.PCG64(3))
    a = rng.standard_normal((8, 8))
    a = a @ a.T + 0.5 * np.eye(8)
    b = rng.standard_normal(8)
    x = linalg.solve_spd(a, b)
    assert np.linalg.norm(a @ x - b) / np.linalg.norm(b) <= 1e-10


def test_solve_spd_residual_suite_many_seeds():
    for seed in range(100):
        rng = np.random.Generator(np.random.PCG64(seed))
        a = rng.standard_normal((6, 6))
        a = a @ a.T + 0.1 * np.eye(6)
        b = rng.standard_normal((6, 2))
        x = linalg.solve_spd(a, b)
        assert np.linalg.norm(a @ x - b) / np.linalg.norm(b) <= 1e-10


def test_solve_spd_rejects_indefinite():
    with pytest.raises(NotPositiveDefiniteError):
        linalg.solve_spd(np.diag([1.0, -2.0]), np.array([1.0, 1.0]))


def test_solve_spd_rejects_asymmetric():
    a = np.array([[2.0, 1.0], [0.0, 2.0]])
    with pytest.raises(NotPositiveDefiniteError):
        linalg.solve_spd(a, np.array([1.0, 1.0]))


def _sylvester_residual(x, t, s):
    xtx = x.T @ x
    return np.linalg.norm(0.5 * (xtx @ s + s @ xtx) - t) / max(1.0, np.linalg.norm(t))


def test_sylvester_orthonormal_columns_identity_case():
    # X^T X = I forces (S + S)/2 = T
    q, _ = np.linalg.qr(np.random.Generator(np.random.PCG64(0)).standard_normal((5, 3)))
    t = np.array([[1.0, 0.2, 0.0], [0.2, -1.0, 0.3], [0.0, 0.3, 2.0]])
    s = linalg.sylvester_sym(q, t)
    assert np.allclose(s, t, atol=1e-12)


def test_sylvester_hand_example():
    # X^T X = diag(1, 4), T all ones: brute force gives [[1, .4], [.4, .25]]
    x = np.diag([1.0, 2.0])
    t = np.ones((2, 2))
    s = linalg.sylvester_sym(x, t)
    assert np.allclose(s, [[1.0, 0.4], [0.4, 0.25]], atol=1e-12)


def _vectorized_sylvester(x, t):
    # independent oracle: solve the p^2-dimensional linear system directly
    xtx = x.T @ x
    p = xtx.shape[0]
    op = 0.5 * (np.kron(np.eye(p), xtx) + np.kron(xtx, np.eye(p)))
    return np.linalg.solve(op, t.reshape(-1)).reshape(p, p)


def test_sylvester_random_residual_and_symmetry():
    rng = np.random.Generator(np.random.PCG64(11))
    x = rng.standard_normal((6, 3))
    t = rng.standard_normal((3, 3))
    t = 0.5 * (t + t.T)
    s = linalg.sylvester_sym(x, t)
    assert _sylvester_residual(x, t, s) <= 1e-10
    assert np.linalg.norm(s - s.T) <= 1e-12 * max(1.0, np.linalg.norm(s))


def test_sylvester_matches_vectorized_solve():
    for seed in range(30):
        rng = np.random.Generator(np.random.PCG64(seed))
        p = int(rng.integers(1, 9))
        n = p + int(rng.integers(1, 6))
        x = rng.standard_normal((n, p))
        t = rng.standard_normal((p, p))
        t = 0.5 * (t + t.T)
        s = linalg.sylvester_sym(x, t)
        s_ref = _vectorized_sylvester(x, t)
        dev = np.linalg.norm(s - s_ref) / max(1.0, np.linalg.norm(s_ref))
        assert dev <= 1e-9


def test_sylvester_residual_suite_many_seeds():
    for seed in range(100):
        rng = np.random.Generator(np.random.PCG64(seed))
        x = rng.standard_normal((7, 4))
        t = rng.standard_normal((4, 4))
        t = 0.5 * (t + t.T)
        s = linalg.sylvester_sym(x, t)
        assert _sylvester_residual(x, t, s) <= 1e-10
        assert np.linalg.norm(s - s.T) <= 1e-12 * max(1.0, np.linalg.norm(s))


def test_sylvester_rank_deficient_raises():
    x = np.zeros((4, 2))
    x[:, 0] = 1.0
    with pytest.raises(RankDeficientError):
        linalg.sylvester_sym(x, np.eye(2))
