import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from toda_toric.linalg import (
    build_w_basis,
    poly_eval_deriv,
    project_to_w,
    sym_eigenvalues,
    symplectic_matrix,
)


def test_eigen_small_examples():
    assert np.allclose(sym_eigenvalues([[0, 1], [1, 0]]), [-1, 1], atol=1e-14)
    assert np.allclose(sym_eigenvalues(np.diag([3.0, 1.0, 2.0])), [1, 2, 3])
    circ = np.ones((3, 3)) - np.eye(3)
    assert np.allclose(sym_eigenvalues(circ), [-1, -1, 2], atol=1e-13)


def test_eigen_rejects_bad_input():
    with pytest.raises(ValueError):
        sym_eigenvalues([[0, 1], [1.0000001, 0]])
    with pytest.raises(ValueError):
        sym_eigenvalues(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        sym_eigenvalues(np.eye(65))


def _random_sym(rng, m):
    A = rng.normal(size=(m, m))
    return np.triu(A) + np.triu(A, 1).T


def test_eigenpairs_by_inverse_iteration():
    rng = np.random.default_rng(0)
    for _ in range(500):
        m = int(rng.integers(1, 13))
        M = _random_sym(rng, m)
        norm = np.linalg.norm(M)
        lams = sym_eigenvalues(M)
        for lam in lams:
            shift = lam + 1e-10 * max(norm, 1.0)
            v = rng.normal(size=m)
            for _ in range(3):
                v = np.linalg.solve(M - shift * np.eye(m), v)
                v /= np.linalg.norm(v)
            assert np.linalg.norm(M @ v - lam * v) <= 1e-10 * max(norm, 1.0)


def test_eigen_count_matches_charpoly_sign_changes():
    # number of eigenvalues below x = number of negative pivots of M - xI (Sylvester inertia)
    rng = np.random.default_rng(1)
    for _ in range(50):
        m = int(rng.integers(2, 9))
        M = _random_sym(rng, m)
        lams = sym_eigenvalues(M)
        for x in np.linspace(lams[0] - 1, lams[-1] + 1, 40):
            if np.min(np.abs(lams - x)) < 1e-8:
                continue
            below = np.sum(np.linalg.eigvalsh(M - x * np.eye(m)) < 0)
            assert below == np.sum(lams < x)


def test_eigen_backward_stable_against_numpy():
    rng = np.random.default_rng(2)
    for m in (3, 10, 30, 64):
        M = _random_sym(rng, m)
        assert np.abs(sym_eigenvalues(M) - np.linalg.eigvalsh(M)).max() <= 1e-12 * np.linalg.norm(M)


def test_w_basis():
    ch = build_w_basis(3)
    assert np.allclose(ch.basis[0], np.array([1, -1, 0]) / math.sqrt(2), atol=1e-15)
    for n in (3, 4, 7):
        B = build_w_basis(n).basis
        assert np.abs(B @ B.T - np.eye(n - 1)).max() < 1e-12
        assert np.abs(B.sum(axis=1)).max() < 1e-12
    with pytest.raises(ValueError):
        build_w_basis(2)


def test_chart_preserves_triangle_side():
    ch = build_w_basis(3)
    V = ch.to_chart(np.array([[1, 0, -1], [-1, 1, 0], [0, -1, 1]], dtype=float))
    sides = [np.linalg.norm(V[i] - V[(i + 1) % 3]) for i in range(3)]
    assert np.allclose(sides, math.sqrt(6), atol=1e-12)


@pytest.mark.parametrize("n", [3, 4, 6])
def test_chart_symplectic(n):
    E = build_w_basis(n).embedding()
    Omega = symplectic_matrix(n)
    J = symplectic_matrix(n - 1)
    assert np.abs(E.T @ Omega @ E - J).max() < 1e-12


def test_chart_roundtrip():
    rng = np.random.default_rng(3)
    ch = build_w_basis(5)
    q, p = project_to_w(rng.normal(size=5)), project_to_w(rng.normal(size=5))
    q2, p2 = ch.chart_to_phase(ch.phase_to_chart(q, p))
    assert np.allclose(q, q2, atol=1e-14) and np.allclose(p, p2, atol=1e-14)


def test_project_examples():
    assert np.allclose(project_to_w([1, 1, 1]), 0)
    assert np.allclose(project_to_w([2, 0, 1]), [1, -1, 0])


@given(arrays(np.float64, st.integers(3, 8), elements=st.floats(-1e6, 1e6)))
def test_project_idempotent(v):
    w = project_to_w(v)
    assert abs(w.sum()) <= 1e-9 * max(1.0, np.abs(v).max())
    assert np.allclose(project_to_w(w), w, atol=1e-9 * max(1.0, np.abs(v).max()))


def test_project_linear():
    rng = np.random.default_rng(4)
    for _ in range(1000):
        u, v = rng.normal(size=(2, 5))
        a = rng.normal()
        assert np.allclose(project_to_w(a * u + v), a * project_to_w(u) + project_to_w(v), atol=1e-12)


def test_horner_examples():
    assert poly_eval_deriv([1, 0, -1, 0], 2.0) == (6.0, 11.0)
    assert poly_eval_deriv([4.5], 3.3) == (4.5, 0.0)


@settings(max_examples=100)
@given(st.lists(st.floats(-10, 10), min_size=4, max_size=4), st.floats(-3, 3))
def test_horner_against_naive(coeffs, lam):
    val, der = poly_eval_deriv(coeffs, lam)
    naive = sum(c * lam ** (3 - k) for k, c in enumerate(coeffs))
    naive_d = sum(c * (3 - k) * lam ** (2 - k) for k, c in enumerate(coeffs[:3]))
    scale = 1 + sum(abs(c) * 3**3 for c in coeffs)
    assert abs(val - naive) <= 1e-12 * scale
    assert abs(der - naive_d) <= 1e-12 * scale
