from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustdtb.blocklinalg import (
    BlockedMatrix,
    Structure,
    block_cholesky_full,
    block_cholesky_tridiag,
    block_lanczos,
    chebyshev_sequence,
    sym_eig_desc,
)
from robustdtb.errors import BreakdownError, DeflationError, ShapeError

from conftest import spd


def jacobi_eigenvalues(a, sweeps=50):
    """Cyclic Jacobi rotations; slow but independent of LAPACK."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    for _ in range(sweeps):
        off = np.sqrt(np.sum(a**2) - np.sum(np.diag(a) ** 2))
        if off < 1e-14 * np.linalg.norm(a):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * a[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta**2 + 1)) if theta != 0 else 1.0
                c = 1 / np.sqrt(t**2 + 1)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q], rot[q, p] = s, -s
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))[::-1]


def scalar_lanczos(a, v, steps):
    """Textbook three-term Lanczos (no reorthogonalization) for small well-conditioned cases."""
    alphas, betas = [], []
    q_prev = np.zeros_like(v)
    q = v / np.linalg.norm(v)
    beta = 0.0
    for j in range(steps):
        w = a @ q - beta * q_prev
        alpha = q @ w
        w = w - alpha * q
        alphas.append(alpha)
        if j + 1 < steps:
            beta = np.linalg.norm(w)
            betas.append(beta)
            q_prev, q = q, w / beta
    return np.array(alphas), np.array(betas)


def test_sym_eig_matches_jacobi_oracle():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((7, 7))
    a = a + a.T
    dec = sym_eig_desc(a)
    np.testing.assert_allclose(dec.eigenvalues, jacobi_eigenvalues(a), atol=1e-12)
    assert np.all(np.diff(dec.eigenvalues) <= 0)
    np.testing.assert_allclose(dec.reconstruct(), a, atol=1e-12)


def test_sym_eig_is_deterministic_with_sign_convention():
    rng = np.random.default_rng(1)
    a = spd(rng, 6)
    z1 = sym_eig_desc(a).eigenvectors
    z2 = sym_eig_desc(a.copy()).eigenvectors
    assert np.array_equal(z1, z2)
    idx = np.argmax(np.abs(z1), axis=0)
    assert np.all(z1[idx, np.arange(6)] > 0)


def test_cholesky_full_2x2_blocks_by_hand():
    # M = R^T R with R known: upper triangular, positive diagonal
    r = np.array([[2.0, 1.0, 0.5, 0.0], [0, 1.0, 0.3, 0.2], [0, 0, 1.5, -0.4], [0, 0, 0, 0.7]])
    got = block_cholesky_full(r.T @ r, 2)
    np.testing.assert_allclose(got.entries, r, atol=1e-14)
    assert got.structure is Structure.UPPER_BLOCK_TRIANGULAR


def test_cholesky_full_indefinite_reports_block():
    a = np.diag([1.0, 1.0, 1.0, -1.0])
    with pytest.raises(BreakdownError) as info:
        block_cholesky_full(a, 2)
    assert info.value.block_index == 1


def test_cholesky_full_rejects_bad_blocking():
    with pytest.raises(ShapeError):
        block_cholesky_full(np.eye(5), 2)


def test_cholesky_tridiag_reconstructs_and_is_bidiagonal():
    rng = np.random.default_rng(2)
    m, p = 2, 4
    l = np.zeros((m * p, m * p))
    for j in range(p):
        blk = np.tril(rng.standard_normal((m, m)))
        blk[np.diag_indices(m)] = np.abs(blk[np.diag_indices(m)]) + 1.0
        l[j * m:(j + 1) * m, j * m:(j + 1) * m] = blk
        if j + 1 < p:
            l[(j + 1) * m:(j + 2) * m, j * m:(j + 1) * m] = rng.standard_normal((m, m))
    t = l @ l.T
    got = block_cholesky_tridiag(BlockedMatrix(t, m, Structure.BLOCK_TRIDIAGONAL), m)
    np.testing.assert_allclose(got.entries, l, atol=1e-12)
    assert got.pattern_violation() == 0.0


def test_cholesky_tridiag_breakdown_index():
    t = np.diag([2.0, 2.0, 2.0, 2.0, -1.0, 1.0])
    with pytest.raises(BreakdownError) as info:
        block_cholesky_tridiag(t, 2)
    assert info.value.block_index == 2


def test_block_lanczos_m1_matches_scalar_oracle():
    rng = np.random.default_rng(4)
    a = spd(rng, 6, cond=5.0)
    v = rng.standard_normal((6, 1))
    _, t = block_lanczos(a, v)
    alphas, betas = scalar_lanczos(a, v[:, 0], 6)
    np.testing.assert_allclose(np.diag(t.entries), alphas, atol=1e-10)
    np.testing.assert_allclose(np.diag(t.entries, -1), betas, atol=1e-10)


def test_block_lanczos_structure_and_first_block():
    rng = np.random.default_rng(5)
    a = spd(rng, 12)
    b0 = rng.standard_normal((12, 3))
    u, t = block_lanczos(a, b0)
    np.testing.assert_allclose(u @ u.T, np.eye(12), atol=1e-12)
    full = u @ a @ u.T
    mask = np.abs(np.arange(12)[:, None] // 3 - np.arange(12)[None, :] // 3) > 1
    assert np.abs(full[mask]).max() < 1e-10
    np.testing.assert_allclose(full, t.entries, atol=1e-10)
    # first block spans b0 with a positive triangular coefficient
    r = u[:3] @ b0
    assert np.allclose(np.tril(r, -1), 0, atol=1e-12) and np.all(np.diag(r) > 0)


def test_block_lanczos_deflation():
    a = np.diag(np.arange(1.0, 7.0))
    b0 = np.zeros((6, 2))
    b0[0, 0] = b0[1, 1] = 1.0  # invariant subspace: Krylov space stops growing
    with pytest.raises(DeflationError) as info:
        block_lanczos(a, b0)
    assert info.value.step == 1


def test_chebyshev_scalar_values():
    x = np.array([[0.3]])
    seq = chebyshev_sequence(x, np.ones((1, 1)), 8)[:, 0, 0]
    np.testing.assert_allclose(seq, np.cos(np.arange(8) * np.arccos(0.3)), atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(
    x=st.floats(-1, 1),
    i=st.integers(0, 12),
    j=st.integers(0, 12),
)
def test_chebyshev_product_identity(x, i, j):
    t = chebyshev_sequence(np.array([[x]]), np.ones((1, 1)), 25)[:, 0, 0]
    assert abs(t[i] * t[j] - 0.5 * (t[i + j] + t[abs(i - j)])) < 1e-11


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), m=st.integers(1, 3), p=st.integers(1, 4))
def test_cholesky_full_property(seed, m, p):
    a = spd(np.random.default_rng(seed), m * p, cond=100.0)
    r = block_cholesky_full(a, m)
    np.testing.assert_allclose(r.T @ r.entries, a, atol=1e-12)
    assert r.pattern_violation() == 0.0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), m=st.integers(1, 3), p=st.integers(1, 5))
def test_lanczos_property(seed, m, p):
    rng = np.random.default_rng(seed)
    a = spd(rng, m * p, cond=20.0)
    b0 = rng.standard_normal((m * p, m))
    u, t = block_lanczos(a, b0)
    assert np.abs(u @ u.T - np.eye(m * p)).max() < 1e-8
    np.testing.assert_allclose(np.linalg.eigvalsh(t.entries), np.linalg.eigvalsh(a), atol=1e-10)
