from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pytest

from robustdtb.dataset import ArrayDataSet


@dataclass
class Synthetic:
    """Data of a known propagator ``cos(tau sqrt(A))`` with explicit snapshots."""

    data: ArrayDataSet
    a: np.ndarray
    b: np.ndarray
    snapshots: np.ndarray  # (2n, N, m), T_k(P) b via the eigendecomposition of A
    propagator: np.ndarray


def synthetic(size: int, m: int, n: int, tau: float = 0.1, seed: int = 0, cfl: float = 0.8) -> Synthetic:
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((size, size)))
    # eigenvalues of A below (2 cfl / tau)^2 keep I - P positive definite
    lam = np.sort(rng.uniform(0.05, 1.0, size)) * (2 * cfl / tau) ** 2
    a = (q * lam) @ q.T
    b = rng.standard_normal((size, m))
    omega = np.sqrt(lam)
    coef = q.T @ b
    k = np.arange(2 * n)
    snaps = np.einsum("ij,kj,jb->kib", q, np.cos(np.outer(k, omega) * tau), coef)
    d = np.einsum("ia,kib->kab", b, snaps)
    d = 0.5 * (d + d.transpose(0, 2, 1))
    prop = (q * np.cos(tau * omega)) @ q.T
    return Synthetic(ArrayDataSet(d, tau), a, b, snaps, prop)


@pytest.fixture
def small_synthetic():
    return synthetic(size=12, m=2, n=6, tau=0.1, seed=3)


def spd(rng, size: int, cond: float = 10.0) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((size, size)))
    lam = np.geomspace(1.0, 1.0 / cond, size)
    return (q * lam) @ q.T
