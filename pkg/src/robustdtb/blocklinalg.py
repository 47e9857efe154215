"""Dense structured linear algebra on m x m block matrices.

All kernels are pure functions of their inputs.  Block structure is
tracked with :class:`BlockedMatrix`; the structural zeros of
block-tridiagonal and block-bidiagonal results are written as exact
zeros so downstream code can rely on the pattern.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import BreakdownError, ConvergenceError, DeflationError, ShapeError

__all__ = [
    "Structure",
    "BlockedMatrix",
    "SpectralDecomposition",
    "sym_eig_desc",
    "block_cholesky_full",
    "block_cholesky_tridiag",
    "block_lanczos",
    "chebyshev_sequence",
    "block_pattern_mask",
    "as_array",
]

LANCZOS_DEFLATION_TOL = 1e-12


class Structure(enum.Enum):
    FULL = "full"
    SYMMETRIC = "symmetric"
    BLOCK_TRIDIAGONAL = "block-tridiagonal"
    LOWER_BLOCK_BIDIAGONAL = "lower-block-bidiagonal"
    UPPER_BLOCK_TRIANGULAR = "upper-block-triangular"


def block_pattern_mask(num_blocks: int, block_size: int, structure: Structure) -> np.ndarray:
    """Boolean mask of the entries allowed to be nonzero for ``structure``."""
    bi = np.arange(num_blocks * block_size) // block_size
    diff = bi[:, None] - bi[None, :]  # row block minus column block
    if structure is Structure.BLOCK_TRIDIAGONAL:
        return np.abs(diff) <= 1
    if structure is Structure.LOWER_BLOCK_BIDIAGONAL:
        return (diff == 0) | (diff == 1)
    if structure is Structure.UPPER_BLOCK_TRIANGULAR:
        return diff <= 0
    return np.ones((bi.size, bi.size), dtype=bool)


@dataclass(frozen=True)
class BlockedMatrix:
    """Square matrix with an m x m block partition and a structure tag.

    Construction enforces the tag: symmetric matrices are symmetrized and
    entries outside a banded block pattern are set to exactly zero.
    """

    entries: np.ndarray
    block_size: int
    structure: Structure = Structure.FULL

    def __post_init__(self):
        a = np.array(self.entries, dtype=float, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ShapeError(f"expected a square matrix, got shape {a.shape}")
        if self.block_size <= 0 or a.shape[0] % self.block_size:
            raise ShapeError(
                f"dimension {a.shape[0]} is not a multiple of block size {self.block_size}"
            )
        if self.structure in (Structure.SYMMETRIC, Structure.BLOCK_TRIDIAGONAL):
            a = 0.5 * (a + a.T)
        if self.structure not in (Structure.FULL, Structure.SYMMETRIC):
            a[~block_pattern_mask(a.shape[0] // self.block_size, self.block_size, self.structure)] = 0.0
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def num_blocks(self) -> int:
        return self.entries.shape[0] // self.block_size

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def block(self, i: int, j: int) -> np.ndarray:
        m = self.block_size
        return self.entries[i * m:(i + 1) * m, j * m:(j + 1) * m]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    @property
    def T(self) -> np.ndarray:
        return self.entries.T

    def __matmul__(self, other):
        return self.entries @ as_array(other)

    def __rmatmul__(self, other):
        return as_array(other) @ self.entries

    def pattern_violation(self) -> float:
        """Largest absolute entry outside the tagged block pattern."""
        mask = block_pattern_mask(self.num_blocks, self.block_size, self.structure)
        outside = np.abs(self.entries[~mask])
        return float(outside.max()) if outside.size else 0.0


def as_array(a) -> np.ndarray:
    if isinstance(a, BlockedMatrix):
        return a.entries
    return np.asarray(a, dtype=float)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in non-increasing order and matching orthonormal eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)

    def reconstruct(self) -> np.ndarray:
        z = self.eigenvectors
        return (z * self.eigenvalues) @ z.T


def _fix_signs(z: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of each column made positive; argmax picks lowest index on ties
    idx = np.argmax(np.abs(z), axis=0)
    signs = np.sign(z[idx, np.arange(z.shape[1])])
    signs[signs == 0] = 1.0
    return z * signs


def sym_eig_desc(a) -> SpectralDecomposition:
    """Symmetric eigendecomposition with descending eigenvalues.

    Eigenvectors follow a fixed sign convention (largest-magnitude entry
    positive) so repeated runs are bit-identical.
    """
    a = as_array(a)
    if not np.all(np.isfinite(a)):
        raise ConvergenceError("non-finite entries in symmetric eigenproblem", float("inf"))
    a = 0.5 * (a + a.T)
    try:
        # eigh of -A lists A's eigenvalues in descending order while keeping
        # the natural basis order inside degenerate clusters
        w, z = np.linalg.eigh(-a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"symmetric eigensolver failed: {exc}", float("nan")) from exc
    w = -w
    z = _fix_signs(z)
    resid = np.linalg.norm(a @ z - z * w) / max(np.linalg.norm(a), np.finfo(float).tiny)
    if not np.isfinite(resid) or resid > 1e-8:
        raise ConvergenceError("symmetric eigensolver did not converge", resid)
    return SpectralDecomposition(w, z)


def _chol_upper(block: np.ndarray, index: int) -> np.ndarray:
    try:
        return np.linalg.cholesky(0.5 * (block + block.T)).T
    except np.linalg.LinAlgError as exc:
        raise BreakdownError(index, str(exc)) from exc


def block_cholesky_full(mat, m: int) -> BlockedMatrix:
    """Upper block triangular R with ``R.T @ R == M``.

    Diagonal blocks are upper triangular with positive diagonal, i.e. R is
    the scalar Cholesky factor read in m x m blocks.
    """
    a = as_array(mat)
    n = a.shape[0]
    if a.shape != (n, n) or n % m:
        raise ShapeError(f"matrix of shape {a.shape} is not made of {m}x{m} blocks")
    p = n // m
    r = np.zeros_like(a)
    for j in range(p):
        sj = slice(j * m, (j + 1) * m)
        above = r[: j * m, sj]
        pivot = a[sj, sj] - above.T @ above
        rjj = _chol_upper(pivot, j)
        r[sj, sj] = rjj
        if j + 1 < p:
            rest = slice((j + 1) * m, n)
            rhs = a[sj, rest] - above.T @ r[: j * m, rest]
            r[sj, rest] = sla.solve_triangular(rjj, rhs, trans="T", lower=False)
    return BlockedMatrix(r, m, Structure.UPPER_BLOCK_TRIANGULAR)


def block_cholesky_tridiag(mat, m: int) -> BlockedMatrix:
    """Lower block bidiagonal L with ``L @ L.T == T`` for SPD block-tridiagonal T."""
    a = as_array(mat)
    n = a.shape[0]
    if a.shape != (n, n) or n % m:
        raise ShapeError(f"matrix of shape {a.shape} is not made of {m}x{m} blocks")
    p = n // m
    out = np.zeros_like(a)
    prev_sub = None
    for j in range(p):
        sj = slice(j * m, (j + 1) * m)
        pivot = a[sj, sj].copy()
        if prev_sub is not None:
            pivot -= prev_sub @ prev_sub.T
        ljj = _chol_upper(pivot, j).T
        out[sj, sj] = ljj
        if j + 1 < p:
            sn = slice((j + 1) * m, (j + 2) * m)
            # L_{j+1,j} = T_{j+1,j} L_jj^{-T}
            prev_sub = sla.solve_triangular(ljj, a[sn, sj].T, lower=True).T
            out[sn, sj] = prev_sub
    return BlockedMatrix(out, m, Structure.LOWER_BLOCK_BIDIAGONAL)


def _qr_positive(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    q, r = np.linalg.qr(x)
    s = np.sign(np.diag(r))
    s[s == 0] = 1.0
    return q * s, r * s[:, None]


def block_lanczos(a, b0: np.ndarray, tol: float = LANCZOS_DEFLATION_TOL):
    """Block Lanczos tridiagonalization with full reorthogonalization.

    Parameters
    ----------
    a : (d, d) symmetric array
    b0 : (d, m) starting block of full column rank; d must be a multiple of m.

    Returns
    -------
    u : (d, d) orthogonal matrix whose transpose has the Lanczos blocks as
        columns; the first block is the Q factor of ``b0`` (positive R diagonal).
    t : BlockedMatrix, block tridiagonal, ``t == u @ a @ u.T``.
    """
    a = as_array(a)
    a = 0.5 * (a + a.T)
    b0 = np.asarray(b0, dtype=float)
    d, m = b0.shape
    if a.shape != (d, d) or d % m:
        raise ShapeError(f"incompatible shapes {a.shape} and {b0.shape}")
    p = d // m
    scale = max(np.linalg.norm(a, 2), np.finfo(float).tiny)

    q, r0 = _qr_positive(b0)
    if np.min(np.abs(np.diag(r0))) <= tol * np.linalg.norm(b0, 2):
        raise DeflationError(0, float(np.min(np.abs(np.diag(r0)))))
    basis = np.zeros((d, d))
    t = np.zeros((d, d))
    basis[:, :m] = q
    q_prev, b_prev = None, None
    for j in range(p):
        sj = slice(j * m, (j + 1) * m)
        w = a @ q
        alpha = q.T @ w
        alpha = 0.5 * (alpha + alpha.T)
        t[sj, sj] = alpha
        w = w - q @ alpha
        if q_prev is not None:
            w = w - q_prev @ b_prev.T
        if j + 1 == p:
            break
        done = basis[:, : (j + 1) * m]
        for _ in range(2):
            w = w - done @ (done.T @ w)
        q_next, beta = _qr_positive(w)
        pivot = float(np.min(np.abs(np.diag(beta))))
        if pivot < tol * scale:
            raise DeflationError(j + 1, pivot)
        sn = slice((j + 1) * m, (j + 2) * m)
        basis[:, sn] = q_next
        t[sn, sj] = beta
        t[sj, sn] = beta.T
        q_prev, b_prev, q = q, beta, q_next
    return basis.T, BlockedMatrix(t, m, Structure.BLOCK_TRIDIAGONAL)


def chebyshev_sequence(p, b, count: int) -> np.ndarray:
    """Stack of ``T_k(P) @ B`` for k = 0..count-1, shape (count, *B.shape)."""
    p = as_array(p)
    b = np.asarray(b, dtype=float)
    out = np.empty((count,) + b.shape)
    if count == 0:
        return out
    out[0] = b
    if count > 1:
        out[1] = p @ b
    for k in range(1, count - 1):
        out[k + 1] = 2.0 * (p @ out[k]) - out[k - 1]
    return out
