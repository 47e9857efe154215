"""Data-driven reduced order models.

The Gramian ``M`` and stiffness ``S`` of the (unknown) snapshots are
assembled from the data alone through Chebyshev product identities.  The
exact ROM factors ``M = R^T R``; the regularized ROM first projects on the
leading eigenvectors of ``M`` and then restores block-tridiagonal structure
with block Lanczos.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .blocklinalg import (
    BlockedMatrix,
    Structure,
    block_cholesky_full,
    block_cholesky_tridiag,
    block_lanczos,
    chebyshev_sequence,
    sym_eig_desc,
)
from .dataset import ArrayDataSet
from .errors import BreakdownError, ConvergenceError, IndefiniteGramian, ShapeError, TruncationError

RELATIVE_FLOOR = 1e-12
NOISE_EDGE_FACTOR = 1.0


def _check_length(data: ArrayDataSet, n: int, needed: int) -> None:
    if n <= 0:
        raise ShapeError("n must be positive")
    if data.twice_n < needed:
        raise ShapeError(f"need at least {needed} data matrices for n={n}, got {data.twice_n}")


def assemble_mass(data: ArrayDataSet, n: int | None = None) -> BlockedMatrix:
    """Gramian blocks ``M_ij = (D_{i+j-2} + D_{|i-j|}) / 2`` (1-based i, j)."""
    n = data.n if n is None else n
    _check_length(data, n, 2 * n - 1)
    m, d = data.m, data.D
    out = np.empty((n * m, n * m))
    for i in range(n):
        for j in range(n):
            out[i * m:(i + 1) * m, j * m:(j + 1) * m] = 0.5 * (d[i + j] + d[abs(i - j)])
    return BlockedMatrix(out, m, Structure.SYMMETRIC)


def assemble_stiffness(data: ArrayDataSet, n: int | None = None) -> BlockedMatrix:
    """Stiffness blocks ``S_ij = (D_{i+j-1} + D_{|j-i+1|} + D_{|j-i-1|} + D_{|j+i-3|}) / 4``."""
    n = data.n if n is None else n
    _check_length(data, n, 2 * n)
    m, d = data.m, data.D
    out = np.empty((n * m, n * m))
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            blk = d[i + j - 1] + d[abs(j - i + 1)] + d[abs(j - i - 1)] + d[abs(j + i - 3)]
            out[(i - 1) * m:i * m, (j - 1) * m:j * m] = 0.25 * blk
    return BlockedMatrix(out, m, Structure.SYMMETRIC)


@dataclass(frozen=True)
class GramPair:
    M: BlockedMatrix
    S: BlockedMatrix

    @property
    def m(self) -> int:
        return self.M.block_size

    @property
    def n(self) -> int:
        return self.M.num_blocks


def assemble_gram_pair(data: ArrayDataSet, n: int | None = None) -> GramPair:
    return GramPair(assemble_mass(data, n), assemble_stiffness(data, n))


@dataclass(frozen=True)
class TruncationSpec:
    """Either a fixed rank ``z`` (in blocks) or an eigenvalue threshold ``theta``.

    ``theta=None`` in threshold mode selects the default data-driven rule
    (:func:`default_threshold`).
    """

    mode: str = "threshold"
    z: Optional[int] = None
    theta: Optional[float] = None

    def __post_init__(self):
        if self.mode not in ("rank", "threshold"):
            raise TruncationError(f"unknown truncation mode {self.mode!r}")
        if self.mode == "rank" and (self.z is None or self.z <= 0):
            raise TruncationError("rank mode needs a positive z")
        if self.theta is not None and (self.theta < 0 or not math.isfinite(self.theta)):
            raise TruncationError("theta must be finite and nonnegative")

    @classmethod
    def rank(cls, z: int) -> "TruncationSpec":
        return cls("rank", z=int(z))

    @classmethod
    def threshold(cls, theta: float | None = None) -> "TruncationSpec":
        return cls("threshold", theta=theta)


def default_threshold(eigenvalues: np.ndarray) -> float:
    """Noise-level threshold on the Gramian eigenvalues.

    The Gramian of noiseless data is positive semidefinite, so the most
    negative eigenvalue measures the half-width of the noise spectrum,
    which is symmetric about zero.  A relative floor handles clean data.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    top = float(lam[0])
    noise_edge = max(0.0, -float(lam[-1]))
    return max(RELATIVE_FLOOR * top, NOISE_EDGE_FACTOR * noise_edge)


@dataclass(frozen=True)
class Truncation:
    """Projection data of the leading ``z m`` eigenpairs of the Gramian."""

    Z: np.ndarray = field(repr=False)
    sfrak2: np.ndarray
    scal: np.ndarray = field(repr=False)
    e1_tilde: np.ndarray = field(repr=False)
    z: int
    theta: float
    eigenvalues: np.ndarray = field(repr=False)

    @property
    def tail_mass(self) -> float:
        """Sum of the discarded eigenvalues (positive part)."""
        tail = self.eigenvalues[self.Z.shape[1]:]
        return float(np.clip(tail, 0.0, None).sum())


def select_rank(eigenvalues: np.ndarray, m: int, spec: TruncationSpec) -> tuple[int, float]:
    lam = np.asarray(eigenvalues)
    n = lam.size // m
    if spec.mode == "rank":
        z = spec.z
        if z > n:
            raise TruncationError(f"rank z={z} exceeds n={n}")
        if lam[z * m - 1] <= 0:
            raise TruncationError(
                f"rank z={z} reaches non-positive Gramian eigenvalues; choose z <= {int(np.sum(lam > 0)) // m}"
            )
        theta = float(lam[z * m]) if z < n else 0.0
        return z, max(theta, 0.0)
    theta = default_threshold(lam) if spec.theta is None else float(spec.theta)
    z = int(np.sum(lam > theta)) // m
    if z == 0:
        raise TruncationError(f"threshold {theta:.3e} keeps fewer than m={m} eigenvalues")
    return z, theta


def spectral_truncate(M, S, spec: TruncationSpec, m: int | None = None) -> Truncation:
    """Project ``M`` and ``S`` on the leading ``z m`` eigenvectors of ``M``."""
    if m is None:
        m = M.block_size
    decomp = sym_eig_desc(M)
    z, theta = select_rank(decomp.eigenvalues, m, spec)
    zm = z * m
    zt = decomp.eigenvectors[:, :zm]
    s_arr = S.entries if isinstance(S, BlockedMatrix) else np.asarray(S)
    scal = zt.T @ s_arr @ zt
    scal = 0.5 * (scal + scal.T)
    return Truncation(zt, decomp.eigenvalues[:zm].copy(), scal, zt[:m].T.copy(), z, theta, decomp.eigenvalues)


@dataclass(frozen=True)
class Rom:
    """Block-tridiagonal propagator with its initial block ``b`` and optional factor.

    ``kind`` is ``"full"`` or ``"regularized"``; regularized models carry the
    truncation and the Lanczos basis ``U``.
    """

    propagator: BlockedMatrix
    b: np.ndarray = field(repr=False)
    tau: float
    kind: str
    factor: Optional[BlockedMatrix] = field(default=None, repr=False)
    truncation: Optional[Truncation] = field(default=None, repr=False)
    lanczos_basis: Optional[np.ndarray] = field(default=None, repr=False)
    R: Optional[BlockedMatrix] = field(default=None, repr=False)

    @property
    def m(self) -> int:
        return self.propagator.block_size

    @property
    def num_blocks(self) -> int:
        return self.propagator.num_blocks

    def spectrum(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.propagator.entries)[::-1]

    def with_factor(self) -> "Rom":
        if self.factor is not None:
            return self
        return Rom(self.propagator, self.b, self.tau, self.kind, propagator_factor(self),
                   self.truncation, self.lanczos_basis, self.R)


def rom_full(data: ArrayDataSet, n: int | None = None, with_factor: bool = False) -> Rom:
    """Untruncated ROM from the block Cholesky factor of the Gramian."""
    pair = assemble_gram_pair(data, n)
    m = pair.m
    try:
        r = block_cholesky_full(pair.M, m)
    except BreakdownError as exc:
        raise IndefiniteGramian(exc.block_index, str(exc)) from exc
    ra = r.entries
    left = sla.solve_triangular(ra, pair.S.entries, trans="T", lower=False)
    prop = sla.solve_triangular(ra, left.T, trans="T", lower=False)
    propagator = BlockedMatrix(prop, m, Structure.BLOCK_TRIDIAGONAL)
    rom = Rom(propagator, ra[:, :m].copy(), data.tau, "full", R=r)
    return rom.with_factor() if with_factor else rom


def rom_regularized(
    data: ArrayDataSet,
    spec: TruncationSpec,
    n: int | None = None,
    with_factor: bool = True,
) -> Rom:
    """Regularized ROM: spectral truncation then block Lanczos re-tridiagonalization."""
    pair = assemble_gram_pair(data, n)
    trunc = spectral_truncate(pair.M, pair.S, spec, pair.m)
    return rom_from_truncation(trunc, data.tau, with_factor)


def rom_from_truncation(trunc: Truncation, tau: float, with_factor: bool = True) -> Rom:
    m = trunc.e1_tilde.shape[1]
    s = np.sqrt(trunc.sfrak2)
    a = trunc.scal / np.outer(s, s)
    b0 = s[:, None] * trunc.e1_tilde
    u, prop = block_lanczos(a, b0)
    rom = Rom(prop, u @ b0, tau, "regularized", truncation=trunc, lanczos_basis=u)
    return rom.with_factor() if with_factor else rom


def rom_synthesize_data(rom: Rom, count: int) -> ArrayDataSet:
    """``D_k = b^T T_k(P) b`` for k = 0..count-1."""
    x = chebyshev_sequence(rom.propagator, rom.b, count)
    d = np.einsum("ia,kib->kab", rom.b, x)
    d = 0.5 * (d + d.transpose(0, 2, 1))
    return ArrayDataSet(d, rom.tau, meta={"source": f"rom-{rom.kind}"})


def propagator_factor(rom: Rom) -> BlockedMatrix:
    """Lower block bidiagonal ``L`` with ``L L^T = (2 / tau^2) (I - P)``."""
    p = rom.propagator.entries
    t = (2.0 / rom.tau**2) * (np.eye(p.shape[0]) - p)
    return block_cholesky_tridiag(BlockedMatrix(t, rom.m, Structure.BLOCK_TRIDIAGONAL), rom.m)


def gramian_spectrum(data: ArrayDataSet) -> np.ndarray:
    return sym_eig_desc(assemble_mass(data)).eigenvalues


def write_spectrum_csv(path, eigenvalues) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["j", "sigma2"])
        for j, lam in enumerate(eigenvalues, start=1):
            w.writerow([j, repr(float(lam))])


STRUCTURE_TOLERANCES = {"orthogonality": 1e-8, "cholesky": 1e-10}


def structure_checks(rom: Rom) -> dict[str, float]:
    """Structural residuals of a ROM.

    ``propagator_pattern`` and ``factor_pattern`` are the largest entries
    outside the block-tridiagonal / lower block-bidiagonal patterns (exactly
    zero by construction).  ``cholesky`` is the relative reconstruction error
    of the factor and ``orthogonality`` the departure of the Lanczos basis
    from orthonormality.
    """
    out = {"propagator_pattern": rom.propagator.pattern_violation()}
    if rom.factor is not None:
        l = rom.factor.entries
        t = (2.0 / rom.tau**2) * (np.eye(l.shape[0]) - rom.propagator.entries)
        out["factor_pattern"] = rom.factor.pattern_violation()
        out["cholesky"] = float(np.linalg.norm(l @ l.T - t) / np.linalg.norm(t))
    if rom.lanczos_basis is not None:
        u = rom.lanczos_basis
        out["orthogonality"] = float(np.abs(u @ u.T - np.eye(u.shape[0])).max())
    return out


def assert_structure(rom: Rom) -> dict[str, float]:
    """:func:`structure_checks` raising :class:`ConvergenceError` on violation."""
    checks = structure_checks(rom)
    for key in ("propagator_pattern", "factor_pattern"):
        if checks.get(key, 0.0) != 0.0:
            raise ConvergenceError(f"{key} violated", checks[key])
    for key, tol in STRUCTURE_TOLERANCES.items():
        if checks.get(key, 0.0) > tol:
            raise ConvergenceError(f"{key} residual {checks[key]:.3e} exceeds {tol:.0e}", checks[key])
    return checks
