"""Leapfrog time stepping, data extraction, Born oracle and noise injection.

Every source is excited by the initial state ``P(0) = b^(s)``,
``dP/dt(0) = 0``.  The second-order form ``P'' = -L_q L_q^T P`` is
advanced with the leapfrog scheme, so the recorded snapshots are exact
Chebyshev polynomials of the one-step operator and the data obey the
discrete analogue of ``D_k = b^T cos(k tau sqrt(A)) b``.
"""

from __future__ import annotations

import hashlib
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..dataset import ArrayDataSet
from ..errors import ConfigurationError, StabilityError
from .media import Medium
from .operators import DiscreteWaveOperator, assemble_operators
from .sensors import SensorBasis, SensorGeometry, build_sensor_basis

log = logging.getLogger(__name__)

# recorded field allowed to grow this much over the initial state before we call it unstable
GROWTH_LIMIT = 1e6
# margin on the round-trip distance to the Dirichlet walls
WALL_MARGIN = 1.05


@dataclass(frozen=True)
class Padding:
    left: int
    right: int
    bottom: int


@dataclass(frozen=True)
class FineSnapshotMatrix:
    """Recorded snapshots ``sqrt(cell area) * P_k`` on the full solver grid (test oracle).

    ``snapshots[k]`` has shape (num_primary, m).
    """

    snapshots: np.ndarray = field(repr=False)
    basis: SensorBasis = field(repr=False)

    def block(self, k: int) -> np.ndarray:
        return self.snapshots[k]

    def gramian(self, n: int) -> np.ndarray:
        """``P^(N)T P^(N)`` over the first ``n`` snapshots."""
        v = np.concatenate(list(self.snapshots[:n]), axis=1)
        return v.T @ v

    def stiffness(self, n: int) -> np.ndarray:
        """``P^(N)T Prop P^(N)`` using ``Prop P_k = (P_{k+1} + P_{|k-1|}) / 2``."""
        s = self.snapshots
        v = np.concatenate(list(s[:n]), axis=1)
        w = np.concatenate([0.5 * (s[k + 1] + s[abs(k - 1)]) for k in range(n)], axis=1)
        return v.T @ w

    def data(self) -> np.ndarray:
        scale = np.sqrt(self.basis.cell_area)
        return np.stack([scale * (self.basis.b.T @ s) for s in self.snapshots])


def required_padding(medium: Medium, geometry: SensorGeometry, tau: float, n: int) -> Padding:
    """Cells to add so no wall echo reaches the array within ``2 n tau``.

    Any path that touches a wall and returns to the array is at least twice
    the array-to-wall distance long, hence the one-way distance ``c n tau``.
    """
    nz, nx = medium.shape
    need = WALL_MARGIN * medium.max_speed * n * tau + geometry.support_radius
    pos = geometry.positions
    left = math.ceil(max(0.0, need - pos.min()) / medium.hx)
    right = math.ceil(max(0.0, need - (nx * medium.hx - pos.max())) / medium.hx)
    bottom = math.ceil(max(0.0, need - nz * medium.hz) / medium.hz)
    return Padding(left, right, bottom)


def stable_step(op: DiscreteWaveOperator) -> float:
    """Leapfrog limit ``2 / sqrt(||L L^T||)`` using a cheap norm bound."""
    return 2.0 / math.sqrt(op.norm_bound())


def default_substeps(medium: Medium, op: DiscreteWaveOperator, tau: float, cfl_ratio: float = 0.4) -> int:
    h = min(medium.hx, medium.hz)
    by_cfl = math.ceil(tau / (cfl_ratio * h / medium.max_speed))
    by_norm = math.ceil(tau / (0.95 * stable_step(op)))
    return max(1, by_cfl, by_norm)


def _leapfrog(lt, l, basis: SensorBasis, cols, dt: float, substeps: int, count: int, keep: bool):
    """Advance the columns ``cols`` of the sensor basis; return (measured data, snapshots or None)."""
    dt2 = dt * dt
    x0 = basis.b[:, cols]
    d = np.empty((count, basis.m, x0.shape[1]))
    rec = np.empty((count,) + x0.shape) if keep else None
    d[0] = basis.measure(x0)
    if keep:
        rec[0] = x0
    x_prev = x0
    x = x0 - 0.5 * dt2 * (l @ (lt @ x0))
    total = (count - 1) * substeps
    ref = max(np.linalg.norm(x0), np.finfo(float).tiny)
    for step in range(1, total + 1):
        if step % substeps == 0:
            k = step // substeps
            norm = np.linalg.norm(x)
            if not np.isfinite(norm) or norm > GROWTH_LIMIT * ref:
                raise StabilityError(f"field blew up at record {k}", 2 * substeps)
            d[k] = basis.measure(x)
            if keep:
                rec[k] = x
        if step == total:
            break
        x_next = 2.0 * x - x_prev - dt2 * (l @ (lt @ x))
        x_prev, x = x, x_next
    return d, rec


def simulate(
    medium: Medium,
    geometry: SensorGeometry,
    tau: float,
    n: int,
    substeps: int | None = None,
    cfl_ratio: float = 0.4,
    pad: bool = True,
    jobs: int = 1,
    return_snapshots: bool = False,
):
    """Synthesize the ``2n`` data matrices of ``medium`` seen by ``geometry``.

    Returns an :class:`ArrayDataSet`, or ``(data, FineSnapshotMatrix)`` when
    ``return_snapshots`` is set.
    """
    if n <= 0:
        raise ConfigurationError("n must be a positive integer")
    if tau <= 0:
        raise ConfigurationError("tau must be positive")
    padding = required_padding(medium, geometry, tau, n) if pad else Padding(0, 0, 0)
    grid = medium.padded(padding.left, padding.right, padding.bottom)
    op = assemble_operators(grid)
    basis = build_sensor_basis(
        geometry.shifted(padding.left * medium.hx), op, grid.shape[1] * grid.hx
    )
    if substeps is None:
        substeps = default_substeps(grid, op, tau, cfl_ratio)
    if substeps < 1:
        raise ConfigurationError("substeps must be >= 1")
    dt = tau / substeps
    count = 2 * n
    log.info(
        "simulating %s grid %s, %d sources, %d records x %d substeps",
        grid.physics, grid.shape, basis.m, count, substeps,
    )
    lt, l = op.LqT, op.Lq

    chunks = np.array_split(np.arange(basis.m), max(1, min(jobs, basis.m)))
    run = lambda cols: _leapfrog(lt, l, basis, cols, dt, substeps, count, return_snapshots)
    if len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(chunks[0])]

    d = np.empty((count, basis.m, basis.m))
    snaps = np.empty((count, op.num_primary, basis.m)) if return_snapshots else None
    for cols, (dcols, rec) in zip(chunks, results):
        d[:, :, cols] = dcols
        if return_snapshots:
            snaps[:, :, cols] = rec
    d_sym = 0.5 * (d + d.transpose(0, 2, 1))
    meta = {
        "source": "simulation",
        "geometry_hash": geometry_digest(geometry),
        "grid": list(grid.shape),
        "padding": [padding.left, padding.right, padding.bottom],
        "substeps": substeps,
        "raw_asymmetry": float(np.abs(d - d_sym).max() / (np.abs(d).max() or 1.0)),
    }
    data = ArrayDataSet(d_sym, tau, grid.physics, meta)
    if return_snapshots:
        return data, FineSnapshotMatrix(np.sqrt(op.cell_area) * snaps, basis)
    return data


def geometry_digest(geometry: SensorGeometry) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(geometry.positions, dtype="<f8").tobytes())
    h.update(np.float64(geometry.width).tobytes())
    h.update(np.int64(geometry.channels).tobytes())
    return h.hexdigest()[:16]


def born_oracle(
    medium: Medium,
    geometry: SensorGeometry,
    tau: float,
    n: int,
    eps: float = 1e-3,
    background: Medium | None = None,
    **sim_kwargs,
) -> ArrayDataSet:
    """Brute-force Born data ``D0 + [D(+eps q) - D(-eps q)] / (2 eps)``."""
    if not 0 < eps <= 0.5:
        raise ConfigurationError("eps must lie in (0, 0.5]")
    ref = medium.reference() if background is None else background
    if ref.shape != medium.shape or np.any(ref.q != 0):
        raise ConfigurationError("background must be the q = 0 medium on the same grid")
    speeds = ("c",) if medium.physics == "acoustic" else ("cp", "cs")
    for name in speeds:
        if not np.array_equal(getattr(ref, name), getattr(medium, name)):
            raise ConfigurationError("background and medium must share wave speeds")
    d0 = simulate(ref, geometry, tau, n, **sim_kwargs)
    dp = simulate(medium.scaled(eps), geometry, tau, n, **sim_kwargs)
    dm = simulate(medium.scaled(-eps), geometry, tau, n, **sim_kwargs)
    born = d0.D + (dp.D - dm.D) / (2.0 * eps)
    return d0.with_data(born, source="born-oracle", eps=eps)


def add_noise(data: ArrayDataSet, percent: float, seed: int) -> ArrayDataSet:
    """i.i.d. Gaussian noise of std ``percent/100 * max|D|`` per entry, then symmetrized."""
    if percent < 0:
        raise ConfigurationError("noise percent must be >= 0")
    if percent == 0:
        return data
    rng = np.random.default_rng(seed)
    std = percent / 100.0 * float(np.abs(data.D).max())
    noisy = data.D + std * rng.standard_normal(data.D.shape)
    noisy = 0.5 * (noisy + noisy.transpose(0, 2, 1))
    return data.with_data(noisy, noise_percent=percent, noise_seed=seed, noise_std=std)
