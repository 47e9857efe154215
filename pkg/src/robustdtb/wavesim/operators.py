"""Staggered-grid first-order operators in Liouville-transformed form.

The discrete ``L_q^T`` maps the primary field (pressure-like, or
velocity-like for elastic waves) to the dual field; ``L_q`` is its exact
matrix transpose, so ``A = L_q L_q^T`` is symmetric in the plain
Euclidean inner product.  The reflectivity enters only through a
potential term that is linear in ``q``, so ``L_q = L_0 + Q(q)`` holds at
the discrete level.

Boundary handling: cells outside the grid are zero (homogeneous
Dirichlet on the sides and bottom); dual unknowns whose normal component
sits on the surface ``z = 0`` are removed (sound-hard / traction-free).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .media import AcousticMedium, ElasticMedium, Medium


def _stencil(out_shape, in_shape, terms) -> sp.csr_matrix:
    """Sparse map with ``out[j, i] += w[j, i] * in[j + dj, i + di]`` (zero outside ``in``)."""
    nzo, nxo = out_shape
    nzi, nxi = in_shape
    jj, ii = np.meshgrid(np.arange(nzo), np.arange(nxo), indexing="ij")
    rows, cols, vals = [], [], []
    for dj, di, w in terms:
        w = np.broadcast_to(np.asarray(w, dtype=float), out_shape)
        js, is_ = jj + dj, ii + di
        ok = (js >= 0) & (js < nzi) & (is_ >= 0) & (is_ < nxi) & (w != 0)
        rows.append((jj * nxo + ii)[ok])
        cols.append((js * nxi + is_)[ok])
        vals.append(w[ok])
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nzo * nxo, nzi * nxi),
    )


def _pad_edge(f, axis):
    pad = [(0, 0), (0, 0)]
    pad[axis] = (1, 1)
    return np.pad(f, pad, mode="edge")


def _avg_x(f):
    """Cell values -> vertical faces x = i hx, shape (nz, nx + 1)."""
    g = _pad_edge(f, 1)
    return 0.5 * (g[:, :-1] + g[:, 1:])


def _avg_z(f):
    """Cell values -> horizontal faces z = j hz, shape (nz + 1, nx)."""
    g = _pad_edge(f, 0)
    return 0.5 * (g[:-1] + g[1:])


def _grad_x(f, h):
    return np.diff(_pad_edge(f, 1), axis=1) / h


def _grad_z(f, h):
    return np.diff(_pad_edge(f, 0), axis=0) / h


def _diag(v) -> sp.dia_matrix:
    return sp.diags(np.ravel(v))


def _select(n_full: int, keep_mask: np.ndarray) -> sp.csr_matrix:
    idx = np.flatnonzero(np.ravel(keep_mask))
    return sp.csr_matrix((np.ones(idx.size), (np.arange(idx.size), idx)), shape=(idx.size, n_full))


@dataclass(frozen=True)
class DiscreteWaveOperator:
    """``L_q^T = L_0^T + Q^T`` as sparse matrices, plus primary-grid bookkeeping.

    ``primary_points`` lists, per primary component, the (x, z) coordinates of
    the unknowns and the slice they occupy in the flattened primary vector.
    """

    L0T: sp.csr_matrix
    QT: sp.csr_matrix
    cell_area: float
    primary_points: tuple
    physics: str

    @property
    def LqT(self) -> sp.csr_matrix:
        return (self.L0T + self.QT).tocsr()

    @property
    def Lq(self) -> sp.csr_matrix:
        return self.LqT.T.tocsr()

    @property
    def num_primary(self) -> int:
        return self.L0T.shape[1]

    @property
    def num_dual(self) -> int:
        return self.L0T.shape[0]

    def apply_LqT(self, u: np.ndarray) -> np.ndarray:
        return self.LqT @ u

    def apply_Lq(self, v: np.ndarray) -> np.ndarray:
        return self.Lq @ v

    def stiffness(self) -> sp.csr_matrix:
        """The symmetric positive definite ``L_q L_q^T``."""
        lt = self.LqT
        return (lt.T @ lt).tocsr()

    def norm_bound(self) -> float:
        """Upper bound on ``||L_q L_q^T||_2`` from the 1- and inf-norms of ``L_q^T``."""
        lt = abs(self.LqT)
        return float(lt.sum(axis=0).max() * lt.sum(axis=1).max())


def assemble_operators(medium: Medium) -> DiscreteWaveOperator:
    if isinstance(medium, AcousticMedium):
        return _acoustic_operators(medium)
    if isinstance(medium, ElasticMedium):
        return _elastic_operators(medium)
    raise TypeError(f"unsupported medium type {type(medium).__name__}")


def _acoustic_operators(med: AcousticMedium) -> DiscreteWaveOperator:
    nz, nx = med.shape
    hx, hz = med.hx, med.hz
    c, q = med.c, med.q
    sc = np.sqrt(c)
    cfx, cfz = _avg_x(c), _avg_z(c)
    fx_shape, fz_shape = (nz, nx + 1), (nz + 1, nx)

    # face x = i hx sits between cells i-1 and i
    dx = _stencil(fx_shape, (nz, nx), [(0, 0, 1.0 / hx), (0, -1, -1.0 / hx)])
    ax = _stencil(fx_shape, (nz, nx), [(0, 0, 0.5), (0, -1, 0.5)])
    dz = _stencil(fz_shape, (nz, nx), [(0, 0, 1.0 / hz), (-1, 0, -1.0 / hz)])
    az = _stencil(fz_shape, (nz, nx), [(0, 0, 0.5), (-1, 0, 0.5)])

    gx = _diag(np.sqrt(cfx)) @ dx @ _diag(sc)
    gz = _diag(np.sqrt(cfz)) @ dz @ _diag(sc)
    qx = _diag(0.5 * cfx * _grad_x(q, hx)) @ ax
    qz = _diag(0.5 * cfz * _grad_z(q, hz)) @ az

    # normal dual component vanishes on the sound-hard surface z = 0
    keep_z = np.ones(fz_shape, dtype=bool)
    keep_z[0] = False
    sel_z = _select(keep_z.size, keep_z)

    L0T = sp.vstack([gx, sel_z @ gz]).tocsr()
    QT = sp.vstack([qx, sel_z @ qz]).tocsr()

    xs = (np.arange(nx) + 0.5) * hx
    zs = (np.arange(nz) + 0.5) * hz
    zz, xx = np.meshgrid(zs, xs, indexing="ij")
    points = ((xx.ravel(), zz.ravel(), slice(0, nz * nx)),)
    return DiscreteWaveOperator(L0T, QT, hx * hz, points, "acoustic")


def _sqrt_gamma_blocks(gamma):
    """Entries (a, b) of the 2x2 principal root of [[1, 1-2g], [1-2g, 1]]."""
    s1 = np.sqrt(2.0 * (1.0 - gamma))
    s2 = np.sqrt(2.0 * gamma)
    return 0.5 * (s1 + s2), 0.5 * (s1 - s2)


def _elastic_operators(med: ElasticMedium) -> DiscreteWaveOperator:
    nz, nx = med.shape
    hx, hz = med.hx, med.hz
    cp, q, gamma = med.cp, med.q, med.gamma

    c_shape = (nz, nx)
    v1_shape = (nz, nx + 1)  # x = i hx, z = (j + 1/2) hz
    v2_shape = (nz + 1, nx)  # x = (i + 1/2) hx, z = j hz
    n_shape = (nz + 1, nx + 1)  # nodes x = i hx, z = j hz

    cp_v1, cp_v2 = _avg_x(cp), _avg_z(cp)
    cp_n = _avg_x(_avg_z(cp))
    q_n = _avg_x(_avg_z(q))

    # D v, with sqrt(cp) on both sides
    d11 = _stencil(c_shape, v1_shape, [(0, 1, 1.0 / hx), (0, 0, -1.0 / hx)])
    d22 = _stencil(c_shape, v2_shape, [(1, 0, 1.0 / hz), (0, 0, -1.0 / hz)])
    d12_1 = _stencil(n_shape, v1_shape, [(0, 0, 1.0 / hz), (-1, 0, -1.0 / hz)])
    d12_2 = _stencil(n_shape, v2_shape, [(0, 0, 1.0 / hx), (0, -1, -1.0 / hx)])
    s_c, s_n = _diag(np.sqrt(cp)), _diag(np.sqrt(cp_n))
    s_v1, s_v2 = _diag(np.sqrt(cp_v1)), _diag(np.sqrt(cp_v2))

    # potential Q_q^T: (cp / 2) [dq/dx v1; dq/dz v2; dq/dz v1 + dq/dx v2]
    a11 = _stencil(c_shape, v1_shape, [(0, 1, 0.5), (0, 0, 0.5)])
    a22 = _stencil(c_shape, v2_shape, [(1, 0, 0.5), (0, 0, 0.5)])
    a12_1 = _stencil(n_shape, v1_shape, [(0, 0, 0.5), (-1, 0, 0.5)])
    a12_2 = _stencil(n_shape, v2_shape, [(0, 0, 0.5), (0, -1, 0.5)])
    g1_v1 = _grad_x(q, hx)
    g2_v2 = _grad_z(q, hz)
    g2_v1 = np.diff(q_n, axis=0) / hz
    g1_v2 = np.diff(q_n, axis=1) / hx
    half_c, half_n = _diag(0.5 * cp), _diag(0.5 * cp_n)

    def assemble(b11, b22, b12_1, b12_2):
        zero_c2 = sp.csr_matrix((nz * nx, v2_shape[0] * v2_shape[1]))
        zero_c1 = sp.csr_matrix((nz * nx, v1_shape[0] * v1_shape[1]))
        return sp.bmat(
            [[b11, zero_c2], [zero_c1, b22], [b12_1, b12_2]], format="csr"
        )

    grad = assemble(s_c @ d11 @ s_v1, s_c @ d22 @ s_v2, s_n @ d12_1 @ s_v1, s_n @ d12_2 @ s_v2)
    pot = assemble(
        -(half_c @ a11 @ _diag(g1_v1)),
        -(half_c @ a22 @ _diag(g2_v2)),
        -(half_n @ a12_1 @ _diag(g2_v1)),
        -(half_n @ a12_2 @ _diag(g1_v2)),
    )

    # Gamma^{1/2}: 2x2 mixing of (T11, T22) at centres, sqrt(gamma) on T12 at nodes
    ga, gb = _sqrt_gamma_blocks(gamma)
    gamma_n = _avg_x(_avg_z(gamma))
    root = sp.bmat(
        [
            [_diag(ga), _diag(gb), None],
            [_diag(gb), _diag(ga), None],
            [None, None, _diag(np.sqrt(gamma_n))],
        ],
        format="csr",
    )

    keep_v1 = np.ones(v1_shape, dtype=bool)
    keep_v1[:, 0] = keep_v1[:, -1] = False  # Dirichlet side walls
    keep_v2 = np.ones(v2_shape, dtype=bool)
    keep_v2[-1] = False  # Dirichlet bottom
    keep_prim = np.concatenate([keep_v1.ravel(), keep_v2.ravel()])
    keep_n = np.ones(n_shape, dtype=bool)
    keep_n[0] = False  # traction free: T12 = 0 on z = 0
    keep_dual = np.concatenate([np.ones(2 * nz * nx, dtype=bool), keep_n.ravel()])
    rows = _select(keep_dual.size, keep_dual)
    cols = _select(keep_prim.size, keep_prim).T

    L0T = (rows @ root @ grad @ cols).tocsr()
    QT = (rows @ root @ pot @ cols).tocsr()

    x1 = np.arange(nx + 1) * hx
    z1 = (np.arange(nz) + 0.5) * hz
    z1g, x1g = np.meshgrid(z1, x1, indexing="ij")
    x2 = (np.arange(nx) + 0.5) * hx
    z2 = np.arange(nz + 1) * hz
    z2g, x2g = np.meshgrid(z2, x2, indexing="ij")
    n1 = int(keep_v1.sum())
    points = (
        (x1g[keep_v1], z1g[keep_v1], slice(0, n1)),
        (x2g[keep_v2], z2g[keep_v2], slice(n1, n1 + int(keep_v2.sum()))),
    )
    return DiscreteWaveOperator(L0T, QT, hx * hz, points, "elastic")
