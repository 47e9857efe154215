"""The Data-to-Born transformation.

Both the measured medium and the known reference medium (``q = 0``) are
projected on the same truncated eigenbasis of the measured Gramian.  Each
projected model is brought to block-tridiagonal form by block Lanczos and
factored as ``(2 / tau^2)(I - P) = L L^T``.  The Born data are then the
reference data plus the first-order response of the ROM snapshots to the
factor difference ``L_q - L_0``, propagated with a staggered first-order
time-stepping scheme.
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .blocklinalg import block_lanczos, chebyshev_sequence, sym_eig_desc
from .dataset import ArrayDataSet
from .errors import ConfigurationError, DtbError, PipelineError
from .romcore import (
    Rom,
    Truncation,
    TruncationSpec,
    assemble_gram_pair,
    assert_structure,
    rom_from_truncation,
    rom_full,
    spectral_truncate,
)

STEP_NAMES = {
    1: "assemble Gramian and stiffness",
    2: "eigendecomposition and truncation",
    3: "reference Gramian and stiffness",
    4: "projected reference matrices",
    5: "block Lanczos and Cholesky factors",
    6: "reference data synthesis",
    7: "perturbation time stepping",
}


@dataclass(frozen=True)
class DtbConfig:
    tau: float
    reference: ArrayDataSet
    spec: TruncationSpec = field(default_factory=TruncationSpec.threshold)
    epsilon_probe: Optional[float] = None


@dataclass(frozen=True)
class SnapshotSet:
    """Primary snapshots ``P_k`` (k = 0..K-1) and dual snapshots ``P^_k`` at half steps.

    ``dual[k]`` sits between ``primary[k]`` and ``primary[k+1]``.
    """

    primary: np.ndarray
    dual: np.ndarray
    delta_primary: Optional[np.ndarray] = None
    delta_dual: Optional[np.ndarray] = None


def first_order_snapshots(factor, b: np.ndarray, tau: float, count: int) -> SnapshotSet:
    """Staggered scheme ``P_{k+1} = P_k - tau L P^_k``, ``P^_k = P^_{k-1} + tau L^T P_k``.

    With ``P^_0 = tau L^T b / 2`` this reproduces ``P_k = T_k(I - tau^2 L L^T / 2) b``.
    """
    l = np.asarray(factor)
    lt = l.T
    primary = np.empty((count,) + b.shape)
    dual = np.empty((count,) + b.shape)
    primary[0] = b
    dual[0] = 0.5 * tau * (lt @ b)
    for k in range(1, count):
        primary[k] = primary[k - 1] - tau * (l @ dual[k - 1])
        dual[k] = dual[k - 1] + tau * (lt @ primary[k])
    return SnapshotSet(primary, dual)


def perturbation_timestep(l0, lq, b_tilde: np.ndarray, reference: SnapshotSet, tau: float) -> SnapshotSet:
    """Derivative of the snapshots along ``L_0 -> L_q``, forced by the reference snapshots."""
    l0, lq = np.asarray(l0), np.asarray(lq)
    if l0.shape != lq.shape or l0.shape[0] != b_tilde.shape[0]:
        raise ConfigurationError(f"factor shapes {l0.shape} and {lq.shape} do not match b of {b_tilde.shape}")
    dl = lq - l0
    count = reference.primary.shape[0]
    p0, d0 = reference.primary, reference.dual
    dp = np.empty_like(p0)
    dd = np.empty_like(d0)
    dp[0] = 0.0
    dd[0] = 0.5 * tau * (dl.T @ b_tilde)
    for k in range(1, count):
        dp[k] = dp[k - 1] - tau * (l0 @ dd[k - 1]) - tau * (dl @ d0[k - 1])
        dd[k] = dd[k - 1] + tau * (l0.T @ dp[k]) + tau * (dl.T @ p0[k])
    return SnapshotSet(p0, d0, dp, dd)


def spd_sqrt(a: np.ndarray) -> np.ndarray:
    """Principal square root of a symmetric positive definite matrix."""
    dec = sym_eig_desc(a)
    lam = dec.eigenvalues
    if lam[-1] <= 0:
        raise ConfigurationError(
            f"projected reference Gramian is not positive definite (min eigenvalue {lam[-1]:.3e}); "
            "raise the truncation threshold"
        )
    z = dec.eigenvectors
    root = (z * np.sqrt(lam)) @ z.T
    return 0.5 * (root + root.T)


def project_reference(trunc: Truncation, pair0) -> tuple[np.ndarray, np.ndarray]:
    """``(S0, Z^T S0 Z)`` with ``S0`` the SPD root of ``Z^T M0 Z``."""
    zt = trunc.Z
    s0 = spd_sqrt(zt.T @ pair0.M.entries @ zt)
    scal0 = zt.T @ pair0.S.entries @ zt
    return s0, 0.5 * (scal0 + scal0.T)


def _reference_from_projection(trunc: Truncation, s0, scal0, tau: float) -> Rom:
    inv = np.linalg.inv(s0)
    a0 = inv @ scal0 @ inv.T
    b0 = s0 @ trunc.e1_tilde
    u0, prop0 = block_lanczos(a0, b0)
    rom = Rom(prop0, u0 @ b0, tau, "regularized", truncation=trunc, lanczos_basis=u0)
    return rom.with_factor()


def reference_rom(trunc: Truncation, reference: ArrayDataSet, tau: float, n: int | None = None) -> Rom:
    """Reference ROM projected on the measured-data basis ``Z``.

    ``S0^2 = Z^T M0 Z`` is SPD but not diagonal, so its principal square root
    replaces the diagonal ``S`` of the measured ROM.
    """
    s0, scal0 = project_reference(trunc, assemble_gram_pair(reference, n))
    return _reference_from_projection(trunc, s0, scal0, tau)


@dataclass
class DtbResult:
    born: ArrayDataSet
    measured_rom: Rom
    reference_rom: Rom
    snapshots: SnapshotSet
    reference_data: ArrayDataSet
    manifest: dict


@contextmanager
def _step(number: int, timings: dict):
    start = time.perf_counter()
    try:
        yield
    except PipelineError:
        raise
    except DtbError as exc:
        raise PipelineError(number, exc) from exc
    except (np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
        raise PipelineError(number, exc) from exc
    finally:
        timings[STEP_NAMES[number]] = round(time.perf_counter() - start, 6)


def _born_output(rom_q: Rom, rom_0: Rom, b: np.ndarray, tau: float, count: int):
    ref_snaps = first_order_snapshots(rom_0.factor, b, tau, count)
    snaps = perturbation_timestep(rom_0.factor, rom_q.factor, b, ref_snaps, tau)
    d = np.einsum("ia,kib->kab", b, snaps.delta_primary)
    return d, snaps


def _reference_data(rom_0: Rom, b: np.ndarray, count: int) -> np.ndarray:
    x = chebyshev_sequence(rom_0.propagator, b, count)
    return np.einsum("ia,kib->kab", b, x)


def _sym(d: np.ndarray) -> np.ndarray:
    return 0.5 * (d + d.transpose(0, 2, 1))


def dtb_run(measured: ArrayDataSet, config: DtbConfig) -> DtbResult:
    """Full pipeline with intermediate objects and a run manifest."""
    ref = config.reference
    if not measured.compatible_with(ref):
        raise ConfigurationError("measured and reference data must share m, 2n and tau")
    if not np.isclose(measured.tau, config.tau, rtol=1e-12):
        raise ConfigurationError("config tau does not match the data")
    tau, count = config.tau, measured.twice_n
    timings: dict = {}

    with _step(1, timings):
        pair = assemble_gram_pair(measured)
    with _step(2, timings):
        trunc = spectral_truncate(pair.M, pair.S, config.spec, pair.m)
    with _step(3, timings):
        pair0 = assemble_gram_pair(ref)
    with _step(4, timings):
        s0, scal0 = project_reference(trunc, pair0)
    with _step(5, timings):
        rom_q = rom_from_truncation(trunc, tau, with_factor=True)
        rom_0 = _reference_from_projection(trunc, s0, scal0, tau)
        structure = {"measured": assert_structure(rom_q), "reference": assert_structure(rom_0)}
    with _step(6, timings):
        b = rom_q.b
        d_ref = _reference_data(rom_0, b, count)
    with _step(7, timings):
        delta, snaps = _born_output(rom_q, rom_0, b, tau, count)
        born = _sym(d_ref + delta)

    manifest = {
        "mode": config.spec.mode,
        "theta": trunc.theta,
        "z": trunc.z,
        "m": measured.m,
        "n": measured.n,
        "tail_mass": trunc.tail_mass,
        "sigma2_max": float(trunc.eigenvalues[0]),
        "sigma2_min": float(trunc.eigenvalues[-1]),
        "kept_min": float(trunc.sfrak2[-1]),
        "structure": structure,
        "step_seconds": timings,
    }
    scalars = {k: v for k, v in manifest.items() if k not in ("step_seconds", "structure")}
    out = measured.with_data(born, source="dtb", **scalars)
    return DtbResult(out, rom_q, rom_0, snaps, measured.with_data(_sym(d_ref), source="dtb-reference"), manifest)


def dtb_transform(measured: ArrayDataSet, config: DtbConfig) -> ArrayDataSet:
    """Regularized DtB transform of ``measured``; see :func:`dtb_run`."""
    return dtb_run(measured, config).born


def dtb_unregularized(measured: ArrayDataSet, reference: ArrayDataSet, tau: float) -> ArrayDataSet:
    """Same derivative construction on the exact (untruncated) ROMs.

    Raises :class:`IndefiniteGramian` when the measured Gramian is not SPD,
    which is the expected outcome on noisy data.
    """
    if not measured.compatible_with(reference):
        raise ConfigurationError("measured and reference data must share m, 2n and tau")
    rom_q = rom_full(measured, with_factor=True)
    rom_0 = rom_full(reference, with_factor=True)
    count = measured.twice_n
    b = rom_q.b
    d_ref = _reference_data(rom_0, b, count)
    delta, _ = _born_output(rom_q, rom_0, b, tau, count)
    return measured.with_data(_sym(d_ref + delta), source="dtb-unregularized")
