from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustdtb.blocklinalg import chebyshev_sequence
from robustdtb.dtb import (
    DtbConfig,
    dtb_run,
    dtb_transform,
    dtb_unregularized,
    first_order_snapshots,
    perturbation_timestep,
    spd_sqrt,
)
from robustdtb.errors import ConfigurationError, PipelineError, TruncationError
from robustdtb.romcore import TruncationSpec

from conftest import synthetic


def _bidiagonal(rng, p, scale=1.0):
    l = np.diag(rng.uniform(1.0, 2.0, p)) + np.diag(rng.uniform(-1.0, 1.0, p - 1), -1)
    return scale * l


def test_first_order_scheme_is_chebyshev():
    rng = np.random.default_rng(0)
    tau = 0.3
    l = _bidiagonal(rng, 5)
    b = rng.standard_normal((5, 1))
    snaps = first_order_snapshots(l, b, tau, 9)
    p = np.eye(5) - 0.5 * tau**2 * l @ l.T
    np.testing.assert_allclose(snaps.primary, chebyshev_sequence(p, b, 9), atol=1e-12)


def test_perturbation_matches_central_difference_oracle():
    # m = 1, n = 3: derivative of the snapshots along L0 -> Lq
    rng = np.random.default_rng(1)
    tau = 0.25
    l0 = _bidiagonal(rng, 3)
    dl = 0.3 * _bidiagonal(rng, 3)
    b = rng.standard_normal((3, 1))
    count = 6
    ref = first_order_snapshots(l0, b, tau, count)
    got = perturbation_timestep(l0, l0 + dl, b, ref, tau)
    h = 1e-5
    plus = first_order_snapshots(l0 + h * dl, b, tau, count).primary
    minus = first_order_snapshots(l0 - h * dl, b, tau, count).primary
    oracle = (plus - minus) / (2 * h)
    np.testing.assert_allclose(got.delta_primary, oracle, atol=1e-8)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 5000), a=st.floats(-3, 3), c=st.floats(-3, 3))
def test_perturbation_is_linear_in_factor_difference(seed, a, c):
    rng = np.random.default_rng(seed)
    tau = 0.2
    l0 = _bidiagonal(rng, 4)
    d1, d2 = _bidiagonal(rng, 4), _bidiagonal(rng, 4)
    b = rng.standard_normal((4, 2))
    ref = first_order_snapshots(l0, b, tau, 7)
    one = perturbation_timestep(l0, l0 + d1, b, ref, tau).delta_primary
    two = perturbation_timestep(l0, l0 + d2, b, ref, tau).delta_primary
    mix = perturbation_timestep(l0, l0 + a * d1 + c * d2, b, ref, tau).delta_primary
    np.testing.assert_allclose(mix, a * one + c * two, atol=1e-9 * (1 + np.abs(mix).max()))


def test_perturbation_rejects_mismatched_shapes():
    rng = np.random.default_rng(2)
    l0 = _bidiagonal(rng, 4)
    ref = first_order_snapshots(l0, np.ones((4, 1)), 0.1, 3)
    with pytest.raises(ConfigurationError):
        perturbation_timestep(l0, np.eye(3), np.ones((4, 1)), ref, 0.1)


def test_spd_sqrt():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((4, 4))
    a = a @ a.T + np.eye(4)
    r = spd_sqrt(a)
    np.testing.assert_allclose(r @ r, a, atol=1e-12)
    np.testing.assert_allclose(r, r.T)
    with pytest.raises(ConfigurationError):
        spd_sqrt(-a)


def test_identity_at_zero_reflectivity():
    syn = synthetic(size=12, m=2, n=6, seed=4)
    result = dtb_run(syn.data, DtbConfig(syn.data.tau, syn.data))
    err = np.abs(result.born.D - result.reference_data.D).max()
    assert err <= 1e-12 * max(1.0, np.abs(syn.data.D).max())


def test_manifest_and_structure(small_synthetic):
    data = small_synthetic.data
    result = dtb_run(data, DtbConfig(data.tau, data, TruncationSpec.rank(3)))
    man = result.manifest
    assert man["z"] == 3 and man["m"] == 2 and man["n"] == 6
    assert set(man["step_seconds"]) == {
        "assemble Gramian and stiffness",
        "eigendecomposition and truncation",
        "reference Gramian and stiffness",
        "projected reference matrices",
        "block Lanczos and Cholesky factors",
        "reference data synthesis",
        "perturbation time stepping",
    }
    for checks in man["structure"].values():
        assert checks["propagator_pattern"] == 0.0 and checks["factor_pattern"] == 0.0
        assert checks["orthogonality"] <= 1e-8 and checks["cholesky"] <= 1e-10
    assert result.born.meta["source"] == "dtb"


def test_pipeline_error_carries_step(small_synthetic):
    data = small_synthetic.data
    with pytest.raises(PipelineError) as info:
        dtb_transform(data, DtbConfig(data.tau, data, TruncationSpec.rank(50)))
    assert info.value.step == 2
    assert isinstance(info.value.cause, TruncationError)


def test_incompatible_reference_rejected(small_synthetic):
    data = small_synthetic.data
    other = synthetic(size=12, m=2, n=5, seed=1).data
    with pytest.raises(ConfigurationError):
        dtb_transform(data, DtbConfig(data.tau, other))


def test_regularized_agrees_with_unregularized_on_clean_simulation():
    from robustdtb.presets import acoustic_two_inclusions
    from robustdtb.wavesim import simulate

    exp = acoustic_two_inclusions(m_a=3, n=10)
    measured = simulate(exp.medium, exp.geometry, exp.tau, exp.n)
    reference = simulate(exp.medium.reference(), exp.geometry, exp.tau, exp.n)
    reg = dtb_transform(measured, DtbConfig(exp.tau, reference, TruncationSpec.rank(exp.n)))
    unreg = dtb_unregularized(measured, reference, exp.tau)
    assert np.abs(reg.D - unreg.D).max() <= 1e-6 * np.abs(unreg.D).max()
