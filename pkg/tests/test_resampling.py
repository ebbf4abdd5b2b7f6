"""Resampling tests: symmetric-band interpolation oracle, exact adjointness,
index mapping, and the accuracy ordering of methods A / B / inverse-distance."""

import numpy as np
import pytest

from cbnufft.geometry import RadialGridSpec
from cbnufft.nufft import sinc_resample
from cbnufft.resampling import (plan_resample, polar_index_map,
                                resample_apply, resample_inverse_distance,
                                resample_method_a, resample_method_b,
                                resample_transpose)

SPEC = RadialGridSpec(16, 12, 10, 1.0)
DIMS = (SPEC.n_rho, SPEC.n_theta, SPEC.n_phi)


def lower_band_data(rng, dims):
    """Random lattice data with spectrum confined to the lower half-band
    and a constant origin row (rho index n_rho/2).

    On such data the symmetric-band interpolant coincides exactly with the
    one-sided interpolant of sinc_resample, giving a machine-precision
    oracle for the resampler; the constant origin row makes the resampler's
    internal origin averaging a no-op, so the oracle sees the same lattice.
    """
    spectrum = np.zeros(dims, dtype=np.complex128)
    sl = tuple(slice(0, max(1, d // 2 - 1)) for d in dims)
    spectrum[sl] = rng.standard_normal(spectrum[sl].shape) \
        + 1j * rng.standard_normal(spectrum[sl].shape)
    out = np.fft.ifftn(spectrum)
    # flatten the origin row to its mean; the correction is constant along
    # rho (k_rho = 0) and shares the row's in-band (theta, phi) spectrum,
    # so the lower-band confinement survives
    row = dims[0] // 2
    out = out - (out[row] - out[row].mean())[None, :, :]
    return out


def interior_targets(rng, m, margin=2.5):
    """Fractional lattice targets away from the rho wrap-around seam."""
    t = rng.uniform(0, 1, (m, 3)) * np.array(DIMS, dtype=float)
    t[:, 0] = rng.uniform(margin, SPEC.n_rho - margin, m)
    return t


def test_polar_index_map_grid_nodes_are_integers():
    rho = SPEC.rho_values[3]
    theta = SPEC.theta_values[5]
    phi = SPEC.phi_values[7]
    idx = polar_index_map(np.array([[rho, theta, phi]]), SPEC)
    assert np.allclose(idx, [[3.0, 5.0, 7.0]], atol=1e-9)


def test_polar_index_map_wraps_antipodal():
    # theta beyond pi must fold through the antipodal identity
    rho, theta, phi = 0.25, np.pi + 0.3, 0.4
    idx = polar_index_map(np.array([[rho, theta, phi]]), SPEC)
    r2, t2, p2 = np.pi + 0.3 - np.pi, 0.3, 0.4  # same plane, by hand
    ref = polar_index_map(np.array([[-rho, np.pi - theta, phi + np.pi]]), SPEC)
    assert np.allclose(idx, ref, atol=1e-9)
    assert np.all(idx >= 0)


def test_polar_index_map_top_rho_folds():
    idx = polar_index_map(np.array([[SPEC.rho_max, 0.3, 0.4]]), SPEC)
    assert idx[0, 0] == 0.0  # +rho_max lands on the -rho_max node


def test_polar_index_map_rejects_out_of_band():
    with pytest.raises(ValueError):
        polar_index_map(np.array([[1.5 * SPEC.rho_max, 0.3, 0.4]]), SPEC)


@pytest.mark.parametrize("method", ["a", "b"])
def test_resample_exact_at_lattice_nodes(method):
    rng = np.random.default_rng(20)
    data = np.real(lower_band_data(rng, DIMS))
    targets = np.stack(np.meshgrid(*[np.arange(d) for d in DIMS],
                                   indexing="ij"), axis=-1).reshape(-1, 3)[::7]
    targets = targets.astype(float)
    plan = plan_resample(SPEC, targets, method)
    got = np.real(resample_apply(plan, data))
    ref = data[targets[:, 0].astype(int), targets[:, 1].astype(int),
                 targets[:, 2].astype(int)]
    tol = 1e-8 if method == "a" else 1e-10
    assert np.max(np.abs(got - ref)) < tol * max(1.0, np.max(np.abs(ref)))


def test_method_a_matches_sinc_oracle_on_lower_band_data():
    rng = np.random.default_rng(21)
    data = lower_band_data(rng, DIMS)
    targets = interior_targets(rng, 200)
    got = resample_apply(plan_resample(SPEC, targets, "a", rho_pad=0,
                                       j=(6, 6, 6)), data)
    ref = sinc_resample(data, targets)
    scale = np.max(np.abs(ref))
    assert np.max(np.abs(got - ref)) < 1e-5 * scale


def test_method_b_approximates_sinc_oracle():
    """Truncated-kernel method lands within its design accuracy, and far
    from machine precision -- it is an approximation by construction."""
    rng = np.random.default_rng(22)
    data = lower_band_data(rng, DIMS)
    targets = interior_targets(rng, 200)
    got = resample_apply(plan_resample(SPEC, targets, "b", rho_pad=0), data)
    ref = sinc_resample(data, targets)
    scale = np.max(np.abs(ref))
    err = np.max(np.abs(got - ref)) / scale
    # measured worst case for the default 3-tap kernel on random band data
    # is ~0.25 in max norm
    assert err < 0.30


@pytest.mark.xfail(reason="3-tap truncated periodic-sinc interpolation cannot "
                          "reach NUFFT-grade accuracy; kept red to document "
                          "the accuracy gap between methods B and A",
                   strict=True)
def test_method_b_tight_tolerance_is_out_of_reach():
    rng = np.random.default_rng(22)
    data = lower_band_data(rng, DIMS)
    targets = interior_targets(rng, 200)
    got = resample_apply(plan_resample(SPEC, targets, "b", rho_pad=0), data)
    ref = sinc_resample(data, targets)
    assert np.max(np.abs(got - ref)) < 1e-5 * np.max(np.abs(ref))


def test_method_b_converges_with_side_lobes():
    rng = np.random.default_rng(23)
    data = lower_band_data(rng, DIMS)
    targets = interior_targets(rng, 150)
    ref = sinc_resample(data, targets)
    errs = []
    for sl in (1, 3, 7):
        got = resample_apply(plan_resample(SPEC, targets, "b", rho_pad=0,
                                           side_lobes=sl), data)
        errs.append(np.max(np.abs(got - ref)))
    assert errs[0] > errs[1] > errs[2]


@pytest.mark.parametrize("method", ["a", "b"])
def test_transpose_is_exact_adjoint(method):
    rng = np.random.default_rng(24)
    targets = interior_targets(rng, 300)
    plan = plan_resample(SPEC, targets, method)
    x = rng.standard_normal(DIMS) + 1j * rng.standard_normal(DIMS)
    y = rng.standard_normal(300) + 1j * rng.standard_normal(300)
    lhs = np.vdot(y, resample_apply(plan, x))
    rhs = np.vdot(resample_transpose(plan, y), x)
    assert abs(lhs - rhs) / abs(lhs) < 1e-12


def test_one_shot_wrappers_match_plans():
    rng = np.random.default_rng(25)
    data = np.real(lower_band_data(rng, DIMS))
    targets = interior_targets(rng, 50)
    a1 = resample_method_a(data, targets, SPEC)
    a2 = np.real(resample_apply(plan_resample(SPEC, targets, "a"), data))
    assert np.allclose(a1, a2)
    b1 = resample_method_b(data, targets, SPEC)
    b2 = np.real(resample_apply(plan_resample(SPEC, targets, "b"), data))
    assert np.allclose(b1, b2)


def test_inverse_distance_is_coarser_than_method_a():
    rng = np.random.default_rng(26)
    data = lower_band_data(rng, DIMS)
    targets = interior_targets(rng, 200)
    ref = sinc_resample(data, targets)
    got_a = resample_apply(plan_resample(SPEC, targets, "a", rho_pad=0,
                                         j=(6, 6, 6)), data)
    err_a = np.max(np.abs(got_a - ref))
    got_id = resample_inverse_distance(data.real, targets, SPEC) \
        + 1j * resample_inverse_distance(data.imag, targets, SPEC)
    err_id = np.max(np.abs(got_id - ref))
    assert err_id > 10.0 * err_a


def test_plan_validation():
    with pytest.raises(ValueError):
        plan_resample(SPEC, np.zeros((4, 2)), "a")
    with pytest.raises(ValueError):
        plan_resample(SPEC, np.zeros((4, 3)), "c")
    with pytest.raises(ValueError):
        plan_resample(SPEC, np.full((4, 3), -5.0), "a")  # outside index range
    plan = plan_resample(SPEC, np.zeros((4, 3)), "a")
    with pytest.raises(ValueError):
        resample_apply(plan, np.zeros((3, 3, 3)))
    with pytest.raises(ValueError):
        resample_transpose(plan, np.zeros(5))
