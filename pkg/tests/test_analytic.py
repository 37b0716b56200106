"""Closed-form layer: frozen quadrature oracles and algebraic invariants.

Frozen constants below were computed through independent routes (adaptive
quadrature of the defining integrals, fixed-point iteration of the Gaussian
variance map) and then hard-coded, so these tests do not share algebra with
the implementation.
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opkin.analytic import (
    AnalyticSummary,
    SupercriticalError,
    analytic_summary,
    critical_kappa,
    crossover_density,
    diffusion_coefficient,
    diffusion_coefficient_normalized,
    equilibrium_sigma2,
    gaussian_convolution_closed_form,
    gaussian_pdf,
    gibbs_image_variance,
    interaction_kernel,
    spatial_diffusivity,
)
from opkin.params import (
    KernelShape,
    ModelParams,
    ParamError,
    RateMode,
    SpatialKernelSpec,
)

SYM = RateMode.SYMMETRIC
ASYM = RateMode.NONSYMMETRIC


# ---- frozen quadrature/fixed-point oracles ---------------------------------------
def test_convolution_matches_quadrature_oracle():
    # adaptive quadrature of the defining integral, frozen
    assert gaussian_convolution_closed_form(0.0, 1.0, 0.0, 1.0) == pytest.approx(
        0.7071067811865477, rel=1e-13)
    assert gaussian_convolution_closed_form(0.7, 0.49, 0.2, 1.3) == pytest.approx(
        0.8314055111105562, rel=1e-10)


def test_convolution_degenerate_width_is_kernel():
    assert gaussian_convolution_closed_form(1.0, 0.0, 0.0, 1.0) == pytest.approx(
        math.exp(-0.5), rel=1e-15)


def test_equilibrium_variance_fixed_point_oracles():
    assert equilibrium_sigma2(1.0, 0.5, SYM) == pytest.approx(0.5, rel=1e-13)
    assert equilibrium_sigma2(1.0, 0.5, ASYM) == pytest.approx(1.0 / 3.0, rel=1e-13)
    # frozen fixed-point iterations at a second parameter point
    assert equilibrium_sigma2(2.0, 1.0, SYM) == pytest.approx(
        0.6666666666666666, rel=1e-13)
    assert equilibrium_sigma2(2.0, 1.0, ASYM) == pytest.approx(
        0.5714285714285714, rel=1e-13)


def test_diffusion_coefficient_quadrature_oracles():
    # frozen dblquad of the moment integrals behind the coefficients
    assert diffusion_coefficient(1.0, 0.5, SYM) == pytest.approx(
        0.35355339059327223, rel=1e-12)
    assert diffusion_coefficient(1.0, 0.5, ASYM) == pytest.approx(0.75, rel=1e-12)
    assert diffusion_coefficient(2.0, 1.0, SYM) == pytest.approx(
        0.6495190528383292, rel=1e-12)


def test_crossover_density_oracles():
    assert crossover_density(1.0, 0.5) == pytest.approx(2.1213203435596424, rel=1e-13)
    assert crossover_density(2.0, 1.0) == pytest.approx(1.3471506281091263, rel=1e-12)


def test_spatial_diffusivity_oracles():
    gauss1 = SpatialKernelSpec(KernelShape.GAUSSIAN, dimension=1)
    assert spatial_diffusivity(gauss1) == pytest.approx(0.5, rel=1e-8)
    ind1 = SpatialKernelSpec(KernelShape.INDICATOR, dimension=1)
    assert spatial_diffusivity(ind1) == pytest.approx(1.0 / 6.0, rel=1e-8)
    gauss2 = SpatialKernelSpec(KernelShape.GAUSSIAN, dimension=2)
    assert spatial_diffusivity(gauss2) == pytest.approx(0.5, rel=1e-8)


def test_gibbs_image_variance_oracle():
    assert gibbs_image_variance(0.4, 1.0, 0.5) == pytest.approx(0.35, abs=1e-15)


def test_critical_kappa_values():
    assert critical_kappa(1.0, SYM) == 1.0
    assert critical_kappa(1.0, ASYM) == 2.0
    assert critical_kappa(2.0, SYM) == 4.0
    assert critical_kappa(2.0, ASYM) == 8.0


# ---- the 100-point cross-check grid -----------------------------------------------
def _pair_grid(n=100):
    """n log-spaced (zeta, kappa) pairs with kappa subcritical for both modes."""
    rng = np.random.default_rng(20240811)
    zetas = np.exp(rng.uniform(math.log(0.2), math.log(5.0), n))
    fracs = np.exp(rng.uniform(math.log(0.02), math.log(0.95), n))
    return [(float(z), float(f * z * z)) for z, f in zip(zetas, fracs)]


@pytest.mark.parametrize("mode", [SYM, ASYM])
def test_two_coefficient_routes_agree_everywhere(mode):
    for zeta, kappa in _pair_grid():
        via_sigma = diffusion_coefficient(zeta, kappa, mode)
        direct = diffusion_coefficient_normalized(zeta, kappa, mode)
        assert via_sigma == pytest.approx(direct, rel=1e-12), (zeta, kappa)


def test_variance_and_speed_orderings_everywhere():
    for zeta, kappa in _pair_grid():
        s_sym = equilibrium_sigma2(zeta, kappa, SYM)
        s_asym = equilibrium_sigma2(zeta, kappa, ASYM)
        assert s_sym > s_asym, (zeta, kappa)
        c_sym = diffusion_coefficient(zeta, kappa, SYM)
        c_asym = diffusion_coefficient(zeta, kappa, ASYM)
        assert c_asym > c_sym, (zeta, kappa)
        assert crossover_density(zeta, kappa) == pytest.approx(c_asym / c_sym, rel=1e-14)


def test_gibbs_fixed_point_identity_everywhere():
    for zeta, kappa in _pair_grid():
        s_asym = equilibrium_sigma2(zeta, kappa, ASYM)
        image = gibbs_image_variance(s_asym, zeta, kappa)
        assert image == pytest.approx(s_asym, rel=1e-12), (zeta, kappa)


# ---- domain & error behaviour ------------------------------------------------------
def test_supercritical_raises():
    with pytest.raises(SupercriticalError):
        equilibrium_sigma2(1.0, 1.0, SYM)
    with pytest.raises(SupercriticalError):
        equilibrium_sigma2(1.0, 2.0, ASYM)
    with pytest.raises(SupercriticalError):
        diffusion_coefficient_normalized(1.0, 1.5, SYM)
    # nonsymmetric still fine between the two thresholds
    assert equilibrium_sigma2(1.0, 1.5, ASYM) == pytest.approx(3.0, rel=1e-13)


def test_zero_kappa_degenerates_to_point_mass():
    assert equilibrium_sigma2(1.0, 0.0, SYM) == 0.0
    assert equilibrium_sigma2(1.0, 0.0, ASYM) == 0.0


def test_bad_arguments_raise():
    with pytest.raises(ParamError):
        critical_kappa(0.0, SYM)
    with pytest.raises(ParamError):
        equilibrium_sigma2(1.0, -0.1, SYM)
    with pytest.raises(ParamError):
        gaussian_pdf(0.0, 0.0)
    with pytest.raises(ParamError):
        gibbs_image_variance(0.4, 1.0, 0.0)


# ---- property tests -----------------------------------------------------------------
@settings(max_examples=200, deadline=None)
@given(zeta=st.floats(0.1, 10.0), frac=st.floats(1e-6, 0.999999),
       mode=st.sampled_from([SYM, ASYM]))
def test_variance_positive_and_increasing_in_kappa(zeta, frac, mode):
    kappa = frac * critical_kappa(zeta, mode)
    s2 = equilibrium_sigma2(zeta, kappa, mode)
    assert s2 >= 0.0
    if kappa > 0:
        smaller = equilibrium_sigma2(zeta, 0.5 * kappa, mode)
        assert smaller < s2 or s2 == 0.0


@settings(max_examples=200, deadline=None)
@given(zeta=st.floats(0.1, 10.0), frac=st.floats(1e-6, 0.999),
       mode=st.sampled_from([SYM, ASYM]))
def test_normalized_coefficient_in_unit_interval(zeta, frac, mode):
    kappa = frac * critical_kappa(zeta, mode)
    c = diffusion_coefficient_normalized(zeta, kappa, mode)
    assert 0.0 < c <= 1.0
    # vanishing noise recovers the noiseless transport speed
    assert diffusion_coefficient_normalized(zeta, 0.0, mode) == pytest.approx(1.0)


@settings(max_examples=100, deadline=None)
@given(phi=st.floats(-8.0, 8.0), sigma2=st.floats(0.01, 9.0),
       mu=st.floats(-3.0, 3.0), zeta=st.floats(0.2, 4.0))
def test_convolution_bounds_and_symmetry(phi, sigma2, mu, zeta):
    val = float(gaussian_convolution_closed_form(phi, sigma2, mu, zeta))
    assert 0.0 < val <= 1.0  # kernel max 1, density mass 1
    mirrored = float(gaussian_convolution_closed_form(2.0 * mu - phi, sigma2, mu, zeta))
    assert val == pytest.approx(mirrored, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(u=st.floats(-20.0, 20.0), zeta=st.floats(0.1, 10.0))
def test_interaction_kernel_shape(u, zeta):
    val = float(interaction_kernel(u, zeta))
    assert 0.0 <= val <= 1.0  # may underflow to exactly 0 at extreme u/zeta
    assert float(interaction_kernel(0.0, zeta)) == 1.0
    assert val == pytest.approx(float(interaction_kernel(-u, zeta)), rel=1e-15)


def test_summary_roundtrip_and_headline_numbers():
    s = analytic_summary(ModelParams())
    assert isinstance(s, AnalyticSummary)
    d = s.to_dict()
    assert d["sigma2"] == pytest.approx(0.5, rel=1e-13)
    assert d["kappa_crit"] == 1.0
    assert d["c_norm"] == pytest.approx(0.35355339059327223, rel=1e-12)
    assert d["rho_star"] == pytest.approx(2.1213203435596424, rel=1e-13)
    assert d["spatial_d"] == pytest.approx(0.5, rel=1e-8)
    # c_diff carries the gamma*D prefactor
    assert d["c_diff"] == pytest.approx(0.5 * d["spatial_d"] * d["c_norm"], rel=1e-10)


def test_summary_supercritical_fields_none():
    s = analytic_summary(ModelParams(kappa=1.5))
    assert s.sigma2 is None and s.c_norm is None and s.c_diff is None
    assert s.kappa_crit == 1.0
