"""Mean-opinion diffusion on a static density: conservation, entropy, rates.

Closed-form references: on a uniform density rho0 the k-th sine mode decays
at c*rho0*(2 pi k)^2 (symmetric weighting) or c*(2 pi k)^2 (non-symmetric),
so the time to reach 1% of the initial amplitude is ln(100)/rate.
"""
import math

import numpy as np
import pytest
from scipy.stats import linregress

from opkin.macro import (
    MacroGrid,
    MacroState,
    amplitude,
    cfl_dt,
    consensus_time,
    conserved_quantity,
    density_gauss_bump,
    density_step,
    density_two_cluster,
    density_uniform,
    dissipation_rhs,
    entropy,
    phi_single_mode,
    run_macro,
    step_macro,
    weighted_mean,
)
from opkin.params import ParamError, RateMode

SYM = RateMode.SYMMETRIC
ASYM = RateMode.NONSYMMETRIC
C_S = 2.0 ** -1.5   # mode coefficients at zeta=1, kappa=0.5, gamma*D=1
C_A = 0.75


def _uniform_mode_state(j=256, rho0=1.0, k=1, amp=1.0):
    grid = MacroGrid(j)
    return MacroState(grid, density_uniform(grid, rho0), phi_single_mode(grid, amp, k))


# ---- construction and validation ----------------------------------------------------
def test_grid_and_state_validation():
    with pytest.raises(ParamError):
        MacroGrid(4)
    grid = MacroGrid(16)
    with pytest.raises(ParamError):
        MacroState(grid, np.ones(8), np.zeros(16))
    with pytest.raises(ParamError):
        MacroState(grid, np.zeros(16), np.zeros(16))  # vacuum
    with pytest.raises(ParamError):
        density_uniform(grid, 0.0)
    with pytest.raises(ParamError):
        density_step(grid, 0.0, 2.0)


def test_density_presets_positive_and_shaped():
    grid = MacroGrid(64)
    step = density_step(grid, 0.5, 2.0)
    assert step.min() == 0.5 and step.max() == 2.0
    bump = density_gauss_bump(grid, center=0.02)  # wraps across the seam
    assert bump.argmax() in (0, 1, 63)
    two = density_two_cluster(grid)
    assert np.all(two > 0)
    phi = phi_single_mode(grid, amp=2.0, k=1, offset=0.3)
    assert phi.max() == pytest.approx(2.3, abs=1e-2)


# ---- conservation ---------------------------------------------------------------
@pytest.mark.parametrize("mode", [SYM, ASYM])
@pytest.mark.parametrize("periodic", [True, False])
def test_weighted_mean_conserved(mode, periodic):
    grid = MacroGrid(96, periodic=periodic)
    state = MacroState(grid, density_gauss_bump(grid), phi_single_mode(grid, 1.0, 2, offset=0.2))
    c = 0.6
    q0 = conserved_quantity(state, mode)
    run_macro(state, c, mode, t_end=0.05)
    assert abs(conserved_quantity(state, mode) - q0) <= 1e-12 * abs(q0)


def test_constant_profile_is_a_fixed_point():
    grid = MacroGrid(64)
    state = MacroState(grid, density_two_cluster(grid), np.full(64, 0.7))
    for mode in (SYM, ASYM):
        step_macro(state, 0.5, mode)
        np.testing.assert_allclose(state.phi, 0.7, rtol=0, atol=1e-15)


def test_discrete_maximum_principle():
    rng = np.random.default_rng(12)
    grid = MacroGrid(128)
    phi0 = rng.random(128)
    state = MacroState(grid, density_gauss_bump(grid), phi0.copy())
    run_macro(state, 0.8, SYM, t_end=0.02)
    assert state.phi.min() >= phi0.min() - 1e-12
    assert state.phi.max() <= phi0.max() + 1e-12


# ---- single-mode decay rates ---------------------------------------------------------
@pytest.mark.parametrize("mode,c,rho0,k", [
    (SYM, C_S, 1.0, 1),
    (SYM, C_S, 2.0, 1),   # symmetric rate scales with rho0
    (SYM, C_S, 1.0, 3),
    (ASYM, C_A, 1.0, 1),
    (ASYM, C_A, 2.0, 2),  # non-symmetric rate does not
])
def test_single_mode_decay_rate(mode, c, rho0, k):
    state = _uniform_mode_state(rho0=rho0, k=k)
    rate_ref = c * (rho0 if mode is SYM else 1.0) * (2 * math.pi * k) ** 2
    t_end = 1.0 / rate_ref
    rows = run_macro(state, c, mode, t_end, trace_dt=t_end / 20)
    fit = linregress([r.t for r in rows], np.log([r.amplitude for r in rows]))
    assert -fit.slope == pytest.approx(rate_ref, rel=0.01)
    assert fit.rvalue ** 2 > 0.999999


@pytest.mark.parametrize("mode,c,t_star", [
    (SYM, C_S, 0.3299369391817644),    # ln(100) / (C_s * 4 pi^2)
    (ASYM, C_A, 0.15553376470623942),  # ln(100) / (C_a * 4 pi^2)
])
def test_consensus_time_closed_form(mode, c, t_star):
    state = _uniform_mode_state()
    rows = run_macro(state, c, mode, 1.3 * t_star, trace_dt=t_star / 300)
    assert consensus_time(rows, 0.01) == pytest.approx(t_star, rel=0.02)


def test_amplitude_factor_short_horizon():
    state = _uniform_mode_state()
    run_macro(state, C_S, SYM, t_end=0.01, trace_dt=0.01)
    assert amplitude(state, SYM) == pytest.approx(math.exp(-C_S * 4 * math.pi ** 2 * 0.01),
                                                  rel=1e-3)


# ---- entropy --------------------------------------------------------------------
@pytest.mark.parametrize("mode", [SYM, ASYM])
def test_entropy_non_increasing_and_rhs_negative(mode):
    grid = MacroGrid(128)
    state = MacroState(grid, density_gauss_bump(grid), phi_single_mode(grid, 1.0, 2))
    rows = run_macro(state, 0.5, mode, t_end=0.05)
    ents = [r.entropy for r in rows]
    assert all(b <= a + 1e-14 for a, b in zip(ents, ents[1:]))
    assert all(r.dissipation_rhs <= 0.0 for r in rows)


@pytest.mark.parametrize("mode", [SYM, ASYM])
def test_entropy_derivative_matches_dissipation_midpoint(mode):
    # trapezoid-in-time check of dS/dt = dissipation_rhs; halving dt must
    # shrink the defect by about four
    errs = []
    for dt in (2e-5, 1e-5):
        grid = MacroGrid(128)
        state = MacroState(grid, density_gauss_bump(grid), phi_single_mode(grid, 1.0, 2))
        c, worst = 0.5, 0.0
        s_prev, r_prev = entropy(state, mode), dissipation_rhs(state, c, mode)
        for _ in range(50):
            step_macro(state, c, mode, dt=dt)
            s_now, r_now = entropy(state, mode), dissipation_rhs(state, c, mode)
            worst = max(worst, abs((s_now - s_prev) / dt - 0.5 * (r_prev + r_now)))
            s_prev, r_prev = s_now, r_now
        errs.append(worst)
    assert errs[0] / errs[1] == pytest.approx(4.0, abs=1.0)
    assert errs[1] < 1e-3


# ---- stepping mechanics ------------------------------------------------------------
def test_auto_dt_respects_cfl_bound():
    grid = MacroGrid(64)
    state = MacroState(grid, density_two_cluster(grid), phi_single_mode(grid, 1.0, 1))
    bound = cfl_dt(state, 0.5, SYM)
    dt = step_macro(state, 0.5, SYM)
    assert dt == pytest.approx(bound)
    with pytest.raises(ParamError):
        step_macro(state, 0.0, SYM)


def test_run_lands_exactly_and_stop_fraction():
    state = _uniform_mode_state(j=64)
    rows = run_macro(state, C_S, SYM, t_end=0.01)
    assert state.t == pytest.approx(0.01, abs=1e-14)
    assert rows[-1].t == pytest.approx(state.t)
    state2 = _uniform_mode_state(j=64)
    rows2 = run_macro(state2, C_S, SYM, t_end=10.0, stop_fraction=0.5)
    assert state2.t < 10.0
    assert rows2[-1].amplitude <= 0.5 * rows2[0].amplitude


def test_consensus_time_edge_cases():
    state = _uniform_mode_state(j=64)
    rows = run_macro(state, C_S, SYM, t_end=0.01)
    assert consensus_time(rows, 0.01) == math.inf  # not reached yet
    with pytest.raises(ParamError):
        consensus_time([], 0.01)
    with pytest.raises(ParamError):
        consensus_time(rows, 1.5)


def test_weighted_mean_matches_conserved_ratio():
    grid = MacroGrid(64)
    state = MacroState(grid, density_gauss_bump(grid), phi_single_mode(grid, 1.0, 1, offset=0.4))
    for mode in (SYM, ASYM):
        w = state.rho if mode is SYM else state.rho ** 2
        ref = float(np.sum(w * state.phi) / np.sum(w))
        assert weighted_mean(state, mode) == pytest.approx(ref, rel=1e-14)
