"""Finite-volume solver for the space-homogeneous opinion Fokker-Planck equation.

The density f(phi, t) evolves under

    df/dt = gamma * d/dphi { A_f f + (kappa/2) d/dphi (B_f f) }

with A_f and B_f built from the kernel-smoothed density: in symmetric mode
A_f = (u K)*f and B_f = K*f; in non-symmetric mode the local kernel mass is
divided out, A_f = (u K)*f / (K*f) and B_f = 1 (K is the opinion kernel at
scale zeta, u K denotes the first-moment kernel u -> u K(u)).

Discretization: vertex-centered finite volume on a uniform grid with half
cells at the domain ends and zero flux through the boundary.  The trapezoid
mass is conserved exactly by construction (telescoping face sums); in
symmetric mode the trapezoid double sum behind the drift is antisymmetric
under index swap, so the mean is conserved to roundoff as well.
Time integration is Heun's method (explicit RK2) under a diffusive CFL bound.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .analytic import (
    SupercriticalError,
    critical_kappa,
    equilibrium_sigma2,
    gaussian_convolution_closed_form,
    gaussian_pdf,
    interaction_kernel,
)
from .params import ModelParams, ParamError, RateMode

__all__ = [
    "KineticGrid",
    "KineticState",
    "ConvolvedFields",
    "GibbsData",
    "KineticOperator",
    "KineticTraceRow",
    "NumericalError",
    "default_half_width",
    "make_grid",
    "init_gaussian",
    "init_bimodal",
    "init_truncated_gaussian",
    "convolve",
    "moments",
    "gaussian_fit_l1",
    "run_to_time",
]

DENSITY_FLOOR = 1e-300  # log-space floor for kernel-smoothed densities
SATURATION_MASS = 1e-8  # boundary mass fraction that flags supercritical spread
CFL_SAFETY = 0.4


class NumericalError(RuntimeError):
    """Raised when a run loses positivity/finiteness beyond repair."""


@dataclass(frozen=True)
class KineticGrid:
    """Uniform node grid with M cells (M+1 nodes) on [lo, hi]."""

    lo: float
    hi: float
    m: int

    def __post_init__(self) -> None:
        if self.m < 8:
            raise ParamError("need at least 8 cells")
        if not self.hi > self.lo:
            raise ParamError("empty opinion interval")

    @property
    def dphi(self) -> float:
        return (self.hi - self.lo) / self.m

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.m + 1)

    @property
    def trapz_weights(self) -> np.ndarray:
        w = np.full(self.m + 1, self.dphi)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w


def default_half_width(p: ModelParams, sigma0: float = 0.0) -> float:
    """Half-width 8 * max(equilibrium widths, zeta, initial width).

    Supercritical modes contribute nothing (their equilibrium width does not
    exist); such runs rely on the saturation stop instead.
    """
    widths = [p.zeta, math.sqrt(sigma0) if sigma0 > 0 else 0.0]
    for mode in RateMode:
        try:
            widths.append(math.sqrt(equilibrium_sigma2(p.zeta, p.kappa, mode)))
        except SupercriticalError:
            pass
    return 8.0 * max(widths)


def make_grid(p: ModelParams, m: int = 512, center: float = 0.0, sigma0: float = 0.0,
              half_width: float | None = None) -> KineticGrid:
    half = default_half_width(p, sigma0) if half_width is None else half_width
    return KineticGrid(center - half, center + half, m)


@dataclass
class KineticState:
    grid: KineticGrid
    f: np.ndarray
    t: float = 0.0
    clip_events: int = 0
    saturated: bool = False

    def __post_init__(self) -> None:
        self.f = np.asarray(self.f, dtype=float)
        if self.f.shape != (self.grid.m + 1,):
            raise ParamError("density shape must match the node count")
        if np.any(self.f < 0):
            neg = self.f < 0
            warnings.warn(f"clipped {int(neg.sum())} negative density nodes")
            self.f = np.where(neg, 0.0, self.f)
            self.clip_events += int(neg.sum())

    def copy(self) -> "KineticState":
        return KineticState(self.grid, self.f.copy(), self.t, self.clip_events, self.saturated)


def init_gaussian(grid: KineticGrid, sigma2: float, mu: float = 0.0) -> KineticState:
    return KineticState(grid, gaussian_pdf(grid.nodes, sigma2, mu))


def init_truncated_gaussian(grid: KineticGrid, sigma2: float, mu: float = 0.0,
                            cut: float = 3.0) -> KineticState:
    """Gaussian density hard-truncated at mu +- cut*sigma, renormalized to mass 1.

    Matches the particle constructors that draw from the same truncated law.
    """
    if sigma2 <= 0 or cut <= 0:
        raise ParamError("sigma2 and cut must be positive")
    x = grid.nodes
    f = gaussian_pdf(x, sigma2, mu)
    f = np.where(np.abs(x - mu) <= cut * math.sqrt(sigma2), f, 0.0)
    mass = float(np.sum(grid.trapz_weights * f))
    if mass <= 0:
        raise ParamError("truncation window misses the grid")
    return KineticState(grid, f / mass)


def init_bimodal(grid: KineticGrid, separation: float = 1.0, width: float = 0.6,
                 weight: float = 0.5, center: float = 0.0) -> KineticState:
    """Two-bump mixture: weight at center-separation, rest at center+separation."""
    if width <= 0:
        raise ParamError(f"bump width must be positive, got {width}")
    if not 0.0 <= weight <= 1.0:
        raise ParamError(f"mixture weight must lie in [0, 1], got {weight}")
    x = grid.nodes
    f = weight * gaussian_pdf(x, width ** 2, center - separation) \
        + (1.0 - weight) * gaussian_pdf(x, width ** 2, center + separation)
    return KineticState(grid, f)


@dataclass(frozen=True)
class ConvolvedFields:
    """Kernel-smoothed fields entering the flux: drift a, diffusion factor b."""

    g_conv: np.ndarray       # (K * f) at the nodes
    pg_conv: np.ndarray      # ((u K) * f) at the nodes
    a: np.ndarray            # drift field
    b: np.ndarray            # diffusion multiplier
    floored_mass: float      # f-mass sitting on nodes where K*f underflowed


@dataclass(frozen=True)
class GibbsData:
    """Local Gibbs measure of a density: potential, normalized density, norm."""

    potential: np.ndarray
    density: np.ndarray
    log_norm: float


@dataclass(frozen=True)
class KineticTraceRow:
    t: float
    mass: float
    mean: float
    variance: float
    residual: float


class KineticOperator:
    """Precomputed kernel quadrature for one (grid, params) pair.

    The plain and first-moment convolutions are trapezoid sums; the direct
    path materializes the two (M+1)^2 kernel matrices once and applies them
    as matvecs.  ``method='fft'`` evaluates the same discrete sums with FFTs
    and must agree with the direct path to 1e-10.
    """

    def __init__(self, grid: KineticGrid, p: ModelParams, method: str = "direct"):
        if method not in ("direct", "fft"):
            raise ParamError(f"unknown convolution method {method!r}")
        self.grid = grid
        self.p = p
        self.method = method
        x = grid.nodes
        w = grid.trapz_weights
        self._w = w
        diff = x[:, None] - x[None, :]
        if method == "direct":
            self._g_mat = interaction_kernel(diff, p.zeta) * w[None, :]
            self._ug_mat = diff * interaction_kernel(diff, p.zeta) * w[None, :]
        else:
            offs = np.arange(-grid.m, grid.m + 1) * grid.dphi
            self._g_taps = interaction_kernel(offs, p.zeta)
            self._ug_taps = offs * interaction_kernel(offs, p.zeta)

    def convolve_plain(self, f: np.ndarray) -> np.ndarray:
        if self.method == "direct":
            return self._g_mat @ f
        wf = self._w * f
        return np.convolve(wf, self._g_taps)[self.grid.m:2 * self.grid.m + 1]

    def convolve_first_moment(self, f: np.ndarray) -> np.ndarray:
        if self.method == "direct":
            return self._ug_mat @ f
        wf = self._w * f
        # taps are indexed by (i - j); np.convolve realizes sum_j taps[i-j] wf[j]
        return np.convolve(wf, self._ug_taps)[self.grid.m:2 * self.grid.m + 1]

    def fields(self, f: np.ndarray) -> ConvolvedFields:
        g = self.convolve_plain(f)
        pg = self.convolve_first_moment(f)
        if self.p.rate_mode is RateMode.SYMMETRIC:
            return ConvolvedFields(g, pg, a=pg, b=g, floored_mass=0.0)
        floored = g < DENSITY_FLOOR
        floored_mass = 0.0
        if np.any(floored):
            floored_mass = float(np.sum(self._w[floored] * f[floored]))
            if floored_mass > 1e-6:
                warnings.warn(
                    f"kernel-mass underflow under {floored_mass:.3e} of density; "
                    "normalized drift unreliable there"
                )
        a = pg / np.maximum(g, DENSITY_FLOOR)
        return ConvolvedFields(g, pg, a=a, b=np.ones_like(g), floored_mass=floored_mass)

    # ---- flux-form operator -------------------------------------------------
    def _divergence(self, af: np.ndarray, bf: np.ndarray) -> np.ndarray:
        """d/dphi of [af + (kappa/2) d/dphi(bf)] with zero-flux ends."""
        p, dphi = self.p, self.grid.dphi
        face = 0.5 * (af[1:] + af[:-1]) + (0.5 * p.kappa) * np.diff(bf) / dphi
        face *= p.gamma
        out = np.empty_like(af)
        out[1:-1] = np.diff(face) / dphi
        out[0] = face[0] / (0.5 * dphi)
        out[-1] = -face[-1] / (0.5 * dphi)
        return out

    def apply_q(self, f: np.ndarray) -> np.ndarray:
        """Collision operator in conservative form; trapezoid integral is 0."""
        fl = self.fields(f)
        return self._divergence(fl.a * f, fl.b * f)

    def gibbs(self, f: np.ndarray) -> GibbsData:
        """Gibbs measure (K*f)^(2 zeta^2/kappa), normalized in log space."""
        if self.p.kappa <= 0:
            raise ParamError("Gibbs map needs kappa > 0")
        g = self.convolve_plain(f)
        logg = np.log(np.maximum(g, DENSITY_FLOOR))
        v = -self.p.zeta ** 2 * logg
        v = v - v.min()
        expo = (2.0 * self.p.zeta ** 2 / self.p.kappa) * logg
        expo_max = expo.max()
        m = np.exp(expo - expo_max)
        z = float(np.sum(self._w * m))
        m /= z
        log_norm = math.log(z) + expo_max
        return GibbsData(potential=v, density=m, log_norm=log_norm)

    def equilibrium_residual(self, f: np.ndarray) -> float:
        """L1 defect of the steady-state characterization for the active mode."""
        if self.p.kappa <= 0:
            return math.nan
        gd = self.gibbs(f)
        if self.p.rate_mode is RateMode.SYMMETRIC:
            g = self.convolve_plain(f)
            bf = float(np.sum(self._w * g * f))
            r = g * f - bf * gd.density
        else:
            r = f - gd.density
        return float(np.sum(self._w * np.abs(r)))

    def apply_linearized_q(self, g_pert: np.ndarray, base_sigma2: float,
                           base_mu: float = 0.0) -> np.ndarray:
        """Linearization of the non-symmetric operator around N(mu, sigma2).

        Symmetric mode is rejected: the linearized form implemented here is
        specific to the normalized rate.
        """
        if self.p.rate_mode is not RateMode.NONSYMMETRIC:
            raise ParamError("linearized operator is defined for the non-symmetric rate")
        x = self.grid.nodes
        z, kappa = self.p.zeta, self.p.kappa
        base = gaussian_pdf(x, base_sigma2, base_mu)
        g_base = gaussian_convolution_closed_form(x, base_sigma2, base_mu, z)
        s2 = base_sigma2 + z ** 2
        pg_base = math.sqrt(2.0 * math.pi) * z ** 3 * (x - base_mu) / s2 \
            * gaussian_pdf(x, s2, base_mu)
        g_g = self.convolve_plain(g_pert)
        pg_g = self.convolve_first_moment(g_pert)
        bracket = (pg_g * base + pg_base * g_pert - pg_base * g_g * base / g_base) / g_base
        # reuse the conservative divergence with the gradient part carried by bf
        face = 0.5 * (bracket[1:] + bracket[:-1]) + (0.5 * kappa) * np.diff(g_pert) / self.grid.dphi
        face *= self.p.gamma
        out = np.empty_like(bracket)
        out[1:-1] = np.diff(face) / self.grid.dphi
        out[0] = face[0] / (0.5 * self.grid.dphi)
        out[-1] = -face[-1] / (0.5 * self.grid.dphi)
        return out

    # ---- time stepping --------------------------------------------------------
    def cfl_dt(self, fields: ConvolvedFields) -> float:
        dphi = self.grid.dphi
        p = self.p
        b_max = float(fields.b.max())
        a_max = float(np.abs(fields.a).max())
        dt = math.inf
        if p.kappa > 0 and b_max > 0:
            dt = CFL_SAFETY * dphi ** 2 / (p.gamma * p.kappa * b_max)
        if a_max > 0:
            dt = min(dt, CFL_SAFETY * dphi / (p.gamma * a_max))
        if not math.isfinite(dt):
            raise NumericalError("degenerate fields: no admissible time step")
        return dt

    def step(self, state: KineticState, dt: float | None = None,
             max_dt: float = math.inf) -> float:
        """One Heun step; returns the dt actually taken.

        Without an explicit dt the diffusive CFL bound (safety 0.4) computed
        from the current fields is used, capped by max_dt.
        """
        f = state.f
        fl = self.fields(f)
        if dt is None:
            dt = min(self.cfl_dt(fl), max_dt)
        k1 = self._divergence(fl.a * f, fl.b * f)
        f1 = f + dt * k1
        neg1 = f1 < 0
        if np.any(neg1):
            state.clip_events += int(neg1.sum())
            f1 = np.where(neg1, 0.0, f1)
        fl1 = self.fields(f1)
        k2 = self._divergence(fl1.a * f1, fl1.b * f1)
        f_new = f + 0.5 * dt * (k1 + k2)
        neg = f_new < 0
        if np.any(neg):
            state.clip_events += int(neg.sum())
            f_new = np.where(neg, 0.0, f_new)
        if not np.all(np.isfinite(f_new)):
            raise NumericalError("kinetic run lost finiteness (reduce dt or enlarge domain)")
        state.f = f_new
        state.t += dt
        return dt

    def boundary_mass_fraction(self, state: KineticState) -> float:
        w = self.grid.trapz_weights
        total = float(np.sum(w * state.f))
        edge = float(w[0] * state.f[0] + w[-1] * state.f[-1])
        return edge / total if total > 0 else math.inf


def convolve(grid: KineticGrid, f: np.ndarray, p: ModelParams, kind: str = "plain",
             method: str = "direct") -> np.ndarray:
    """One-off trapezoid convolution with the opinion kernel.

    kind 'plain' gives K*f, 'first_moment' gives (u K)*f.  Hot loops should
    hold a :class:`KineticOperator` instead to reuse the kernel matrices.
    """
    op = KineticOperator(grid, p, method=method)
    if kind == "plain":
        return op.convolve_plain(np.asarray(f, dtype=float))
    if kind == "first_moment":
        return op.convolve_first_moment(np.asarray(f, dtype=float))
    raise ParamError(f"unknown convolution kind {kind!r}")


def moments(state: KineticState) -> tuple[float, float, float]:
    """(mass, mean, variance) by trapezoid quadrature."""
    w = state.grid.trapz_weights
    x = state.grid.nodes
    mass = float(np.sum(w * state.f))
    if mass <= 0:
        raise NumericalError("vanishing mass")
    mean = float(np.sum(w * x * state.f)) / mass
    var = float(np.sum(w * (x - mean) ** 2 * state.f)) / mass
    return mass, mean, var


def gaussian_fit_l1(state: KineticState) -> float:
    """L1 distance between f and the Gaussian matching its first two moments."""
    mass, mean, var = moments(state)
    fit = mass * gaussian_pdf(state.grid.nodes, var, mean)
    return float(np.sum(state.grid.trapz_weights * np.abs(state.f - fit)))


def run_to_time(state: KineticState, op: KineticOperator, t_end: float,
                trace_dt: float | None = None) -> list[KineticTraceRow]:
    """Advance the state to t_end, appending one trace row per trace interval.

    The run stops early (state.saturated set) once the boundary half-cells
    carry more than the saturation fraction of the mass, which is the
    signature of a supercritical (spreading) run outgrowing the domain.
    """
    if trace_dt is None:
        trace_dt = max((t_end - state.t) / 200.0, 1e-12)
    rows = [_trace_row(state, op)]
    next_trace = state.t + trace_dt
    while state.t < t_end - 1e-12:
        op.step(state, max_dt=t_end - state.t)
        if state.t >= next_trace - 1e-12:
            rows.append(_trace_row(state, op))
            next_trace += trace_dt
            if op.boundary_mass_fraction(state) > SATURATION_MASS:
                state.saturated = True
                break
    if rows[-1].t < state.t - 1e-12:
        rows.append(_trace_row(state, op))
    return rows


def _trace_row(state: KineticState, op: KineticOperator) -> KineticTraceRow:
    mass, mean, var = moments(state)
    res = op.equilibrium_residual(state.f) if state.grid.m <= 4096 else math.nan
    return KineticTraceRow(t=state.t, mass=mass, mean=mean, variance=var, residual=res)
