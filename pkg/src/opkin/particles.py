"""Stochastic agent simulators for the opinion model.

Two schemes over the same ensemble state:

- collision Monte Carlo: per step each agent draws one uniform partner
  (j != i) and accepts the one-sided update with probability
  dt * K(|phi_i - phi_j|) [* W_eps(alpha_i - alpha_j)] / H_i,
  where H_i is 1 (symmetric rate) or the agent's mean kernel mass
  (non-symmetric rate).  Accepted agents move by
  phi_i += gamma (phi_j - phi_i) + eta with zero-mean noise of variance
  kappa*gamma.  The update convention is one-sided (only the drawing agent
  moves); a double-update convention would run twice as fast in time.
  All updates within a step use the pre-step state (synchronous kernel).

- mean-field SDE: Euler-Maruyama on
  dphi_i = gamma s1_i / H_i dt + sqrt(gamma kappa s0_i / H_i) dB_i,
  with s0, s1 the mean kernel sums; in non-symmetric mode H_i = s0_i and the
  noise amplitude collapses to sqrt(gamma kappa) exactly.

Replicas run in lockstep as a (R, N) batch, each replica on its own RNG
stream spawned deterministically from the master seed, so runs are
bit-reproducible.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from .kernels import kernel_sums, kernel_sums_batch, wrapped_spatial_kernel
from .params import ModelParams, NoiseLaw, ParamError, RateMode
from .analytic import interaction_kernel

__all__ = [
    "SchemeKind",
    "SimScheme",
    "ParticleEnsemble",
    "ParticleTraceRow",
    "FieldEstimate",
    "RejectionCapError",
    "interact",
    "ensemble_gaussian",
    "ensemble_from_arrays",
    "ensemble_from_density",
    "ensemble_spatial",
    "sample_from_density",
    "sample_positions",
    "collision_step",
    "sde_step",
    "estimate_fields",
    "run_particles",
]


class SchemeKind(enum.Enum):
    COLLISION_MC = "collision-mc"
    MEANFIELD_SDE = "meanfield-sde"

    @classmethod
    def parse(cls, text: str) -> "SchemeKind":
        key = text.strip().lower().replace("_", "-")
        for kind in cls:
            if kind.value == key:
                return kind
        raise ParamError(f"unknown scheme {text!r}")


@dataclass
class SimScheme:
    kind: SchemeKind = SchemeKind.COLLISION_MC
    dt: float | None = None          # None: automatic step size
    accept_target: float = 0.2       # MC: target max single-pair acceptance
    kernel_method: str = "auto"      # kernel-sum path: auto | exact | grid

    def __post_init__(self) -> None:
        if self.dt is not None and self.dt <= 0:
            raise ParamError("dt must be > 0")
        if not (0 < self.accept_target <= 1):
            raise ParamError("accept_target must lie in (0, 1]")


class RejectionCapError(RuntimeError):
    """A drawn pair had acceptance probability > 1; carries a dt hint."""

    def __init__(self, dt: float, dt_hint: float):
        super().__init__(
            f"single-pair acceptance exceeded 1 at dt={dt:.3e}; retry with dt <= {dt_hint:.3e}"
        )
        self.dt_hint = dt_hint


@dataclass
class ParticleEnsemble:
    """Replicated agent state: opinions (R, N), optional torus positions."""

    phi: np.ndarray
    alpha: np.ndarray | None = None
    t: float = 0.0
    seed: int = 0
    rejection_cap_warnings: int = 0
    _rngs: list = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        self.phi = np.atleast_2d(np.asarray(self.phi, dtype=float))
        if self.phi.shape[1] < 2:
            raise ParamError("need at least 2 agents")
        if self.alpha is not None:
            self.alpha = np.atleast_2d(np.asarray(self.alpha, dtype=float))
            if self.alpha.shape != self.phi.shape:
                raise ParamError("positions must match opinions in shape")
            if np.any((self.alpha < 0) | (self.alpha >= 1)):
                self.alpha = np.mod(self.alpha, 1.0)
        if not self._rngs:
            seqs = np.random.SeedSequence(self.seed).spawn(self.phi.shape[0])
            self._rngs = [np.random.Generator(np.random.PCG64(s)) for s in seqs]

    @property
    def replicas(self) -> int:
        return self.phi.shape[0]

    @property
    def n(self) -> int:
        return self.phi.shape[1]


@dataclass(frozen=True)
class ParticleTraceRow:
    t: float
    mean: float
    variance: float
    rep_means: np.ndarray
    rep_vars: np.ndarray


@dataclass(frozen=True)
class FieldEstimate:
    """Binned density and mean opinion over the torus."""

    edges: np.ndarray
    rho_hat: np.ndarray
    phi_hat: np.ndarray
    counts: np.ndarray
    empty_bins: np.ndarray


def interact(phi_i, phi_j, gamma: float, eta):
    """One-sided interaction: the first agent moves, the partner does not."""
    return phi_i + gamma * (np.asarray(phi_j) - np.asarray(phi_i)) + eta


# ---- construction --------------------------------------------------------------
def ensemble_from_arrays(phi, alpha=None, seed: int = 0) -> ParticleEnsemble:
    return ParticleEnsemble(phi=np.array(phi, dtype=float),
                            alpha=None if alpha is None else np.array(alpha, dtype=float),
                            seed=seed)


def _truncated_normal(rng, n: int, cut: float) -> np.ndarray:
    u = rng.random(n)
    lo = ndtr(-cut)
    return ndtri(lo + u * (1.0 - 2.0 * lo))


def ensemble_gaussian(n: int, sigma2: float, mu: float = 0.0, seed: int = 0,
                      replicas: int = 1, truncate: float | None = None) -> ParticleEnsemble:
    """Replicated iid Gaussian opinions, optionally truncated at +-cut sigmas.

    Truncation keeps the non-symmetric MC acceptance bound manageable; the
    matching kinetic initial density is the same truncated Gaussian.
    """
    ens = ParticleEnsemble(phi=np.zeros((replicas, n)), seed=seed)
    sd = math.sqrt(sigma2)
    for r, rng in enumerate(ens._rngs):
        z = rng.standard_normal(n) if truncate is None else _truncated_normal(rng, n, truncate)
        ens.phi[r] = mu + sd * z
    return ens


def sample_from_density(rng, n: int, nodes: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw from a piecewise-linear density on a uniform grid.

    Sampling the same node values a grid solver starts from removes any
    initial-law mismatch between particle and deterministic runs.
    """
    nodes = np.asarray(nodes, dtype=float)
    f = np.asarray(f, dtype=float)
    if nodes.shape != f.shape or nodes.ndim != 1 or nodes.size < 2:
        raise ParamError("nodes and density values must be matching 1d arrays")
    if np.any(f < 0) or f.sum() <= 0:
        raise ParamError("density must be nonnegative with positive mass")
    h = nodes[1] - nodes[0]
    cell_mass = 0.5 * h * (f[:-1] + f[1:])
    cdf = np.concatenate([[0.0], np.cumsum(cell_mass)])
    cdf /= cdf[-1]
    fn = f / np.sum(cell_mass)
    u = rng.random(n)
    k = np.clip(np.searchsorted(cdf, u, side="right") - 1, 0, nodes.size - 2)
    # within the cell the density is linear: solve a s^2 + b s = c for s in [0,1]
    a = 0.5 * h * (fn[k + 1] - fn[k])
    b = h * fn[k]
    c = u - cdf[k]
    disc = np.sqrt(np.maximum(b * b + 4.0 * a * c, 0.0))
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(np.abs(a) > 1e-300 * np.abs(b), (disc - b) / (2.0 * a), c / b)
    s = np.clip(np.nan_to_num(s), 0.0, 1.0)
    return nodes[k] + s * h


def ensemble_from_density(n: int, nodes: np.ndarray, f: np.ndarray, seed: int = 0,
                          replicas: int = 1) -> ParticleEnsemble:
    """Replicated iid opinions drawn from a piecewise-linear grid density."""
    ens = ParticleEnsemble(phi=np.zeros((replicas, n)), seed=seed)
    for r, rng in enumerate(ens._rngs):
        ens.phi[r] = sample_from_density(rng, n, nodes, f)
    return ens


def sample_positions(rng, n: int, rho_cells: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw of torus positions from a piecewise-constant density."""
    rho = np.asarray(rho_cells, dtype=float)
    if np.any(rho < 0) or rho.sum() <= 0:
        raise ParamError("density must be nonnegative with positive mass")
    j = rho.shape[0]
    cdf = np.concatenate([[0.0], np.cumsum(rho)]) / rho.sum()
    u = rng.random(n)
    cell = np.searchsorted(cdf, u, side="right") - 1
    cell = np.clip(cell, 0, j - 1)
    inner = (u - cdf[cell]) / (cdf[cell + 1] - cdf[cell])
    return (cell + inner) / j


def ensemble_spatial(n: int, phi_profile, local_sigma2: float, seed: int = 0,
                     replicas: int = 1, rho_cells: np.ndarray | None = None) -> ParticleEnsemble:
    """Spatial ensemble: positions ~ rho on the torus, opinions locally
    Gaussian around phi_profile(alpha)."""
    ens = ParticleEnsemble(phi=np.zeros((replicas, n)), alpha=np.zeros((replicas, n)), seed=seed)
    sd = math.sqrt(local_sigma2)
    for r, rng in enumerate(ens._rngs):
        a = rng.random(n) if rho_cells is None else sample_positions(rng, n, rho_cells)
        ens.alpha[r] = a
        ens.phi[r] = phi_profile(a) + sd * rng.standard_normal(n)
    return ens


# ---- noise ----------------------------------------------------------------------
def _noise(rng, n: int, p: ModelParams) -> np.ndarray:
    s2 = p.sigma2
    if s2 == 0.0:
        return np.zeros(n)
    if p.noise_law is NoiseLaw.GAUSSIAN:
        return math.sqrt(s2) * rng.standard_normal(n)
    half = math.sqrt(3.0 * s2)
    return half * (2.0 * rng.random(n) - 1.0)


# ---- kernel-sum plumbing ----------------------------------------------------------
def _batch_sums(ens: ParticleEnsemble, p: ModelParams, scheme: SimScheme,
                want_s1: bool = True):
    spatial = ens.alpha is not None
    return kernel_sums_batch(ens.phi, p.zeta, alpha=ens.alpha,
                             spatial_kernel=p.kernel if spatial else None,
                             eps=p.epsilon if spatial else None,
                             method=scheme.kernel_method, want_s1=want_s1)


def _pair_weight_max(ens: ParticleEnsemble, p: ModelParams) -> float:
    """Upper bound on the single-pair kernel weight."""
    if ens.alpha is None:
        return 1.0
    w = wrapped_spatial_kernel(p.kernel, p.epsilon)
    return float(w(np.array([0.0]))[0])


# ---- collision Monte Carlo ---------------------------------------------------------
def collision_step(ens: ParticleEnsemble, p: ModelParams, scheme: SimScheme,
                   max_dt: float = math.inf) -> float:
    """One synchronous MC sweep over all replicas; returns the dt taken."""
    n = ens.n
    h_all = None
    if p.rate_mode is RateMode.NONSYMMETRIC:
        h_all = np.maximum(_batch_sums(ens, p, scheme, want_s1=False).s0, 0.5 / n)
    if scheme.dt is not None:
        dt = min(scheme.dt, max_dt)
    else:
        bound = _pair_weight_max(ens, p)
        if h_all is not None:
            bound /= float(h_all.min())
        dt = min(scheme.accept_target / bound, max_dt)

    w_eps = wrapped_spatial_kernel(p.kernel, p.epsilon) if ens.alpha is not None else None
    new_phi = np.empty_like(ens.phi)
    for r, rng in enumerate(ens._rngs):
        phi = ens.phi[r]
        j = (np.arange(n) + rng.integers(1, n, size=n)) % n
        u = rng.random(n)
        eta = _noise(rng, n, p)
        weight = interaction_kernel(phi - phi[j], p.zeta)
        if w_eps is not None:
            weight = weight * w_eps(ens.alpha[r] - ens.alpha[r][j])
        if h_all is not None:
            weight = weight / h_all[r]
        p_acc = dt * weight
        pmax = float(p_acc.max())
        if pmax > 1.0:
            ens.rejection_cap_warnings += 1
            raise RejectionCapError(dt, dt_hint=dt / pmax)
        acc = u < p_acc
        upd = interact(phi, phi[j], p.gamma, eta)
        new_phi[r] = np.where(acc, upd, phi)
    ens.phi = new_phi
    ens.t += dt
    return dt


# ---- mean-field SDE ------------------------------------------------------------------
def sde_step(ens: ParticleEnsemble, p: ModelParams, scheme: SimScheme,
             max_dt: float = math.inf) -> float:
    """One Euler-Maruyama step over all replicas; returns the dt taken."""
    if scheme.dt is not None:
        dt = min(scheme.dt, max_dt)
    else:
        dt = min(0.02 / p.gamma, max_dt)
    sqdt = math.sqrt(dt)
    gk = p.gamma * p.kappa
    sums = _batch_sums(ens, p, scheme)
    s0 = np.maximum(sums.s0, 0.5 / ens.n)
    for r, rng in enumerate(ens._rngs):
        if p.rate_mode is RateMode.SYMMETRIC:
            drift = p.gamma * sums.s1[r]
            diff = np.sqrt(gk * s0[r])
        else:
            drift = p.gamma * sums.s1[r] / s0[r]
            diff = math.sqrt(gk)
        ens.phi[r] = ens.phi[r] + dt * drift + sqdt * diff * rng.standard_normal(ens.n)
    ens.t += dt
    return dt


# ---- observables ----------------------------------------------------------------------
def estimate_fields(phi: np.ndarray, alpha: np.ndarray, bins: int = 32) -> FieldEstimate:
    """Histogram density (mean 1 on the unit torus) and per-bin mean opinion.

    Empty bins are flagged and carry NaN mean opinion.
    """
    phi = np.asarray(phi, dtype=float).ravel()
    alpha = np.asarray(alpha, dtype=float).ravel()
    if phi.shape != alpha.shape:
        raise ParamError("opinions and positions must align")
    edges = np.linspace(0.0, 1.0, bins + 1)
    idx = np.minimum((alpha * bins).astype(np.int64), bins - 1)
    counts = np.bincount(idx, minlength=bins).astype(float)
    sums = np.bincount(idx, weights=phi, minlength=bins)
    empty = counts == 0
    with np.errstate(invalid="ignore", divide="ignore"):
        phi_hat = np.where(empty, np.nan, sums / np.maximum(counts, 1.0))
    rho_hat = counts * bins / phi.shape[0]
    return FieldEstimate(edges=edges, rho_hat=rho_hat, phi_hat=phi_hat,
                         counts=counts, empty_bins=empty)


def _particle_row(ens: ParticleEnsemble) -> ParticleTraceRow:
    rep_means = ens.phi.mean(axis=1)
    rep_vars = ens.phi.var(axis=1, ddof=1)
    return ParticleTraceRow(t=ens.t, mean=float(rep_means.mean()),
                            variance=float(rep_vars.mean()),
                            rep_means=rep_means, rep_vars=rep_vars)


def run_particles(ens: ParticleEnsemble, p: ModelParams, scheme: SimScheme,
                  t_end: float, trace_dt: float | None = None) -> list[ParticleTraceRow]:
    """Advance the ensemble to t_end, tracing at exact multiples of trace_dt."""
    if trace_dt is None:
        trace_dt = max((t_end - ens.t) / 50.0, 1e-12)
    stepper = collision_step if scheme.kind is SchemeKind.COLLISION_MC else sde_step
    rows = [_particle_row(ens)]
    next_trace = ens.t + trace_dt
    while ens.t < t_end - 1e-12:
        stepper(ens, p, scheme, max_dt=min(next_trace, t_end) - ens.t)
        if ens.t >= next_trace - 1e-12:
            rows.append(_particle_row(ens))
            next_trace += trace_dt
    if rows[-1].t < ens.t - 1e-12:
        rows.append(_particle_row(ens))
    return rows
