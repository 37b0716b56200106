"""Closed-form equilibrium and transport quantities.

Everything in this module is exact arithmetic on the model parameters; no
simulation.  Two independent algebraic routes exist for the mean-opinion
diffusion coefficients (the equilibrium-variance route and the rewritten
kappa-form) and both are exposed so they can be cross-checked.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np
from scipy import integrate

from .params import KernelShape, ModelParams, ParamError, RateMode, SpatialKernelSpec

__all__ = [
    "SupercriticalError",
    "critical_kappa",
    "equilibrium_sigma2",
    "diffusion_coefficient",
    "diffusion_coefficient_normalized",
    "crossover_density",
    "gaussian_pdf",
    "interaction_kernel",
    "gaussian_convolution_closed_form",
    "gibbs_image_variance",
    "spatial_diffusivity",
    "AnalyticSummary",
    "analytic_summary",
]


class SupercriticalError(ParamError):
    """No localized equilibrium exists for this (zeta, kappa, mode)."""


def critical_kappa(zeta: float, mode: RateMode) -> float:
    """Largest noise ratio admitting a localized (consensus-like) equilibrium.

    zeta^2 for the symmetric rate, 2*zeta^2 for the non-symmetric rate.
    """
    if zeta <= 0:
        raise ParamError("zeta must be > 0")
    return zeta ** 2 if mode is RateMode.SYMMETRIC else 2.0 * zeta ** 2


def equilibrium_sigma2(zeta: float, kappa: float, mode: RateMode) -> float:
    """Variance of the Gaussian steady profile, if it exists.

    Symmetric:      zeta^2 / (2 (zeta^2/kappa - 1))
    Non-symmetric:  zeta^2 / (2 zeta^2/kappa - 1)

    kappa = 0 collapses to a point mass (variance 0).  At or above the
    critical kappa the variance diverges and SupercriticalError is raised.
    """
    if zeta <= 0:
        raise ParamError("zeta must be > 0")
    if kappa < 0:
        raise ParamError("kappa must be >= 0")
    if kappa == 0.0:
        return 0.0
    if kappa >= critical_kappa(zeta, mode):
        raise SupercriticalError(
            f"supercritical kappa: {kappa} >= {critical_kappa(zeta, mode)} "
            f"({mode.value} mode has no localized equilibrium)"
        )
    z2 = zeta ** 2
    if mode is RateMode.SYMMETRIC:
        return z2 / (2.0 * (z2 / kappa - 1.0))
    return z2 / (2.0 * z2 / kappa - 1.0)


def diffusion_coefficient(
    zeta: float, kappa: float, mode: RateMode, gamma_d: float = 1.0
) -> float:
    """Mean-opinion diffusion coefficient via the equilibrium variance.

    Symmetric:      gamma_d * zeta^3 / (2 sigma_s^2 + zeta^2)^(3/2)
    Non-symmetric:  gamma_d * zeta^2 / (sigma_a^2 + zeta^2)

    ``gamma_d`` is the product gamma*D of the step fraction and the spatial
    kernel diffusivity; pass 1.0 for the normalized coefficient.
    """
    s2 = equilibrium_sigma2(zeta, kappa, mode)
    z2 = zeta ** 2
    if mode is RateMode.SYMMETRIC:
        return gamma_d * zeta ** 3 / (2.0 * s2 + z2) ** 1.5
    return gamma_d * z2 / (s2 + z2)


def diffusion_coefficient_normalized(zeta: float, kappa: float, mode: RateMode) -> float:
    """Same coefficient over gamma*D, written directly in (zeta, kappa).

    Symmetric:      (sqrt(zeta^2 - kappa) / zeta)^3
    Non-symmetric:  (2 zeta^2 - kappa) / (2 zeta^2)

    Independent algebraic route from :func:`diffusion_coefficient`; the two
    must agree to 1e-12 relative on the subcritical range.
    """
    if zeta <= 0:
        raise ParamError("zeta must be > 0")
    if kappa < 0:
        raise ParamError("kappa must be >= 0")
    if kappa >= critical_kappa(zeta, mode):
        raise SupercriticalError(f"supercritical kappa: {kappa}")
    z2 = zeta ** 2
    if mode is RateMode.SYMMETRIC:
        return (math.sqrt(z2 - kappa) / zeta) ** 3
    return (2.0 * z2 - kappa) / (2.0 * z2)


def crossover_density(zeta: float, kappa: float) -> float:
    """Uniform density at which both rate modes equilibrate equally fast.

    rho* = C_a / C_s; the gamma*D prefactor cancels.  Below rho* the
    non-symmetric dynamics reaches consensus faster, above it the symmetric
    one does.
    """
    cs = diffusion_coefficient(zeta, kappa, RateMode.SYMMETRIC)
    ca = diffusion_coefficient(zeta, kappa, RateMode.NONSYMMETRIC)
    return ca / cs


def gaussian_pdf(phi, sigma2: float, mu: float = 0.0):
    """Density of N(mu, sigma2) evaluated at phi."""
    phi = np.asarray(phi, dtype=float)
    if sigma2 <= 0:
        raise ParamError("sigma2 must be > 0 for a density")
    return np.exp(-((phi - mu) ** 2) / (2.0 * sigma2)) / math.sqrt(2.0 * math.pi * sigma2)


def interaction_kernel(u, zeta: float):
    """Unnormalized opinion-distance kernel exp(-u^2 / (2 zeta^2)), max 1."""
    u = np.asarray(u, dtype=float)
    return np.exp(-(u ** 2) / (2.0 * zeta ** 2))


def gaussian_convolution_closed_form(phi, sigma2: float, mu: float, zeta: float):
    """(kernel * Gaussian)(phi) in closed form.

    Convolving the interaction kernel with N(mu, sigma2) gives
    sqrt(2 pi) * zeta * N(mu, sigma2 + zeta^2) evaluated at phi.  sigma2 = 0
    degenerates to the kernel itself shifted to mu.
    """
    if sigma2 < 0:
        raise ParamError("sigma2 must be >= 0")
    phi = np.asarray(phi, dtype=float)
    if sigma2 == 0.0:
        return interaction_kernel(phi - mu, zeta)
    s2 = sigma2 + zeta ** 2
    return math.sqrt(2.0 * math.pi) * zeta * gaussian_pdf(phi, s2, mu)


def gibbs_image_variance(sigma2: float, zeta: float, kappa: float) -> float:
    """Variance of the Gibbs image of a Gaussian with variance sigma2.

    The Gibbs map sends N(mu, s2) to a Gaussian of variance
    (s2 + zeta^2) * kappa / (2 zeta^2); its fixed point is the
    non-symmetric equilibrium variance.
    """
    if kappa <= 0:
        raise ParamError("Gibbs image needs kappa > 0")
    return (sigma2 + zeta ** 2) * kappa / (2.0 * zeta ** 2)


def spatial_diffusivity(kernel: SpatialKernelSpec, rel_tol: float = 1e-8) -> float:
    """D = (1/2n) * integral of F(|a|) |a|^2 over R^n by adaptive quadrature.

    Also verifies the kernel's unit mass to 1e-10 as a guard against
    mis-normalized profiles.
    """
    n = kernel.dimension
    if kernel.shape is KernelShape.INDICATOR:
        hi = 1.0
    else:
        hi = np.inf
    if n == 1:
        mass = 2.0 * integrate.quad(kernel.profile, 0.0, hi, epsabs=1e-13, epsrel=rel_tol)[0]
        second = 2.0 * integrate.quad(
            lambda r: kernel.profile(r) * r ** 2, 0.0, hi, epsabs=1e-13, epsrel=rel_tol
        )[0]
    else:
        two_pi = 2.0 * math.pi
        mass = integrate.quad(
            lambda r: kernel.profile(r) * two_pi * r, 0.0, hi, epsabs=1e-13, epsrel=rel_tol
        )[0]
        second = integrate.quad(
            lambda r: kernel.profile(r) * r ** 2 * two_pi * r, 0.0, hi, epsabs=1e-13, epsrel=rel_tol
        )[0]
    if abs(mass - 1.0) > 1e-10:
        raise ParamError(f"spatial kernel mass {mass} deviates from 1 beyond 1e-10")
    return second / (2.0 * n)


@dataclass(frozen=True)
class AnalyticSummary:
    """Headline closed-form numbers for one parameter set."""

    mode: str
    zeta: float
    kappa: float
    gamma: float
    spatial_d: float
    sigma2: float | None
    kappa_crit: float
    c_norm: float | None
    c_diff: float | None
    rho_star: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def analytic_summary(p: ModelParams) -> AnalyticSummary:
    """Evaluate every closed form for one parameter set.

    Supercritical entries come back as None rather than raising, so the
    summary stays usable across a threshold scan.
    """
    d = spatial_diffusivity(p.kernel)
    kc = critical_kappa(p.zeta, p.rate_mode)
    try:
        s2 = equilibrium_sigma2(p.zeta, p.kappa, p.rate_mode)
        c_norm = diffusion_coefficient_normalized(p.zeta, p.kappa, p.rate_mode)
        c_diff = diffusion_coefficient(p.zeta, p.kappa, p.rate_mode, gamma_d=p.gamma * d)
    except SupercriticalError:
        s2 = c_norm = c_diff = None
    try:
        rho = crossover_density(p.zeta, p.kappa)
    except SupercriticalError:
        rho = None
    return AnalyticSummary(
        mode=p.rate_mode.value,
        zeta=p.zeta,
        kappa=p.kappa,
        gamma=p.gamma,
        spatial_d=d,
        sigma2=s2,
        kappa_crit=kc,
        c_norm=c_norm,
        c_diff=c_diff,
        rho_star=rho,
    )
