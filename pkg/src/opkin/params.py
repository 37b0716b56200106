"""Model parameters and validation for the kinetic opinion model.

Agents carry a scalar opinion and interact in binary events: the updating
agent moves a fraction ``gamma`` toward its partner and picks up zero-mean
noise of variance ``sigma2 = kappa * gamma``.  Interaction propensity decays
with opinion distance through a Gaussian-shaped kernel of width ``zeta``;
the propensity is either used as-is (symmetric mode) or normalized by each
agent's local kernel mass (non-symmetric mode).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

__all__ = [
    "RateMode",
    "NoiseLaw",
    "KernelShape",
    "NoiseSpec",
    "SpatialKernelSpec",
    "ModelParams",
    "ParamError",
    "validate_params",
]


class ParamError(ValueError):
    """Raised when a parameter set violates the model's admissible ranges."""


class RateMode(enum.Enum):
    SYMMETRIC = "symmetric"
    NONSYMMETRIC = "nonsymmetric"

    @classmethod
    def parse(cls, text: str) -> "RateMode":
        key = text.strip().lower().replace("-", "").replace("_", "")
        for mode in cls:
            if mode.value == key:
                return mode
        raise ParamError(f"unknown rate mode {text!r}; use symmetric or nonsymmetric")


class NoiseLaw(enum.Enum):
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"


class KernelShape(enum.Enum):
    GAUSSIAN = "gaussian"
    INDICATOR = "indicator"


@dataclass(frozen=True)
class NoiseSpec:
    """Zero-mean noise added to each accepted opinion update.

    ``variance`` is the full noise variance sigma2.  The uniform law uses
    half-width sqrt(3*variance) so both laws match in second moment.
    """

    law: NoiseLaw = NoiseLaw.GAUSSIAN
    variance: float = 0.0

    def __post_init__(self) -> None:
        if self.variance < 0:
            raise ParamError("noise variance must be >= 0")

    @property
    def half_width(self) -> float:
        if self.law is not NoiseLaw.UNIFORM:
            raise ParamError("half_width only defined for the uniform law")
        return math.sqrt(3.0 * self.variance)


@dataclass(frozen=True)
class SpatialKernelSpec:
    """Unit-mass spatial localization kernel F on R^n.

    shape 'gaussian': standard normal profile; 'indicator': uniform on the
    unit ball, both normalized to unit mass.  The scaled kernel used by the
    spatial particle system is F_eps(a) = eps^-n F(|a|/eps).
    """

    shape: KernelShape = KernelShape.GAUSSIAN
    dimension: int = 1

    def __post_init__(self) -> None:
        if self.dimension not in (1, 2):
            raise ParamError("spatial kernel dimension must be 1 or 2")

    def profile(self, r):
        """Radial profile F(r), r >= 0, normalized to unit mass on R^n."""
        import numpy as np

        r = np.asarray(r, dtype=float)
        n = self.dimension
        if self.shape is KernelShape.GAUSSIAN:
            return np.exp(-(r ** 2) / 2.0) / (2.0 * math.pi) ** (n / 2.0)
        # indicator of the unit ball, mass 1: volume is 2 (n=1) or pi (n=2)
        vol = 2.0 if n == 1 else math.pi
        return np.where(np.abs(r) <= 1.0, 1.0 / vol, 0.0)


@dataclass(frozen=True)
class ModelParams:
    """Full parameter set of the interacting-agent model.

    gamma:  step fraction toward the partner, 0 < gamma <= 1/2.
    kappa:  noise-to-step ratio sigma2/gamma >= 0 (0 means noiseless).
    zeta:   opinion-distance scale of the interaction kernel, > 0.
    rate_mode: symmetric (raw kernel rate) or nonsymmetric (normalized).
    epsilon:   spatial localization scale for the inhomogeneous model, > 0.
    spatial_dim: 1 or 2 (dynamic solvers are implemented for 1).
    """

    gamma: float = 0.5
    kappa: float = 0.5
    zeta: float = 1.0
    rate_mode: RateMode = RateMode.SYMMETRIC
    epsilon: float = 0.1
    spatial_dim: int = 1
    noise_law: NoiseLaw = NoiseLaw.GAUSSIAN
    kernel: SpatialKernelSpec = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.kernel is None:
            object.__setattr__(
                self, "kernel", SpatialKernelSpec(dimension=self.spatial_dim)
            )
        validate_params(self)

    @property
    def sigma2(self) -> float:
        """Noise variance per interaction (read-only, = kappa*gamma)."""
        return self.kappa * self.gamma

    @property
    def noise(self) -> NoiseSpec:
        return NoiseSpec(law=self.noise_law, variance=self.sigma2)


def validate_params(p: ModelParams) -> None:
    if not (0.0 < p.gamma <= 0.5):
        raise ParamError(f"gamma must lie in (0, 1/2], got {p.gamma}")
    if p.kappa < 0.0:
        raise ParamError(f"kappa must be >= 0, got {p.kappa}")
    if p.zeta <= 0.0:
        raise ParamError(f"zeta must be > 0, got {p.zeta}")
    if p.epsilon <= 0.0:
        raise ParamError(f"epsilon must be > 0, got {p.epsilon}")
    if p.spatial_dim not in (1, 2):
        raise ParamError(f"spatial_dim must be 1 or 2, got {p.spatial_dim}")
    if not isinstance(p.rate_mode, RateMode):
        raise ParamError("rate_mode must be a RateMode")
    if p.kernel.dimension != p.spatial_dim:
        raise ParamError("kernel dimension must match spatial_dim")
