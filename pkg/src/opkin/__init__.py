"""Kinetic opinion-formation toolbox.

Layers, from exact to empirical:

- :mod:`opkin.analytic`: closed-form equilibrium variances, phase thresholds,
  mean-opinion diffusion coefficients and the consensus-speed crossover.
- :mod:`opkin.kinetic`: finite-volume solver for the homogeneous opinion
  Fokker-Planck equation (both rate modes), Gibbs maps, steady-state
  residuals and the linearized operator.
- :mod:`opkin.particles`: stochastic agent simulators (collision Monte Carlo
  and the mean-field SDE), optionally spatially localized on the unit torus.
- :mod:`opkin.macro`: macroscopic mean-opinion diffusion on a static density.
- :mod:`opkin.experiments`: reproducible cross-validation studies tying the
  layers together.
- :mod:`opkin.cli` / :mod:`opkin.runio`: the `opk` command, config parsing,
  versioned CSV traces and JSON summaries.
"""
from .params import (
    KernelShape,
    ModelParams,
    NoiseLaw,
    NoiseSpec,
    ParamError,
    RateMode,
    SpatialKernelSpec,
)
from .analytic import (
    AnalyticSummary,
    SupercriticalError,
    analytic_summary,
    critical_kappa,
    crossover_density,
    diffusion_coefficient,
    diffusion_coefficient_normalized,
    equilibrium_sigma2,
    gaussian_convolution_closed_form,
    spatial_diffusivity,
)

__version__ = "0.1.0"

__all__ = [
    "KernelShape",
    "ModelParams",
    "NoiseLaw",
    "NoiseSpec",
    "ParamError",
    "RateMode",
    "SpatialKernelSpec",
    "AnalyticSummary",
    "SupercriticalError",
    "analytic_summary",
    "critical_kappa",
    "crossover_density",
    "diffusion_coefficient",
    "diffusion_coefficient_normalized",
    "equilibrium_sigma2",
    "gaussian_convolution_closed_form",
    "spatial_diffusivity",
    "__version__",
]
