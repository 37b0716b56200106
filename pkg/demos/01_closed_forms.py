"""Closed-form layer: equilibrium variances, phase thresholds, diffusion speeds.

Agents hold scalar opinions and pull toward randomly met partners, with a
meeting rate that decays in opinion distance (Gaussian kernel, scale zeta) and
additive noise of strength kappa relative to the pull.  Below a critical
kappa the population settles into a Gaussian opinion cluster; above it the
noise wins and opinions spread without bound.  Everything printed here is a
closed-form expression, evaluated in microseconds -- the rest of the package
exists to check these numbers against simulation.
"""
import math

from opkin import (
    ModelParams,
    RateMode,
    analytic_summary,
    critical_kappa,
    crossover_density,
    equilibrium_sigma2,
)


def main() -> None:
    zeta = 1.0
    print(f"interaction scale zeta = {zeta}")
    print(f"{'kappa':>7} {'mode':>13} {'kappa_c':>8} {'sigma_eq^2':>11} "
          f"{'c_diff (gamma=0.5, Gaussian F)':>31}")
    for kappa in (0.25, 0.5, 0.75, 1.25, 2.5):
        for mode in (RateMode.SYMMETRIC, RateMode.NONSYMMETRIC):
            p = ModelParams(gamma=0.5, kappa=kappa, zeta=zeta, rate_mode=mode)
            kc = critical_kappa(zeta, mode)
            s = analytic_summary(p)
            if s.sigma2 is None:
                print(f"{kappa:7.2f} {mode.value:>13} {kc:8.3f} "
                      f"{'-- dissension (no equilibrium) --':>43}")
            else:
                print(f"{kappa:7.2f} {mode.value:>13} {kc:8.3f} "
                      f"{s.sigma2:11.6f} {s.c_diff:31.6f}")
    print()
    rho = crossover_density(zeta, 0.5)
    print("consensus-speed crossover: on a uniform crowd of density rho the")
    print("symmetric rule relaxes at rate ~ rho * c_sym while the normalized")
    print("rule is density-independent; they tie at")
    print(f"  rho* = c_nonsym / c_sym = {rho:.6f}   (zeta=1, kappa=0.5)")
    print(f"  check: 3/sqrt(2) = {3 / math.sqrt(2):.6f}")
    print()
    print("sanity: equilibrium variance diverges as kappa -> kappa_c:")
    for frac in (0.5, 0.9, 0.99):
        v = equilibrium_sigma2(zeta, frac * zeta**2, RateMode.SYMMETRIC)
        print(f"  kappa = {frac:4.2f} * kappa_c  ->  sigma^2 = {v:10.4f}")


if __name__ == "__main__":
    main()
