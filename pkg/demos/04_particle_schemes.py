"""Agent layer: the two stochastic schemes, and why the jump scheme is biased.

Two simulators realize the same model at different fidelities:

- CollisionMC plays the literal game: each tick, every agent may meet one
  partner and jump a fraction gamma toward them (plus noise), accepted with
  the kernel-weighted rate.
- MeanFieldSDE integrates the small-jump (gamma -> 0) limit directly: drift
  toward the kernel-weighted local mean plus matched diffusion.

At finite gamma the jump process is *not* the limit process: stationarity of
the second moment pins the jump scheme's kernel-weighted pair spread at
kappa/(1-gamma) instead of kappa, so its equilibrium variance matches the
closed form with that shifted ratio.  The demo measures both schemes across
gamma and compares against the plain and shifted predictions.
"""
import math

from opkin import ModelParams, RateMode, equilibrium_sigma2
from opkin.particles import (
    SchemeKind,
    SimScheme,
    ensemble_gaussian,
    run_particles,
)


def measure(p: ModelParams, kind: SchemeKind, v0: float, seed: int) -> tuple[float, float]:
    ens = ensemble_gaussian(4000, v0, seed=seed, replicas=8)
    t_end = 30.0 / p.gamma
    dt = 0.05 / p.gamma if kind is SchemeKind.MEANFIELD_SDE else None
    rows = run_particles(ens, p, SimScheme(kind=kind, dt=dt),
                         t_end=t_end, trace_dt=t_end)
    last = rows[-1]
    se = float(last.rep_vars.std(ddof=1)) / math.sqrt(8)
    return last.variance, se


def main() -> None:
    kappa, mode = 0.5, RateMode.SYMMETRIC
    print("symmetric rates, kappa = 0.5, N = 4000, 8 replicas, t = 30/gamma")
    print("predictions: plain sigma^2(kappa) vs jump-shifted sigma^2(kappa/(1-gamma))")
    print(f"{'gamma':>6} {'scheme':>13} {'measured':>9} {'+-SE':>7} "
          f"{'plain':>7} {'shifted':>8} {'closer to':>10}")
    for i, gamma in enumerate((0.2, 0.1, 0.05)):
        p = ModelParams(gamma=gamma, kappa=kappa, rate_mode=mode)
        v_plain = equilibrium_sigma2(p.zeta, kappa, mode)
        v_shift = equilibrium_sigma2(p.zeta, kappa / (1.0 - gamma), mode)
        for kind in (SchemeKind.COLLISION_MC, SchemeKind.MEANFIELD_SDE):
            v, se = measure(p, kind, v_plain, seed=17 + i)
            closer = "plain" if abs(v - v_plain) < abs(v - v_shift) else "shifted"
            print(f"{gamma:6.2f} {kind.value:>13} {v:9.4f} {se:7.4f} "
                  f"{v_plain:7.4f} {v_shift:8.4f} {closer:>10}")
    print()
    print("the jump scheme tracks the shifted prediction and approaches the")
    print("plain one only as gamma -> 0; the SDE scheme sits on it directly.")


if __name__ == "__main__":
    main()
