"""Macro layer: the opinion-spread functional only ever decreases.

Along the mean-opinion diffusion the weighted spread S(t) = integral of
w(alpha) (phi - phi_bar)^2 (w = rho for symmetric rates, rho^2 for
normalized) decays monotonically to zero: consensus destroys spread and
nothing recreates it.  Its time derivative equals a negative-definite
gradient integral exactly (a discrete summation-by-parts identity), which
the refinement study below confirms at second order in dt.
"""
from opkin import ModelParams
from opkin.experiments import ExperimentKind, ExperimentSpec, run_experiment


def main() -> None:
    spec = ExperimentSpec(kind=ExperimentKind.ENTROPY_AUDIT,
                          params=ModelParams(gamma=0.5, kappa=0.5))
    res = run_experiment(spec)
    print("spread functional at start/end of each refinement level")
    print(f"{'mode':>13} {'density':>8} {'level':>6} {'t':>7} "
          f"{'S(t)':>12} {'dS/dt':>12}")
    for r in res.rows:
        print(f"{r.mode:>13} {r.preset:>8} {r.level:6d} {r.t:7.4f} "
              f"{r.entropy:12.8f} {r.dissipation_rhs:12.6f}")
    print()
    print("worst |dS/dt - midpoint gradient integral| per level")
    print("(halving dt divides the mismatch by ~4: the identity is exact,")
    print(" the residual is pure time-discretization error)")
    for key, err in res.summary["levels"].items():
        print(f"  {key:<32} {err:.3e}")


if __name__ == "__main__":
    main()
