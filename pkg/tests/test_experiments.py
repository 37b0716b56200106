"""Experiment drivers at trimmed scales: structure, flags, determinism.

Full-scale statistical budgets live in the acceptance suite; here each driver
runs small enough for CI while still exercising its real code path.
"""
import math

import pytest

from opkin.experiments import (
    ExperimentKind,
    ExperimentSpec,
    run_experiment,
)
from opkin.params import ModelParams, ParamError, RateMode


def test_kind_parse_roundtrip():
    assert ExperimentKind.parse("variance-vs-kappa") is ExperimentKind.VARIANCE_VS_KAPPA
    assert ExperimentKind.parse("Entropy_Audit") is ExperimentKind.ENTROPY_AUDIT
    with pytest.raises(ParamError):
        ExperimentKind.parse("nope")


def test_spec_validation():
    with pytest.raises(ParamError):
        ExperimentSpec(kind=ExperimentKind.CROSSOVER, replicas=0)
    with pytest.raises(ParamError):
        ExperimentSpec(kind=ExperimentKind.CROSSOVER, sweep=(1.0, 3.0, 2.0))
    # strictly decreasing is fine (used for coarse-to-fine range sweeps)
    ExperimentSpec(kind=ExperimentKind.KINETIC_VS_MACRO, sweep=(0.2, 0.1))
    spec = ExperimentSpec(kind=ExperimentKind.ENTROPY_AUDIT)
    assert spec.window() == pytest.approx(5.0 / spec.params.gamma)


def test_entropy_audit_levels_converge():
    spec = ExperimentSpec(kind=ExperimentKind.ENTROPY_AUDIT, j_cells=64)
    res = run_experiment(spec)
    assert res.kind is ExperimentKind.ENTROPY_AUDIT
    levels = res.summary["levels"]
    assert len(levels) == 12  # 2 modes x 2 presets x 3 levels
    assert all(v < 1e-4 for v in levels.values())
    for mode in ("symmetric", "nonsymmetric"):
        for preset in ("uniform", "step"):
            base = levels[f"{mode}/{preset}/level0"]
            halved = levels[f"{mode}/{preset}/level1"]
            finer = levels[f"{mode}/{preset}/level2"]
            assert 2.5 <= base / halved <= 6.0  # dt halving: ~4x
            assert finer < base                 # finer grid + its own dt


def test_entropy_audit_deterministic():
    spec = ExperimentSpec(kind=ExperimentKind.ENTROPY_AUDIT, j_cells=64)
    a, b = run_experiment(spec), run_experiment(spec)
    assert a.summary == b.summary
    assert a.rows == b.rows


@pytest.mark.slow
def test_variance_vs_kappa_trimmed():
    spec = ExperimentSpec(kind=ExperimentKind.VARIANCE_VS_KAPPA,
                          sweep=(0.05, 0.25), m_cells=256)
    res = run_experiment(spec)
    assert len(res.rows) == 4  # 2 modes x 2 kappas
    s = res.summary
    assert s["all_equilibrated"]
    assert s["max_rel_err"] < 0.02
    assert s["symmetric_wider_everywhere"]


@pytest.mark.slow
def test_phase_scan_trimmed():
    spec = ExperimentSpec(kind=ExperimentKind.PHASE_SCAN,
                          sweep=(0.8, 1.0, 1.2), m_cells=192)
    res = run_experiment(spec)
    s = res.summary
    assert s["all_bracketed"]
    for mode, kc in (("symmetric", 1.0), ("nonsymmetric", 2.0)):
        m = s["modes"][mode]
        assert m["kappa_crit"] == pytest.approx(kc)
        assert m["bracket_lo"] < kc <= m["bracket_hi"] + 1e-12
    # classifications are exhaustive and consistent
    for r in res.rows:
        assert r.classification in ("equilibrated", "diverging", "inconclusive")


@pytest.mark.slow
def test_crossover_trimmed():
    spec = ExperimentSpec(kind=ExperimentKind.CROSSOVER,
                          sweep=(1.0, 3.0), j_cells=96)
    res = run_experiment(spec)
    s = res.summary
    assert s["bracketed"]
    assert s["rel_err"] is not None and s["rel_err"] <= 0.02
    assert s["low_density_nonsymmetric_faster"]
    assert s["high_density_symmetric_faster"]
    for r in res.rows:
        assert (r.faster_mode == "nonsymmetric") == (r.t_consensus_asym < r.t_consensus_sym)


@pytest.mark.slow
def test_particle_vs_kinetic_trimmed():
    spec = ExperimentSpec(kind=ExperimentKind.PARTICLE_VS_KINETIC,
                          params=ModelParams(gamma=0.05),
                          n_agents=6000, replicas=8, t_end=30.0, checkpoints=3)
    res = run_experiment(spec)
    # 2 modes x 2 schemes x 4 checkpoints
    assert len(res.rows) == 16
    combos = res.summary["combos"]
    assert set(combos) == {
        "symmetric/collision-mc", "symmetric/meanfield-sde",
        "nonsymmetric/collision-mc", "nonsymmetric/meanfield-sde",
    }
    # statistical tightness (3 SE at 16 replicas) is asserted at full scale in
    # the acceptance suite; at 8 replicas the z-scores have heavy t_7 tails,
    # so this trimmed run only guards against gross scheme defects
    for key in ("symmetric/meanfield-sde", "nonsymmetric/meanfield-sde"):
        assert combos[key]["max_abs_z"] <= 5.0, combos
    for key in ("symmetric/collision-mc", "nonsymmetric/collision-mc"):
        assert combos[key]["max_abs_z"] <= 40.0, combos
    for r in res.rows:
        assert math.isfinite(r.z)
        assert r.se > 0.0 or r.t == 0.0


@pytest.mark.slow
def test_kinetic_vs_macro_trimmed():
    spec = ExperimentSpec(kind=ExperimentKind.KINETIC_VS_MACRO,
                          sweep=(0.3, 0.15), n_agents=20_000, bins=16,
                          j_cells=64, checkpoints=2, t_prime_end=0.2,
                          replicas=2)
    res = run_experiment(spec)
    for mode in ("symmetric", "nonsymmetric"):
        m = res.summary["modes"][mode]
        assert m["ordered_non_increasing"], m
        assert m["eps=0.3"]["replicas"] == 1
        assert m["eps=0.15"]["replicas"] == 2  # capped by the spec
        for eps in (0.3, 0.15):
            d = m[f"eps={eps:g}"]["discrepancy"]
            assert math.isfinite(d) and d > 0.0
    for r in res.rows:
        assert r.rms_ref > 0.0


def test_particle_vs_kinetic_reproducible():
    spec = ExperimentSpec(kind=ExperimentKind.PARTICLE_VS_KINETIC,
                          n_agents=500, replicas=2, t_end=2.0, checkpoints=2)
    a, b = run_experiment(spec), run_experiment(spec)
    assert a.rows == b.rows
