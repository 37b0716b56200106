"""The five figure kinds, rendered from simulator tables only.

Every renderer takes a validated :class:`~opkfig.tables.Table` plus the
optional parsed ``summary.json`` of the run that produced it.  Overlay
material (closed-form curves, thresholds, the crossover density) comes
exclusively from that summary; nothing numerical is recomputed here.
Rendering is deterministic: fixed styling, the ``Agg`` backend, a pinned SVG
hash salt, and no clocks or random state.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)
import numpy as np  # noqa: E402

from .tables import Table, TableError, read_summary, read_table  # noqa: E402

_MODES = ("symmetric", "nonsymmetric")
_MODE_COLOR = {"symmetric": "#1f77b4", "nonsymmetric": "#d62728"}
_MODE_MARKER = {"symmetric": "o", "nonsymmetric": "s"}

_RC = {
    "figure.figsize": (6.4, 4.2),
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "opkfig",
    "svg.fonttype": "none",
    "path.simplify": False,
}


@dataclass(frozen=True)
class FigureJob:
    """One rendering request: input table, kind, optional summary, output."""

    kind: str
    table_path: str
    out_path: str
    summary_path: str | None = None
    dpi: int = 120


# ---- variance vs kappa -------------------------------------------------------------
def _fig_variance_vs_kappa(table: Table, summary: dict | None):
    fig, ax = plt.subplots()
    top = 0.0
    for mode in _MODES:
        sub = table.rows_where("mode", mode)
        if sub.cells.shape[0] == 0:
            continue
        kappa = sub.column("kappa")
        meas = sub.column("sigma2_kinetic")
        ax.plot(kappa, meas, _MODE_MARKER[mode], color=_MODE_COLOR[mode],
                mfc="none", ms=7, ls="none", label=f"{mode} (solver)")
        top = max(top, float(meas.max()))
    if summary is not None:
        an = summary.get("analytic", {})
        grid = np.asarray(an.get("kappa_grid", []), dtype=float)
        for mode in _MODES:
            curve = np.asarray(an.get(f"sigma2_{mode}", []), dtype=float)
            if grid.size and curve.size == grid.size:
                keep = curve <= 2.5 * max(top, 1e-30)
                ax.plot(grid[keep], curve[keep], "-", color=_MODE_COLOR[mode],
                        lw=1.2, alpha=0.8, label=f"{mode} (closed form)")
            kc = an.get(f"kappa_crit_{mode}")
            if kc is not None and kc <= 1.05 * float(table.column("kappa").max()):
                ax.axvline(kc, color=_MODE_COLOR[mode], ls=":", lw=1)
    ax.set_xlabel(r"noise ratio $\kappa$")
    ax.set_ylabel(r"equilibrium variance $\sigma^2$")
    ax.set_title("Equilibrium opinion variance vs noise ratio")
    ax.legend(loc="upper left", framealpha=0.9)
    return fig


# ---- phase scan --------------------------------------------------------------------
def _fig_phase_scan(table: Table, summary: dict | None):
    fig, ax = plt.subplots(figsize=(6.4, 3.2))
    style = {"equilibrated": dict(marker="o", color="#2ca02c"),
             "diverging": dict(marker="X", color="#d62728")}
    seen = set()
    for y, mode in enumerate(_MODES):
        sub = table.rows_where("mode", mode)
        ratio = sub.column("kappa_ratio")
        cls = sub.column("classification", numeric=False)
        for r, c in zip(ratio, cls):
            st = style.get(c, dict(marker=".", color="gray"))
            ax.plot([r], [y], ls="none", ms=11, mec="black", mew=0.4,
                    label=c if c not in seen else None, **st)
            seen.add(c)
        if summary is not None:
            m = summary.get("result", {}).get("modes", {}).get(mode, {})
            kc = m.get("kappa_crit")
            lo, hi = m.get("bracket_lo"), m.get("bracket_hi")
            if kc and lo is not None and hi is not None:
                ax.plot([lo / kc, hi / kc], [y - 0.18] * 2, "-", lw=3,
                        color="#9467bd", solid_capstyle="butt",
                        label="measured bracket" if y == 0 else None)
    ax.axvline(1.0, color="black", ls="--", lw=1,
               label=r"$\kappa = \kappa_c$")
    ax.set_yticks(range(len(_MODES)), _MODES)
    ax.set_ylim(-0.6, len(_MODES) - 0.4)
    ax.set_xlabel(r"$\kappa / \kappa_c$")
    ax.set_title("Consensus/dissension classification across the threshold")
    ax.legend(loc="center left", bbox_to_anchor=(1.01, 0.5), frameon=False)
    fig.tight_layout()
    return fig


# ---- crossover ---------------------------------------------------------------------
def _fig_crossover(table: Table, summary: dict | None):
    fig, ax = plt.subplots()
    rho = table.column("rho0")
    ax.plot(rho, table.column("t_consensus_sym"), "o-",
            color=_MODE_COLOR["symmetric"], mfc="none", label="symmetric")
    ax.plot(rho, table.column("t_consensus_asym"), "s-",
            color=_MODE_COLOR["nonsymmetric"], mfc="none", label="nonsymmetric")
    if summary is not None:
        res = summary.get("result", {})
        rho_star = res.get("rho_star")
        rho_cross = res.get("rho_cross")
        if rho_star is not None:
            ax.axvspan(0.98 * rho_star, 1.02 * rho_star, color="gray",
                       alpha=0.25, label=r"$\rho^*\pm2\%$ (closed form)")
            ax.axvline(rho_star, color="gray", ls=":", lw=1)
        if rho_cross is not None:
            ax.plot([rho_cross], [np.interp(rho_cross, rho,
                                            table.column("t_consensus_asym"))],
                    "*", color="black", ms=14, label="measured crossing")
    ax.set_xlabel(r"uniform crowd density $\rho_0$")
    ax.set_ylabel(r"consensus time $t^*$")
    ax.set_title("Consensus-speed crossover between rate modes")
    ax.legend(framealpha=0.9)
    return fig


# ---- entropy trace -----------------------------------------------------------------
def _fig_entropy(table: Table, summary: dict | None):
    fig, ax = plt.subplots()
    t = table.column("t")
    ax.plot(t, table.column("entropy"), "-", color="#1f77b4", lw=1.8,
            label="weighted spread $S(t)$")
    ax2 = ax.twinx()
    ax2.plot(t, table.column("dissipation_rhs"), "--", color="#ff7f0e",
             lw=1.4, label="dissipation rhs")
    ax2.axhline(0.0, color="gray", lw=0.8)
    ax2.grid(False)
    ax.set_xlabel("time")
    ax.set_ylabel("spread functional")
    ax2.set_ylabel("gradient integral (rhs)")
    bits = [table.config.get("mode", "?"), table.config.get("rho_init", "?")]
    ax.set_title(f"Monotone spread decay ({', '.join(bits)} density)")
    h1, l1 = ax.get_legend_handles_labels()
    h2, l2 = ax2.get_legend_handles_labels()
    ax.legend(h1 + h2, l1 + l2, loc="center right", framealpha=0.9)
    return fig


# ---- kinetic vs macro --------------------------------------------------------------
def _fig_kinetic_vs_macro(table: Table, summary: dict | None):
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 4.0), sharey=True)
    eps_colors = ("#1f77b4", "#2ca02c", "#d62728", "#9467bd", "#8c564b")
    for ax, mode in zip(axes, _MODES):
        sub = table.rows_where("mode", mode)
        if sub.cells.shape[0] == 0:
            continue
        eps_vals = sorted({float(e) for e in sub.column("eps")}, reverse=True)
        ref_drawn = False
        for i, eps in enumerate(eps_vals):
            pick = sub.column("eps") == eps
            tp = sub.column("t_prime")[pick]
            order = np.argsort(tp)
            if not ref_drawn:
                ax.plot(tp[order], sub.column("rms_ref")[pick][order], "k-",
                        lw=1.8, label="macro solution (rms)")
                ref_drawn = True
            label = f"eps={eps:g}"
            if summary is not None:
                cell = (summary.get("result", {}).get("modes", {})
                        .get(mode, {}).get(f"eps={eps:g}", {}))
                d = cell.get("discrepancy")
                if d is not None:
                    label += f"  (L2 {100 * d:.1f}%)"
            ax.plot(tp[order], sub.column("rms_diff")[pick][order], "o--",
                    color=eps_colors[i % len(eps_colors)], mfc="none",
                    label=label)
        ax.set_yscale("log")
        ax.set_xlabel(r"diffusive time $t' = \epsilon^2 t$")
        ax.set_title(mode)
        ax.legend(fontsize=8, framealpha=0.9)
    axes[0].set_ylabel("field rms")
    fig.suptitle("Binned particle field vs macro diffusion"
                 " (gap shrinks with the interaction range)")
    fig.tight_layout()
    return fig


FIGURE_KINDS: dict[str, tuple[str, object]] = {
    "variance-vs-kappa": ("variance-vs-kappa", _fig_variance_vs_kappa),
    "phase-scan": ("phase-scan", _fig_phase_scan),
    "crossover": ("crossover", _fig_crossover),
    "entropy": ("macro-trace", _fig_entropy),
    "kinetic-vs-macro": ("kinetic-vs-macro", _fig_kinetic_vs_macro),
}


def render(job: FigureJob) -> str:
    """Render one figure job to job.out_path; returns the output path."""
    if job.kind not in FIGURE_KINDS:
        raise ValueError(f"unknown figure kind {job.kind!r} "
                         f"(choose from {', '.join(sorted(FIGURE_KINDS))})")
    suffix = Path(job.out_path).suffix.lower()
    if suffix not in (".png", ".svg"):
        raise ValueError(f"unsupported output format {suffix!r} (png or svg)")
    schema, fn = FIGURE_KINDS[job.kind]
    table = read_table(job.table_path, expect_schema=schema)
    summary = read_summary(job.summary_path) if job.summary_path else None
    with plt.rc_context(_RC):
        fig = fn(table, summary)
        try:
            out = Path(job.out_path)
            out.parent.mkdir(parents=True, exist_ok=True)
            # strip wall-clock metadata so identical inputs give identical bytes
            metadata = {"Date": None} if suffix == ".svg" else None
            fig.savefig(out, dpi=job.dpi, metadata=metadata)
        finally:
            plt.close(fig)
    return str(job.out_path)
