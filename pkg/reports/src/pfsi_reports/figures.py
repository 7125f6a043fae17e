"""Figure builders.

Each builder turns parsed run data into a matplotlib Figure.  Everything is
built through the object-oriented API (no pyplot, no global state) with
explicit colors and sizes, so rendering is reproducible byte for byte.
"""

import numpy as np
from matplotlib.figure import Figure

FIGSIZE = (6.4, 4.0)
FIGSIZE_TALL = (6.4, 7.2)

# one fixed palette for every multi-line panel
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)

LHS_GROUPS = ("force_work", "pressure_over_eta", "vertical_over_eta", "neg_log_end")
RHS_GROUPS = (
    "convective_time", "convective_x", "convective_y", "shear_x", "shear_y",
    "horizontal", "log_initial", "boundary",
)


def _axes(fig, nrows=1):
    axes = fig.subplots(nrows, 1, squeeze=False)[:, 0]
    for ax in axes:
        ax.grid(True, alpha=0.3)
    return axes


def placeholder(name, reason):
    """Stand-in figure for a requested panel whose input carries no rows."""
    fig = Figure(figsize=FIGSIZE)
    ax = _axes(fig)[0]
    ax.set_axis_off()
    ax.text(0.5, 0.55, f"{name}: no data", ha="center", va="center", fontsize=14)
    ax.text(0.5, 0.4, reason, ha="center", va="center", fontsize=9, color="#666666")
    return fig


def eta_heatmap(series):
    """Space-time map of the gap profile from the checkpoint series."""
    times = np.array([ck.t for ck in series])
    x = series[0].x_centers
    gap = np.vstack([ck.eta for ck in series])
    fig = Figure(figsize=FIGSIZE)
    ax = _axes(fig)[0]
    ax.grid(False)
    mesh = ax.pcolormesh(x, times, gap, shading="nearest", cmap="viridis", rasterized=False)
    fig.colorbar(mesh, ax=ax, label="gap height")
    ax.set_xlabel("x")
    ax.set_ylabel("t")
    ax.set_title("gap profile over time")
    return fig


def gap_history(diag, delta):
    """Minimum and maximum gap over time, with the detachment time marked."""
    t = diag.floats("t")
    min_eta = diag.floats("min_eta")
    max_eta = diag.floats("max_eta")
    fig = Figure(figsize=FIGSIZE)
    ax = _axes(fig)[0]
    ax.plot(t, min_eta, color=PALETTE[0], label="min gap")
    ax.plot(t, max_eta, color=PALETTE[1], label="max gap")
    ax.axhline(delta, color="#999999", linestyle=":", linewidth=1, label="penalty threshold")
    ax.axhline(2 * delta, color="#999999", linestyle="--", linewidth=1, label="detachment level")
    above = np.nonzero(min_eta > 2 * delta)[0]
    if above.size:
        t_det = t[above[0]]
        ax.axvline(t_det, color=PALETTE[3], linewidth=1)
        ax.annotate(
            f"detached t={t_det:g}", xy=(t_det, 2 * delta),
            xytext=(4, 6), textcoords="offset points", color=PALETTE[3], fontsize=8,
        )
    ax.set_xlabel("t")
    ax.set_ylabel("gap height")
    ax.set_title("gap extremes")
    ax.legend(loc="best", fontsize=8)
    return fig


def energy_budget(diag):
    """Stacked energy components plus the cumulative ledger lines."""
    t = diag.floats("t")
    parts = [
        ("fluid kinetic", diag.floats("fluid_kinetic")),
        ("internal", diag.floats("internal")),
        ("beam kinetic", diag.floats("beam_kinetic")),
        ("bending", diag.floats("bending")),
    ]
    fig = Figure(figsize=FIGSIZE_TALL)
    top, bottom = _axes(fig, nrows=2)
    top.stackplot(
        t, [v for _, v in parts],
        labels=[n for n, _ in parts], colors=PALETTE[: len(parts)], alpha=0.8,
    )
    top.plot(t, diag.floats("dissipation_cum"), color="#444444",
             linestyle="--", label="dissipated (cum)")
    top.plot(t, diag.floats("work_cum"), color="#444444",
             linestyle=":", label="force work (cum)")
    top.set_ylabel("energy")
    top.set_title("energy budget")
    top.legend(loc="best", fontsize=8)
    bottom.plot(t, diag.floats("energy_residual"), color=PALETTE[3])
    bottom.axhline(0.0, color="#999999", linewidth=1)
    bottom.set_xlabel("t")
    bottom.set_ylabel("inequality defect")
    bottom.set_title("energy-inequality residual (negative = slack)")
    return fig


def contact_breakdown(contact):
    """Both sides of the contact inequality and the tolerance-checked defect."""
    t = contact.floats("t")
    fig = Figure(figsize=(6.4, 9.0))
    ax_lhs, ax_rhs, ax_res = _axes(fig, nrows=3)
    for i, name in enumerate(LHS_GROUPS):
        ax_lhs.plot(t, contact.floats(name), color=PALETTE[i], label=name, linewidth=1)
    ax_lhs.plot(t, contact.floats("lhs_total"), color="#000000", label="total", linewidth=1.5)
    ax_lhs.set_ylabel("left side")
    ax_lhs.set_title("contact inequality, term by term")
    ax_lhs.legend(loc="best", fontsize=7)
    for i, name in enumerate(RHS_GROUPS):
        ax_rhs.plot(t, contact.floats(name), color=PALETTE[i], label=name, linewidth=1)
    ax_rhs.plot(t, contact.floats("rhs_total"), color="#000000", label="total", linewidth=1.5)
    ax_rhs.set_ylabel("right side")
    ax_rhs.legend(loc="best", fontsize=7)
    ax_res.plot(t, contact.floats("residual"), color=PALETTE[3], label="defect (positive part)")
    ax_res.plot(t, contact.floats("tolerance"), color="#999999",
                linestyle="--", label="tolerance")
    ax_res.set_xlabel("t")
    ax_res.set_ylabel("defect")
    ax_res.legend(loc="best", fontsize=8)
    return fig


def lemma_margins(table):
    """One margin histogram per inequality family in the trial report."""
    ids = table.strings("lemma_id")
    margins = table.floats("margin")
    passed = table.floats("passed")
    families = sorted(set(ids))
    ncols = 2
    nrows = (len(families) + ncols - 1) // ncols
    fig = Figure(figsize=(6.4, 2.4 * nrows))
    grid = fig.subplots(nrows, ncols, squeeze=False)
    for k, family in enumerate(families):
        ax = grid[k // ncols][k % ncols]
        member = np.array([i == family for i in ids])
        values = margins[member]
        failures = int(np.sum(passed[member] == 0.0))
        ax.hist(values, bins=20, color=PALETTE[0] if failures == 0 else PALETTE[3])
        ax.axvline(0.0, color="#999999", linewidth=1)
        suffix = "" if failures == 0 else f", {failures} FAILED"
        ax.set_title(f"{family} ({member.sum()} trials{suffix})", fontsize=8)
        ax.tick_params(labelsize=7)
    for k in range(len(families), nrows * ncols):
        grid[k // ncols][k % ncols].set_axis_off()
    fig.suptitle("inequality trial margins (positive = pass with room)", fontsize=10)
    return fig


def sweep_detachment(table):
    """Detachment times against the swept value."""
    raw = table.strings("value")
    point = table.floats("detach_time_point")
    global_min = table.floats("detach_time_min")
    try:
        x = np.array([float(v) for v in raw])
        labels = None
    except ValueError:
        x = np.arange(len(raw), dtype=float)
        labels = raw
    fig = Figure(figsize=FIGSIZE)
    ax = _axes(fig)[0]
    ax.plot(x, point, "o-", color=PALETTE[0], label="probe point clears 2*delta")
    ax.plot(x, global_min, "s--", color=PALETTE[1], label="global min clears 2*delta")
    if labels is not None:
        ax.set_xticks(x)
        ax.set_xticklabels(labels, fontsize=8)
    key = table.strings("key")
    ax.set_xlabel(key[0] if key else "swept value")
    ax.set_ylabel("detachment time")
    ax.set_title("detachment time across the sweep")
    ax.legend(loc="best", fontsize=8)
    return fig
