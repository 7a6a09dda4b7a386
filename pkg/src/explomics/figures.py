"""Matplotlib renderers for result artifacts.

The CLI report path drops these PNGs next to the delimited/JSON output.
Figures are plain summaries of server-computed numbers; nothing is
recomputed here beyond axis scaling.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 110


def _finish(fig, path):
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def _component_label(artifact, axis):
    return f"component {artifact['components'][axis]}"


def _scatter_panel(ax, coords, labels=None, colors=None, title=""):
    coords = np.asarray(coords, dtype=float)
    c = None
    if colors is not None:
        palette = plt.get_cmap("tab10")
        uniq = sorted(set(colors))
        lookup = {g: palette(i % 10) for i, g in enumerate(uniq)}
        c = [lookup[g] for g in colors]
        for g in uniq:
            ax.scatter([], [], color=lookup[g], label=str(g), s=18)
        ax.legend(fontsize=7, loc="best")
    ax.scatter(coords[:, 0], coords[:, 1], s=18, c=c)
    if labels is not None and len(labels) <= 40:
        for (x, y), name in zip(coords[:, :2], labels):
            ax.annotate(str(name), (x, y), fontsize=6, alpha=0.7)
    ax.set_title(title, fontsize=9)
    ax.axhline(0.0, color="0.85", lw=0.8, zorder=0)
    ax.axvline(0.0, color="0.85", lw=0.8, zorder=0)


def save_pca_figure(artifact, path, group_labels=None):
    """Sample scores on the first two chosen components, with the null readout."""
    fig, ax = plt.subplots(figsize=(5.5, 5), constrained_layout=True)
    coords = np.asarray(artifact["sample_coords"], dtype=float)
    if coords.shape[1] < 2:
        coords = np.column_stack([coords[:, 0], np.zeros(len(coords))])
    _scatter_panel(ax, coords, labels=artifact.get("sample_ids"),
                   colors=group_labels, title="sample projection")
    ax.set_xlabel(_component_label(artifact, 0))
    ax.set_ylabel(_component_label(artifact, 1) if len(artifact["components"]) > 1 else "")
    null = artifact["null"]
    fig.suptitle(
        "alpha2 = {:.3f}  (null {:.3f} +/- {:.3f}, ratio {:.1f})".format(
            artifact["alpha2_observed"], null["mean"], null["sd"], artifact["ratio"]
        ),
        fontsize=9,
    )
    return _finish(fig, path)


def save_biplot_figure(payload, path, group_labels=None):
    """Two synchronized panels: samples left, variables right, shared axes S."""
    fig, (ax_s, ax_v) = plt.subplots(1, 2, figsize=(10, 5), constrained_layout=True)
    s = payload["components"]
    sample = np.asarray(payload["sample_coords"], dtype=float)
    variable = np.asarray(payload["variable_coords"], dtype=float)
    if sample.shape[1] < 2:
        sample = np.column_stack([sample[:, 0], np.zeros(len(sample))])
        variable = np.column_stack([variable[:, 0], np.zeros(len(variable))])
    _scatter_panel(ax_s, sample, labels=payload.get("sample_ids"),
                   colors=group_labels, title="samples")
    _scatter_panel(ax_v, variable, title="variables")
    for ax in (ax_s, ax_v):
        ax.set_xlabel(f"component {s[0]}")
        if len(s) > 1:
            ax.set_ylabel(f"component {s[1]}")
    alpha2 = payload.get("alpha2")
    if alpha2:
        fig.suptitle(
            "alpha2 = {:.3f}  (null {:.3f} +/- {:.3f})".format(
                alpha2["observed"], alpha2["null_mean"], alpha2["null_sd"]
            ),
            fontsize=9,
        )
    return _finish(fig, path)


def save_isomap_figure(artifact, path, group_labels=None):
    """Geodesic embedding with the neighbor graph drawn underneath."""
    fig, ax = plt.subplots(figsize=(5.5, 5), constrained_layout=True)
    coords = np.asarray(artifact["coords"], dtype=float)
    if coords.shape[1] < 2:
        coords = np.column_stack([coords[:, 0], np.zeros(len(coords))])
    for i, j, _ in artifact.get("edges", []):
        ax.plot(
            [coords[i, 0], coords[j, 0]],
            [coords[i, 1], coords[j, 1]],
            color="0.8", lw=0.7, zorder=0,
        )
    _scatter_panel(ax, coords, labels=artifact.get("sample_ids"),
                   colors=group_labels,
                   title=f"geodesic embedding (k={artifact['k']})")
    ax.set_xlabel(_component_label(artifact, 0))
    if len(artifact["components"]) > 1:
        ax.set_ylabel(_component_label(artifact, 1))
    return _finish(fig, path)


def save_test_figure(table, path):
    """P-value histogram plus a t vs q volcano for one test table."""
    fig, (ax_h, ax_v) = plt.subplots(1, 2, figsize=(10, 4.2), constrained_layout=True)
    p = np.asarray(table["p"], dtype=float)
    ax_h.hist(p, bins=20, range=(0.0, 1.0), color="#4477aa")
    ax_h.set_xlabel("p-value")
    ax_h.set_ylabel("variables")
    ax_h.set_title("p-value distribution", fontsize=9)
    t = np.asarray(table["t"], dtype=float)
    q = np.asarray(table.get("q", table["p"]), dtype=float)
    finite = np.isfinite(t)
    logq = -np.log10(np.maximum(q[finite], 1e-300))
    rejected = np.asarray(table.get("rejected", [False] * len(t)))[finite]
    ax_v.scatter(t[finite][~rejected], logq[~rejected], s=10, color="0.6")
    ax_v.scatter(t[finite][rejected], logq[rejected], s=12, color="#cc3311")
    ax_v.set_xlabel("t statistic")
    ax_v.set_ylabel("-log10 q")
    n_rej = table.get("n_rejected")
    level = table.get("level")
    title = "discoveries"
    if n_rej is not None and level is not None:
        title = f"{n_rej} rejected at level {level:g}"
    ax_v.set_title(title, fontsize=9)
    return _finish(fig, path)


def save_null_figure(artifact, path, observed=None):
    """Null projection-content estimate, optionally against an observed value."""
    fig, ax = plt.subplots(figsize=(4.2, 4), constrained_layout=True)
    names = ["null"]
    values = [artifact["mean"]]
    errors = [artifact["sd"]]
    if observed is not None:
        names.append("observed")
        values.append(observed)
        errors.append(0.0)
    ax.bar(names, values, yerr=errors, color=["#4477aa", "#cc3311"][: len(names)],
           capsize=4)
    ax.set_ylabel("projection content")
    ax.set_title(
        f"p={artifact['p']}, N={artifact['n']}, |S|={len(artifact['components'])}",
        fontsize=9,
    )
    return _finish(fig, path)


def render_session_figures(report, figdir):
    """Write one figure per analysis step of an exported session report."""
    os.makedirs(figdir, exist_ok=True)
    written = []
    for idx, step in enumerate(report["steps"]):
        art = step.get("artifact")
        if not art:
            continue
        name = f"step{idx:02d}_{step['kind']}.png"
        path = os.path.join(figdir, name)
        if step["kind"] == "pca":
            written.append(save_pca_figure(art, path))
        elif step["kind"] == "isomap":
            written.append(save_isomap_figure(art, path))
        elif step["kind"] == "t_test":
            written.append(save_test_figure(art["table"], path))
        elif step["kind"] == "null_estimate":
            written.append(save_null_figure(art, path))
    return written
