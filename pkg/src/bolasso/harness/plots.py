"""SVG figures for experiment outputs. The CSV tables are the contract;
these are a convenience."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
# fixed id salt keeps repeated SVG renders byte-identical
matplotlib.rcParams["svg.hashsalt"] = "bolasso"
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_SVG_META = {"Date": None}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return Path(path)


def frequency_heatmap(table, path, title=""):
    """Clipped log-odds of selection per variable (rows) against -log10(mu)."""
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    x = -np.log10(table.mu_grid)
    im = ax.imshow(table.log_odds().T, aspect="auto", cmap="gray", origin="upper",
                   extent=(x[0], x[-1], table.selected.shape[2] - 0.5, -0.5))
    ax.set_xlabel("-log10(mu)")
    ax.set_ylabel("variable")
    ax.set_title(title)
    fig.colorbar(im, ax=ax, label="log-odds")
    fig.tight_layout()
    return _save(fig, path)


def probability_lines(curves, label, path):
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    for (lab, method, m), (grid, prob) in sorted(curves.items(), key=lambda kv: str(kv[0])):
        if lab != label:
            continue
        style = dict(color="black") if method == "lasso" else dict(color="red", linestyle="--",
                                                                   alpha=0.3 + 0.7 * m / 256)
        ax.plot(-np.log10(grid), prob, **style)
    ax.set_xlabel("-log10(mu)")
    ax.set_ylabel("P(correct support)")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(label)
    fig.tight_layout()
    return _save(fig, path)


def error_lines(curves, label, path):
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    for (lab, method), pts in sorted(curves.items()):
        if lab != label:
            continue
        n, err = zip(*pts)
        ax.plot(np.log2(n), err, marker="o", label=method)
    ax.set_xlabel("log2(n)")
    ax.set_ylabel("variable selection error")
    ax.set_title(label)
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def plot_experiment(spec, tables, extras, out):
    out = Path(out)
    written = {}
    if spec.kind == "sign-frequency":
        for (label, method), table in extras["tables"].items():
            name = f"plot_{label}_{method}"
            written[name] = frequency_heatmap(table, out / f"{name}.svg", f"{method}, {label}")
    elif spec.kind == "correct-pattern":
        for label in sorted({k[0] for k in extras["curves"]}):
            name = f"plot_{label}"
            written[name] = probability_lines(extras["curves"], label, out / f"{name}.svg")
    elif spec.kind == "method-comparison":
        for label in sorted({k[0] for k in extras["curves"]}):
            name = f"plot_{label}"
            written[name] = error_lines(extras["curves"], label, out / f"{name}.svg")
    return written
