"""Optional figure rendering for CLI results, kept off the default path
so headless batch runs never import matplotlib."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _groups(bundle):
    """Split rows into (label, rows) groups by their sweep-column prefix."""
    sweep = bundle.metadata["config"].get("sweep")
    keys = sweep["keys"] if sweep else []
    n = len(keys)
    grouped: dict[tuple, list] = {}
    for row in bundle.rows:
        grouped.setdefault(tuple(row[:n]), []).append(row[n:])
    out = []
    for prefix, rows in grouped.items():
        label = ", ".join(f"{k}={v:g}" for k, v in zip(keys, prefix)) or None
        out.append((label, rows))
    return out


def render(bundle, csv_path: str) -> str | None:
    """Render the bundle to a PNG next to the CSV; returns its path."""
    stem, _ = os.path.splitext(csv_path)
    png = stem + ".png"
    cols = list(bundle.columns)
    sweep = bundle.metadata["config"].get("sweep")
    n_sweep = len(sweep["keys"]) if sweep else 0
    data_cols = cols[n_sweep:]

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    mode = bundle.mode

    if mode in ("spectrum", "spectrum-offres", "cavity-spectrum", "oracle"):
        for label, rows in _groups(bundle):
            xs = [r[0] for r in rows]
            ys = [r[1] for r in rows]
            ax.semilogy(xs, ys, label=label)
        ax.set_xlabel("probe detuning")
        ax.set_ylabel(data_cols[1])
    elif mode == "validate":
        for label, rows in _groups(bundle):
            xs = [r[0] for r in rows]
            ax.semilogy(xs, [r[1] for r in rows], label="analytic")
            ax.semilogy(xs, [r[2] for r in rows], "o", ms=3, label="oracle")
        ax.set_xlabel("probe detuning")
        ax.set_ylabel("absorption signal")
    elif mode == "coherence" and data_cols[0] == "t":
        for label, rows in _groups(bundle):
            ax.plot([r[0] for r in rows], [r[3] for r in rows], label=label)
        ax.set_xlabel("time")
        ax.set_ylabel("coherence 2|<sigma>|")
    elif mode == "coherence":
        # summary rows: ratio against the innermost sweep variable
        grouped: dict[tuple, list] = {}
        for row in bundle.rows:
            grouped.setdefault(tuple(row[: n_sweep - 1]), []).append(row)
        keys = sweep["keys"] if sweep else []
        for prefix, rows in grouped.items():
            label = ", ".join(f"{k}={v:g}" for k, v in zip(keys, prefix)) or None
            xs = [r[n_sweep - 1] for r in rows] if n_sweep else range(len(rows))
            ax.plot(xs, [r[-1] for r in rows], marker="o", ms=3, label=label)
        ax.set_xlabel(keys[-1] if keys else "run")
        ax.set_ylabel("avg coherence ratio")
    elif mode == "susceptibility":
        for label, rows in _groups(bundle):
            ax.semilogy([r[0] for r in rows], [r[1] for r in rows], label=label)
        ax.set_xlabel("frequency")
        ax.set_ylabel("|effective susceptibility|^2")
    elif mode == "quasienergies":
        for label, rows in _groups(bundle):
            offs = [r[1] for r in rows]
            ws = [r[2] for r in rows]
            markers, stems, _ = ax.stem(offs, ws, label=label)
            plt.setp(markers, markersize=3)
            plt.setp(stems, linewidth=1.0)
        ax.set_xlabel("quasienergy offset")
        ax.set_ylabel("spectral weight")
    elif mode == "sumrule":
        ax.bar([0], [bundle.rows[0][-1]])
        ax.set_xticks([0], ["residual"])
        ax.set_yscale("log")
    else:
        plt.close(fig)
        return None

    handles, labels = ax.get_legend_handles_labels()
    if labels and len(labels) <= 12:
        ax.legend(fontsize=8)
    ax.set_title(mode)
    fig.tight_layout()
    fig.savefig(png, dpi=150)
    plt.close(fig)
    return png
