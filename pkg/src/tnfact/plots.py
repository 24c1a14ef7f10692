"""Optional figure rendering for the report paths.

CSV files remain the canonical command output; these helpers draw the
companion figures when a command is invoked with --plot. The Agg backend
keeps everything headless.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def train_curves(report, path):
    """NLL per epoch for each split in a TrainReport."""
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    splits = sorted({s for _, s, _, _ in report.history})
    for split in splits:
        points = [(e, v) for e, s, v, _ in report.history if s == split]
        ax.plot(*zip(*points), marker="o", ms=3, label=split)
    ax.set_xlabel("epoch")
    ax.set_ylabel("NLL per sample")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def factorize_curves(rows, path, x="rank"):
    """Mean KL against rank (or parameter count) per model kind.

    ``rows`` are dicts with keys kind, rank, n_real_params, mean_kl, std_kl.
    """
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    kinds = sorted({r["kind"] for r in rows})
    for kind in kinds:
        pts = sorted((r[x], r["mean_kl"], r["std_kl"])
                     for r in rows if r["kind"] == kind)
        xs = [p[0] for p in pts]
        ys = [max(p[1], 1e-16) for p in pts]
        es = [p[2] for p in pts]
        ax.errorbar(xs, ys, yerr=es, marker="o", ms=3, capsize=2, label=kind)
    ax.set_yscale("log")
    ax.set_xlabel("rank" if x == "rank" else "number of real parameters")
    ax.set_ylabel("KL divergence")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
