#!/usr/bin/env python3
"""Plot median estimation error against budget from an `hdc summarize` CSV.

usage: plot.py summary.csv out.png
"""
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def main(src, dst):
    df = pd.read_csv(src)
    groups = df.groupby(["d", "rho"])
    fig, axes = plt.subplots(1, len(groups), figsize=(5 * len(groups), 4), squeeze=False)
    for ax, ((d, rho), g) in zip(axes[0], groups):
        for method, m in g.groupby("method"):
            m = m.sort_values("budget_or_T")
            ax.plot(m["budget_or_T"], m["median_error"], marker="o", label=method)
            ax.fill_between(m["budget_or_T"], m["p05_error"], m["p95_error"], alpha=0.2)
        ax.set_yscale("log")
        ax.set_xlabel("queries")
        ax.set_ylabel("estimation error")
        ax.set_title(f"d={d}, rho={rho}")
        ax.legend()
    fig.tight_layout()
    fig.savefig(dst, dpi=150)


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    main(sys.argv[1], sys.argv[2])
