#!/usr/bin/env python3
"""Plot rolling MST network metrics: mean path length, mean correlation,
and maximum node degree, one curve per (q, s) combination.

Usage: python plot_network.py out/mst_metrics.csv [plot.png]
"""
import sys

import matplotlib.pyplot as plt
import pandas as pd

path = sys.argv[1]
out = sys.argv[2] if len(sys.argv) > 2 else None
df = pd.read_csv(path)
df["t"] = pd.to_datetime(df["window_end"], unit="ms")

fig, axes = plt.subplots(3, 1, sharex=True, figsize=(10, 8))
for (q, s), grp in df.groupby(["q", "s"]):
    label = f"q={q:g}, s={s}"
    axes[0].plot(grp["t"], grp["mean_L"], label=label)
    axes[1].plot(grp["t"], grp["mean_rho"], label=label)
    axes[2].plot(grp["t"], grp["k_max"], label=label)
axes[0].set_ylabel(r"$\langle L \rangle$")
axes[1].set_ylabel(r"$\langle \rho \rangle$")
axes[2].set_ylabel(r"$k_{max}$")
axes[2].set_xlabel("window end")
axes[0].legend(loc="upper right", fontsize=8)
axes[0].set_title(path)

fig.tight_layout()
if out:
    fig.savefig(out, dpi=150)
else:
    plt.show()
