#!/usr/bin/env python3
"""Plot rolling detrended cross-correlation timelines for one pair, one
panel per (q, s).

Usage: python plot_rho.py out/rho_BTC__SP500.csv [plot.png]
"""
import sys

import matplotlib.pyplot as plt
import pandas as pd

path = sys.argv[1]
out = sys.argv[2] if len(sys.argv) > 2 else None
df = pd.read_csv(path)
df["t"] = pd.to_datetime(df["window_end"], unit="ms")

groups = list(df.groupby(["q", "s"]))
fig, axes = plt.subplots(len(groups), 1, sharex=True, figsize=(10, 2.2 * len(groups)))
if len(groups) == 1:
    axes = [axes]
for ax, ((q, s), grp) in zip(axes, groups):
    ax.plot(grp["t"], grp["rho"], color="tab:blue")
    ax.axhline(0.0, color="gray", lw=0.5)
    ax.set_ylim(-1, 1)
    ax.set_ylabel(rf"$\rho$(q={q:g}, s={s})")
axes[-1].set_xlabel("window end")
axes[0].set_title(path)

fig.tight_layout()
if out:
    fig.savefig(out, dpi=150)
else:
    plt.show()
