#!/usr/bin/env python3
"""Plot rolling singularity-spectrum summaries produced by the spectrum
block: alpha_min / alpha0 / alpha_max bands plus the width Delta-alpha.

Usage: python plot_spectrum.py out/spectrum_BTC.csv [plot.png]
"""
import sys

import matplotlib.pyplot as plt
import pandas as pd

path = sys.argv[1]
out = sys.argv[2] if len(sys.argv) > 2 else None
df = pd.read_csv(path)
t = pd.to_datetime(df["window_end"], unit="ms")

fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(10, 6))
ax1.plot(t, df["alpha_max"], label=r"$\alpha_{max}$", color="tab:blue")
ax1.plot(t, df["alpha0"], label=r"$\alpha_0$", color="tab:red")
ax1.plot(t, df["alpha_min"], label=r"$\alpha_{min}$", color="tab:green")
ax1.fill_between(t, df["alpha_min"], df["alpha_max"], alpha=0.15)
ax1.set_ylabel(r"$\alpha$")
ax1.legend(loc="upper right")
ax1.set_title(path)

ax2.plot(t, df["delta_alpha"], color="black")
ax2.set_ylabel(r"$\Delta\alpha$")
ax2.set_xlabel("window end")

fig.tight_layout()
if out:
    fig.savefig(out, dpi=150)
else:
    plt.show()
