"""Power-law exponents of return-magnitude distribution tails.

Fits the exponent gamma of P(X > |r|) ~ |r|^-gamma on the largest
magnitudes, by Hill's maximum-likelihood estimator or a log-log
least-squares fit of the empirical survival function, and classifies the
result against the Levy-stability boundary gamma = 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import DegenerateDataError
from .rolling import duration_to_samples, ordered_map, window_positions
from .series import ReturnSeries

HILL = "hill"
LS_LOGLOG = "ls_loglog"
LEVY_STABLE = "levy_stable"
UNSTABLE = "unstable"

LOW_SAMPLE_K = 50
LEVY_BOUNDARY = 2.0


@dataclass(frozen=True)
class TailFit:
    """A fitted tail exponent.

    ``k`` is the number of order statistics used, ``threshold`` the
    smallest magnitude included.  Fits with k < 50 carry ``low_sample``.
    """

    gamma: float
    tail_fraction: float
    k: int
    threshold: float
    method: str
    low_sample: bool


def fit_tail(returns, tail_fraction: float = 0.01, method: str = HILL) -> TailFit:
    """Fit gamma on the largest ``tail_fraction`` of absolute values.

    Accepts a ReturnSeries or raw magnitudes.  Zero magnitudes are dropped
    first (one-minute data is full of zero returns); positive and negative
    tails are pooled.
    """
    if not 0 < tail_fraction < 1:
        raise ValueError("tail_fraction must be in (0, 1)")
    if method not in (HILL, LS_LOGLOG):
        raise ValueError(f"unknown method {method!r}")
    if isinstance(returns, ReturnSeries):
        returns = returns.values
    mags = np.abs(np.asarray(returns, dtype=np.float64))
    mags = mags[mags > 0]
    n = mags.size
    k = int(math.ceil(tail_fraction * n))
    if n < 2 or k < 1 or k >= n:
        raise ValueError(f"insufficient samples: {n} magnitudes for tail fraction {tail_fraction}")
    x = np.sort(mags)[::-1]
    threshold = float(x[k])  # x_{k+1}, the first excluded order statistic
    if threshold == 0.0:
        raise DegenerateDataError("ties at zero magnitude inside the tail")

    if method == HILL:
        denom = float(np.sum(np.log(x[:k] / threshold)))
        if denom == 0.0:
            raise DegenerateDataError("all tail magnitudes equal; Hill estimator undefined")
        gamma = k / denom
    else:
        # empirical survival at the i-th largest magnitude is i/n
        log_x = np.log(x[:k])
        log_p = np.log(np.arange(1, k + 1) / n)
        slope, _ = np.polyfit(log_x, log_p, 1)
        gamma = -float(slope)
        if gamma <= 0:
            raise DegenerateDataError("log-log tail fit shows no power-law decay")
    return TailFit(
        gamma=float(gamma),
        tail_fraction=tail_fraction,
        k=k,
        threshold=threshold,
        method=method,
        low_sample=k < LOW_SAMPLE_K,
    )


def classify_regime(fit: TailFit) -> str:
    """Levy-stable iff gamma <= 2 (boundary inclusive), else unstable."""
    if not np.isfinite(fit.gamma) or fit.gamma <= 0:
        raise ValueError("classify_regime needs a valid fit")
    return LEVY_STABLE if fit.gamma <= LEVY_BOUNDARY else UNSTABLE


@dataclass(frozen=True)
class TailTimeline:
    """Per-window tail fits, keyed by window end."""

    window_ends: np.ndarray
    gamma: np.ndarray
    k: np.ndarray
    threshold: np.ndarray
    method: str
    regime: tuple[str, ...]
    flags: tuple[str, ...]

    def to_csv(self, path) -> None:
        pd.DataFrame(
            {
                "window_end": self.window_ends,
                "gamma": self.gamma,
                "k": self.k,
                "threshold": self.threshold,
                "method": [self.method] * self.window_ends.size,
                "regime": list(self.regime),
                "flags": list(self.flags),
            }
        ).to_csv(path, index=False)


def rolling_tail(
    series: ReturnSeries,
    window: int,
    step: int,
    tail_fraction: float = 0.01,
    method: str = HILL,
    threads: int = 1,
) -> TailTimeline:
    """Tail exponents in a moving window; low-sample windows are flagged."""
    w = duration_to_samples(window, series.sampling_interval)
    p = duration_to_samples(step, series.sampling_interval)
    positions = window_positions(len(series), w, p)

    def work(pos):
        lo, hi = pos
        try:
            fit = fit_tail(series.values[lo:hi], tail_fraction, method)
        except (ValueError, DegenerateDataError) as exc:
            return None, type(exc).__name__
        return fit, ("low_sample" if fit.low_sample else "")

    results = ordered_map(work, positions, threads)
    n = len(positions)
    ends = np.array([series.timestamps[hi - 1] for _, hi in positions], dtype=np.int64)
    gamma = np.full(n, np.nan)
    kk = np.zeros(n, dtype=np.int64)
    thr = np.full(n, np.nan)
    regime, flags = [], []
    for i, (fit, flag) in enumerate(results):
        flags.append(flag)
        if fit is None:
            regime.append("")
            continue
        gamma[i] = fit.gamma
        kk[i] = fit.k
        thr[i] = fit.threshold
        regime.append(classify_regime(fit))
    return TailTimeline(ends, gamma, kk, thr, method, tuple(regime), tuple(flags))
