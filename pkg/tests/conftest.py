"""Shared fixtures and independent reference implementations.

The reference implementations here are deliberately naive (per-segment
polyfit loops, brute-force enumeration) so they stay independent of the
vectorized library paths they check.
"""

import numpy as np
import pytest

from mfpanel.series import ReturnSeries


def naive_dfa_fluctuation(x, q, s, m=2):
    """Textbook single-signal fluctuation function: per-segment polyfit on
    abscissae 1..s, then the q-th order average.  Straight loops, no
    shared-profile tricks."""
    x = np.asarray(x, dtype=np.float64)
    prof = np.cumsum(x - x.mean())
    n_seg = prof.size // s
    k = np.arange(1, s + 1, dtype=np.float64)
    f2 = np.empty(n_seg)
    for nu in range(n_seg):
        seg = prof[nu * s : (nu + 1) * s]
        coef = np.polyfit(k, seg, m)
        resid = seg - np.polyval(coef, k)
        f2[nu] = np.mean(resid**2)
    return np.mean(f2 ** (q / 2.0)) ** (1.0 / q)


def naive_lsq_residuals(y, m):
    """Least squares by explicit normal equations on abscissae 1..s."""
    y = np.asarray(y, dtype=np.float64)
    s = y.size
    k = np.arange(1, s + 1, dtype=np.float64)
    A = np.vander(k, m + 1, increasing=True)
    coef = np.linalg.solve(A.T @ A, A.T @ y)
    return y - A @ coef


def rank_correlation(a, b):
    """Spearman rank correlation via numpy only."""
    ra = np.argsort(np.argsort(a)).astype(float)
    rb = np.argsort(np.argsort(b)).astype(float)
    return float(np.corrcoef(ra, rb)[0, 1])


def make_return_series(values, interval_ms=60_000, asset="X", start_ms=0):
    """Wrap raw values as a ReturnSeries on a uniform grid (values are
    z-scored first; ReturnSeries carries normalized data by contract)."""
    v = np.asarray(values, dtype=np.float64)
    sd = v.std()
    if sd == 0:
        raise ValueError("constant test series")
    z = (v - v.mean()) / sd
    ts = start_ms + interval_ms * np.arange(v.size, dtype=np.int64)
    return ReturnSeries(asset, ts, z, raw_mean=float(v.mean()), raw_std=float(sd),
                        sampling_interval=interval_ms)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(20240817))
