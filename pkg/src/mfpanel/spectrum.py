"""Scaling-exponent fits, singularity spectra, and the rolling spectrum
pipeline.

The generalized Hurst exponent h(q) is the log-log slope of F(q, s)
against s; the singularity spectrum follows from the Legendre-type
transform alpha = h + q h', f(alpha) = q (alpha - h) + 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import DegenerateDataError
from .fluctuation import FORWARD, FluctuationSurface, default_s_grid, fluctuation_surface
from .rolling import duration_to_samples, ordered_map, window_positions
from .series import ReturnSeries

R2_MIN_DEFAULT = 0.98


def default_q_grid() -> np.ndarray:
    """Orders -3..3 in steps of 0.2 with q = 0 removed (30 values).

    Beyond |q| = 3 the moments of heavy-tailed return distributions can
    diverge, so wider grids are left to the caller.
    """
    grid = np.linspace(-3.0, 3.0, 31)
    return np.delete(grid, 15)


def default_fit_range(length: int, s_min: int = 10) -> tuple[int, int]:
    """Default log-log fit window: scales in [s_min, length/10]."""
    return (s_min, max(length // 10, s_min + 1))


@dataclass(frozen=True)
class ScalingExponents:
    """Log-log slopes of F(q, s) per order q, with goodness of fit.

    ``non_scaling`` marks orders whose fit used fewer than 4 scales or came
    in under the r-squared threshold.  ``n_negative`` counts negative
    surface values met inside the fit range (cross-correlation case only;
    their magnitudes enter the fit, the signs are diagnostics).
    """

    q_grid: np.ndarray
    exponents: np.ndarray
    fit_r2: np.ndarray
    fit_range: tuple[int, int]
    non_scaling: np.ndarray
    n_negative: np.ndarray


def fit_scaling(
    surface: FluctuationSurface, fit_range: tuple[int, int], r2_min: float = R2_MIN_DEFAULT
) -> ScalingExponents:
    """Ordinary least squares of log F(q, s) on log s inside ``fit_range``.

    Single-signal surfaces must be positive at the fitted points; grid
    points that are invalid, zero, or (cross case) negative are dropped per
    order, and orders left with fewer than 4 scales are flagged rather than
    failing the fit.
    """
    s_lo, s_hi = fit_range
    in_range = (surface.s_grid >= s_lo) & (surface.s_grid <= s_hi)
    if int(in_range.sum()) < 4:
        raise ValueError(f"fewer than 4 scales inside fit range [{s_lo}, {s_hi}]")
    log_s_all = np.log(surface.s_grid.astype(np.float64))

    nq = surface.q_grid.size
    exponents = np.full(nq, np.nan)
    r2 = np.full(nq, np.nan)
    flagged = np.zeros(nq, dtype=bool)
    n_negative = np.zeros(nq, dtype=np.int64)
    for j in range(nq):
        col = surface.values[:, j]
        usable = in_range & ~surface.invalid[:, j] & np.isfinite(col) & (col != 0.0)
        n_negative[j] = int(np.sum(usable & (col < 0)))
        if surface.single_signal:
            usable &= col > 0
        if int(usable.sum()) < 4:
            flagged[j] = True
            continue
        y = np.log(np.abs(col[usable]))
        x = log_s_all[usable]
        slope, intercept = np.polyfit(x, y, 1)
        resid = y - (slope * x + intercept)
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        r2[j] = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
        exponents[j] = slope
        if r2[j] < r2_min:
            flagged[j] = True
    return ScalingExponents(surface.q_grid, exponents, r2, (s_lo, s_hi), flagged, n_negative)


@dataclass(frozen=True)
class SingularitySpectrum:
    """Singularity spectrum (alpha, f(alpha)) and its shape summary.

    ``delta_alpha`` is the spectrum width; ``asymmetry`` is the normalized
    shoulder-length difference ((a_max - a0) - (a0 - a_min)) / width, so
    negative values mean a dominant left shoulder (strong large-amplitude
    multifractality).  ``non_concave`` flags spectra whose alpha(q) is not
    monotonically decreasing, where f can exceed 1 and the width loses its
    usual reading.
    """

    q_grid: np.ndarray
    alpha: np.ndarray
    f_alpha: np.ndarray
    alpha_min: float
    alpha0: float
    alpha_max: float
    delta_alpha: float
    asymmetry: float
    non_concave: bool


def singularity_spectrum(exps: ScalingExponents) -> SingularitySpectrum:
    """Transform h(q) into the singularity spectrum.

    h'(q) comes from central finite differences on the q grid (one-sided at
    the ends); alpha0 is linearly interpolated across the q = 0 gap, which
    the grid excludes by construction.
    """
    q = np.asarray(exps.q_grid, dtype=np.float64)
    h = np.asarray(exps.exponents, dtype=np.float64)
    ok = np.isfinite(h)
    q, h = q[ok], h[ok]
    if q.size < 5:
        raise DegenerateDataError(f"need h(q) on >= 5 orders, have {q.size}")
    if not (np.diff(q) > 0).all():
        raise ValueError("q grid must be strictly increasing")
    if not ((q < 0).any() and (q > 0).any()):
        raise ValueError("q grid must straddle 0 to locate alpha0")

    dh = np.gradient(h, q)
    alpha = h + q * dh
    f_alpha = q * (alpha - h) + 1.0

    i_neg = int(np.flatnonzero(q < 0)[-1])
    i_pos = int(np.flatnonzero(q > 0)[0])
    w = (0.0 - q[i_neg]) / (q[i_pos] - q[i_neg])
    alpha0 = float(alpha[i_neg] + w * (alpha[i_pos] - alpha[i_neg]))

    # For monotonically decreasing alpha(q) these are alpha at q_max / q_min.
    alpha_min = float(alpha.min())
    alpha_max = float(alpha.max())
    delta = alpha_max - alpha_min
    asym = ((alpha_max - alpha0) - (alpha0 - alpha_min)) / delta if delta > 0 else 0.0
    non_concave = bool((np.diff(alpha) > 1e-9).any())
    return SingularitySpectrum(
        q_grid=q,
        alpha=alpha,
        f_alpha=f_alpha,
        alpha_min=alpha_min,
        alpha0=alpha0,
        alpha_max=alpha_max,
        delta_alpha=float(delta),
        asymmetry=float(asym),
        non_concave=non_concave,
    )


@dataclass(frozen=True)
class SpectrumTimeline:
    """Per-window singularity-spectrum summaries, keyed by window end."""

    window_ends: np.ndarray  # int64 epoch ms
    alpha_min: np.ndarray
    alpha0: np.ndarray
    alpha_max: np.ndarray
    delta_alpha: np.ndarray
    asymmetry: np.ndarray
    min_r2: np.ndarray
    flags: tuple[str, ...]

    def __len__(self):
        return self.window_ends.size

    def to_csv(self, path) -> None:
        pd.DataFrame(
            {
                "window_end": self.window_ends,
                "alpha_min": self.alpha_min,
                "alpha0": self.alpha0,
                "alpha_max": self.alpha_max,
                "delta_alpha": self.delta_alpha,
                "asymmetry": self.asymmetry,
                "min_r2": self.min_r2,
                "flags": list(self.flags),
            }
        ).to_csv(path, index=False)


def _window_spectrum(values: np.ndarray, q_grid, s_grid, fit_range, poly_degree, direction, r2_min):
    """One window: re-normalize, build the surface, fit, transform."""
    sigma = values.std()
    if sigma == 0.0 or values.max() == values.min():
        return None, "degenerate"
    z = (values - values.mean()) / sigma
    surf = fluctuation_surface(z, None, q_grid, s_grid, poly_degree, direction)
    exps = fit_scaling(surf, fit_range, r2_min)
    try:
        spec = singularity_spectrum(exps)
    except (DegenerateDataError, ValueError):
        # too few usable orders survived the fit (e.g. trend-only windows
        # losing every q < 0 point); report the window instead of failing
        return None, "non_scaling"
    flags = []
    n_flagged = int(exps.non_scaling.sum())
    if n_flagged:
        flags.append(f"non_scaling:{n_flagged}")
    if spec.non_concave:
        flags.append("non_concave")
    finite_r2 = exps.fit_r2[np.isfinite(exps.fit_r2)]
    min_r2 = float(finite_r2.min()) if finite_r2.size else np.nan
    return (spec, min_r2), ";".join(flags)


def rolling_spectrum(
    series: ReturnSeries,
    window: int,
    step: int,
    q_grid=None,
    s_grid=None,
    fit_range: tuple[int, int] | None = None,
    poly_degree: int = 2,
    direction: str = FORWARD,
    r2_min: float = R2_MIN_DEFAULT,
    threads: int = 1,
) -> SpectrumTimeline:
    """Singularity-spectrum summaries in a moving window.

    ``window`` and ``step`` are wall-clock durations in milliseconds,
    converted to sample counts through the sampling interval.  Returns are
    re-normalized inside each window; each record is keyed by the timestamp
    of the window's last sample.  Degenerate (constant) windows yield a
    flagged NaN record instead of aborting the sweep.
    """
    w = duration_to_samples(window, series.sampling_interval)
    p = duration_to_samples(step, series.sampling_interval)
    positions = window_positions(len(series), w, p)
    if q_grid is None:
        q_grid = default_q_grid()
    if s_grid is None:
        s_grid = default_s_grid(w)
    if fit_range is None:
        fit_range = default_fit_range(w)

    def work(pos):
        lo, hi = pos
        return _window_spectrum(
            series.values[lo:hi], q_grid, s_grid, fit_range, poly_degree, direction, r2_min
        )

    results = ordered_map(work, positions, threads)

    n = len(positions)
    ends = np.array([series.timestamps[hi - 1] for _, hi in positions], dtype=np.int64)
    cols = {name: np.full(n, np.nan) for name in ("alpha_min", "alpha0", "alpha_max", "delta_alpha", "asymmetry", "min_r2")}
    flags = []
    for i, (payload, flag) in enumerate(results):
        flags.append(flag)
        if payload is None:
            continue
        spec, min_r2 = payload
        cols["alpha_min"][i] = spec.alpha_min
        cols["alpha0"][i] = spec.alpha0
        cols["alpha_max"][i] = spec.alpha_max
        cols["delta_alpha"][i] = spec.delta_alpha
        cols["asymmetry"][i] = spec.asymmetry
        cols["min_r2"][i] = min_r2
    return SpectrumTimeline(window_ends=ends, flags=tuple(flags), **cols)
