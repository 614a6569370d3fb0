"""q-dependent detrended cross-correlation coefficients for pairs and panels.

rho(q, s) divides the q-order detrended cross-covariance moment by the
geometric mean of the two single-signal moments, using one shared
segmentation for all three.  For q > 0 the coefficient lies in [-1, 1];
non-positive q is rejected because the ratio can escape that range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import DegenerateDataError
from .fluctuation import (
    FORWARD,
    SegmentationConfig,
    detrended_covariances,
    fluctuation_moment,
    segment_residuals,
)
from .rolling import duration_to_samples, ordered_map, window_positions
from .series import Panel, ReturnSeries, profile

MIN_SEGMENTS = 10
_CHUNK = 128  # segments per batched-matmul block (bounds memory; fixed for determinism)


@dataclass(frozen=True)
class RhoValue:
    """One detrended cross-correlation coefficient at fixed (q, s)."""

    q: float
    s: int
    value: float
    excluded_segments: int


@dataclass(frozen=True)
class RhoMatrix:
    """Symmetric all-pairs rho(q, s) matrix over a panel.

    Diagonal is exactly 1.  ``degenerate`` lists assets whose columns carry
    no variance at this scale; their rows/columns are NaN but the matrix is
    still produced.
    """

    assets: tuple[str, ...]
    values: np.ndarray
    q: float
    s: int
    window: tuple[int, int] | None = None
    degenerate: tuple[str, ...] = ()

    @property
    def n_pairs(self) -> int:
        n = len(self.assets)
        return n * (n - 1) // 2

    def pair(self, a: str, b: str) -> float:
        i, j = self.assets.index(a), self.assets.index(b)
        return float(self.values[i, j])

    def offdiagonal(self) -> np.ndarray:
        """The n(n-1)/2 unique off-diagonal entries, row-major upper triangle."""
        iu = np.triu_indices(len(self.assets), k=1)
        return self.values[iu]

    def to_csv(self, path) -> None:
        df = pd.DataFrame(self.values, columns=list(self.assets))
        df.insert(0, "asset", list(self.assets))
        df.to_csv(path, index=False)


def _as_values(x) -> np.ndarray:
    if isinstance(x, ReturnSeries):
        return x.values
    return np.asarray(x, dtype=np.float64)


def rho_q(
    x,
    y,
    q: float,
    s: int,
    poly_degree: int = 2,
    direction: str = FORWARD,
) -> RhoValue:
    """Detrended cross-correlation coefficient of two equally long series.

    The numerator and both denominator moments share the same segmentation
    and detrending degree, which is what makes the ratio meaningful.
    """
    if q <= 0:
        raise ValueError("rho(q, s) is only defined here for q > 0")
    xv, yv = _as_values(x), _as_values(y)
    if xv.size != yv.size:
        raise ValueError("series must have equal length")
    if xv.size < 4 * s:
        raise ValueError(f"need at least 4 segments: length {xv.size} < 4 x scale {s}")
    cfg = SegmentationConfig(int(s), direction, poly_degree)
    px, py = profile(xv), profile(yv)
    cov_xy = detrended_covariances(px, py, cfg)
    cov_xx = detrended_covariances(px, px, cfg)
    cov_yy = detrended_covariances(py, py, cfg)
    m_xy, excluded = fluctuation_moment(cov_xy, q)
    m_xx, _ = fluctuation_moment(cov_xx, q)
    m_yy, _ = fluctuation_moment(cov_yy, q)
    denom = np.sqrt(m_xx * m_yy)
    if denom == 0.0 or not np.isfinite(denom):
        raise DegenerateDataError("zero denominator: a series is constant within every segment")
    return RhoValue(q=float(q), s=int(s), value=float(m_xy / denom), excluded_segments=excluded)


def _pair_moments(columns: np.ndarray, q_list, cfg: SegmentationConfig) -> np.ndarray:
    """All-pairs signed covariance moments, shape (len(q_list), N, N).

    Per-asset residuals are computed once; segment covariance matrices are
    accumulated in fixed chunks of segments so results do not depend on
    memory pressure or thread count.
    """
    n_assets = columns.shape[1]
    resids = np.stack(
        [segment_residuals(profile(columns[:, j]), cfg) for j in range(n_assets)], axis=1
    )  # (M, N, s)
    m_seg = resids.shape[0]
    s = cfg.scale
    sums = np.zeros((len(q_list), n_assets, n_assets))
    for lo in range(0, m_seg, _CHUNK):
        block = resids[lo : lo + _CHUNK]  # (m, N, s)
        f2 = block @ block.transpose(0, 2, 1) / s  # (m, N, N)
        sgn = np.sign(f2)
        absf2 = np.abs(f2)
        for k, q in enumerate(q_list):
            sums[k] += np.sum(sgn * absf2 ** (q / 2.0), axis=0)
    return sums / m_seg


def rho_matrix(
    panel: Panel,
    q: float,
    s: int,
    poly_degree: int = 2,
    direction: str = FORWARD,
    window: tuple[int, int] | None = None,
) -> RhoMatrix:
    """All-pairs rho(q, s) over an aligned return panel.

    Single-signal moments are computed once per asset and reused across the
    n(n-1)/2 pairs.  The result is exactly symmetric with a unit diagonal.
    """
    return _rho_matrices(panel.values, panel.assets, [q], s, poly_degree, direction, window)[0]


def _rho_matrices(values, assets, q_list, s, poly_degree, direction, window=None) -> list[RhoMatrix]:
    if any(q <= 0 for q in q_list):
        raise ValueError("rho(q, s) is only defined here for q > 0")
    n_assets = len(assets)
    if n_assets < 2:
        raise ValueError("need at least 2 assets")
    if values.shape[0] < 4 * s:
        raise ValueError(f"need at least 4 segments: length {values.shape[0]} < 4 x scale {s}")
    cfg = SegmentationConfig(int(s), direction, poly_degree)
    moments = _pair_moments(values, q_list, cfg)

    out = []
    for k, q in enumerate(q_list):
        m = moments[k]
        diag = np.diag(m).copy()
        degenerate = tuple(assets[j] for j in np.flatnonzero(diag <= 0.0))
        with np.errstate(invalid="ignore", divide="ignore"):
            denom = np.sqrt(np.outer(diag, diag))
            rho = np.where(denom > 0, m / denom, np.nan)
        iu = np.triu_indices(n_assets, k=1)
        rho[(iu[1], iu[0])] = rho[iu]  # exact symmetry
        np.fill_diagonal(rho, 1.0)
        for j in np.flatnonzero(diag <= 0.0):
            rho[j, :], rho[:, j] = np.nan, np.nan
            rho[j, j] = 1.0
        out.append(
            RhoMatrix(tuple(assets), rho, float(q), int(s), window=window, degenerate=degenerate)
        )
    return out


@dataclass(frozen=True)
class RhoTimeline:
    """rho(q, s) through a moving window for every configured (q, s)."""

    window_ends: np.ndarray
    q_values: tuple[float, ...]
    s_values: tuple[int, ...]
    values: dict  # (q, s) -> float array over windows
    excluded: dict  # (q, s) -> int array over windows
    flags: tuple[str, ...]

    def to_csv(self, path) -> None:
        rows = []
        for i, end in enumerate(self.window_ends):
            for q in self.q_values:
                for s in self.s_values:
                    rows.append(
                        {
                            "window_end": int(end),
                            "q": q,
                            "s": s,
                            "rho": self.values[(q, s)][i],
                            "excluded_segments": int(self.excluded[(q, s)][i]),
                        }
                    )
        pd.DataFrame(rows, columns=["window_end", "q", "s", "rho", "excluded_segments"]).to_csv(
            path, index=False
        )


def rolling_rho(
    x: ReturnSeries,
    y: ReturnSeries,
    window: int,
    step: int,
    q_set=(1.0, 4.0),
    s_set=(10, 360),
    poly_degree: int = 2,
    direction: str = FORWARD,
    threads: int = 1,
) -> RhoTimeline:
    """rho(q, s) between two aligned return series in a moving window.

    The window must hold at least MIN_SEGMENTS segments of the largest
    scale; degenerate windows are flagged and carry NaN.
    """
    if not np.array_equal(x.timestamps, y.timestamps):
        raise ValueError("series must share a timestamp grid (synchronize first)")
    w = duration_to_samples(window, x.sampling_interval)
    p = duration_to_samples(step, x.sampling_interval)
    q_set = tuple(float(q) for q in q_set)
    s_set = tuple(int(s) for s in s_set)
    worst = max(s_set)
    if w // worst < MIN_SEGMENTS:
        raise ValueError(
            f"window of {w} samples holds only {w // worst} segments of scale {worst}; "
            f"need at least {MIN_SEGMENTS}"
        )
    positions = window_positions(len(x), w, p)

    def work(pos):
        lo, hi = pos
        px, py = profile(x.values[lo:hi]), profile(y.values[lo:hi])
        res, flag = {}, ""
        for s in s_set:
            cfg = SegmentationConfig(int(s), direction, poly_degree)
            cov_xy = detrended_covariances(px, py, cfg)
            cov_xx = detrended_covariances(px, px, cfg)
            cov_yy = detrended_covariances(py, py, cfg)
            for q in q_set:
                try:
                    m_xy, excluded = fluctuation_moment(cov_xy, q)
                    denom = np.sqrt(fluctuation_moment(cov_xx, q)[0] * fluctuation_moment(cov_yy, q)[0])
                    if denom == 0.0 or not np.isfinite(denom):
                        raise DegenerateDataError("zero denominator")
                    res[(q, s)] = (float(m_xy / denom), excluded)
                except DegenerateDataError:
                    res[(q, s)] = (np.nan, 0)
                    flag = "degenerate"
        return res, flag

    results = ordered_map(work, positions, threads)
    ends = np.array([x.timestamps[hi - 1] for _, hi in positions], dtype=np.int64)
    values = {key: np.full(len(positions), np.nan) for key in ((q, s) for q in q_set for s in s_set)}
    excluded = {key: np.zeros(len(positions), dtype=np.int64) for key in values}
    flags = []
    for i, (res, flag) in enumerate(results):
        flags.append(flag)
        for key, (val, exc) in res.items():
            values[key][i] = val
            excluded[key][i] = exc
    return RhoTimeline(ends, q_set, s_set, values, excluded, tuple(flags))
