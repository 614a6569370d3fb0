"""Segmentation, polynomial detrending, and q-order fluctuation functions.

The same machinery serves one signal (fluctuation analysis) and a signal
pair (detrended cross-covariances): segment the profiles, remove a
polynomial trend from each segment, and average signed covariance powers.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import pandas as pd

from .errors import DegenerateDataError
from .series import Profile, ReturnSeries, profile

FORWARD = "forward"
BIDIRECTIONAL = "bidirectional"

# Relative scale of the q<0 exclusion floor: segments whose |covariance|
# falls below ZERO_FLOOR_REL x signal variance would blow up negative
# moments without carrying information.
ZERO_FLOOR_REL = 1e-15


@dataclass(frozen=True)
class SegmentationConfig:
    """How profiles are cut and detrended at one scale.

    ``scale`` is the segment length in samples; the polynomial fit needs
    ``scale >= poly_degree + 2`` to stay overdetermined.  Forward
    segmentation covers floor(T/s) disjoint segments from the start;
    bidirectional appends the same count walked from the series end.
    """

    scale: int
    direction: str = FORWARD
    poly_degree: int = 2

    def __post_init__(self):
        if self.poly_degree < 0:
            raise ValueError("poly_degree must be >= 0")
        if self.scale < self.poly_degree + 2:
            raise ValueError(f"scale {self.scale} must be >= poly_degree + 2 = {self.poly_degree + 2}")
        if self.direction not in (FORWARD, BIDIRECTIONAL):
            raise ValueError(f"direction must be {FORWARD!r} or {BIDIRECTIONAL!r}")

    def segment_count(self, length: int) -> int:
        base = length // self.scale
        return 2 * base if self.direction == BIDIRECTIONAL else base


@dataclass(frozen=True)
class SegmentCovariances:
    """Per-segment detrended covariances F2(nu, s) at one scale.

    Signed in the cross case; non-negative when both signals coincide.
    ``zero_floor`` is the |F2| threshold below which segments are excluded
    from negative-q moments.
    """

    values: np.ndarray
    scale: int
    zero_floor: float

    @property
    def segment_count(self) -> int:
        return self.values.size


@lru_cache(maxsize=128)
def _design(scale: int, degree: int):
    """Vandermonde design matrix and its pseudoinverse on centered,
    scaled abscissae (conditioning; same least-squares fit as on 1..s)."""
    k = np.arange(1, scale + 1, dtype=np.float64)
    t = (2.0 * k - (scale + 1)) / (scale - 1) if scale > 1 else np.zeros(1)
    A = np.vander(t, degree + 1, increasing=True)
    pinv = np.linalg.pinv(A)
    A.setflags(write=False)
    pinv.setflags(write=False)
    return A, pinv


def segment_residuals(prof: Profile | np.ndarray, cfg: SegmentationConfig) -> np.ndarray:
    """Residuals of least-squares polynomial fits per segment, shape (M, s).

    Rows follow segmentation order: forward segments first, then (in
    bidirectional mode) segments counted from the series end.
    """
    x = prof.values if isinstance(prof, Profile) else np.asarray(prof, dtype=np.float64)
    T = x.size
    s = cfg.scale
    if T < s:
        raise ValueError(f"series length {T} is shorter than scale {s}")
    M = T // s
    segs = x[: M * s].reshape(M, s)
    if cfg.direction == BIDIRECTIONAL:
        tail = x[T - M * s :].reshape(M, s)[::-1]
        segs = np.concatenate([segs, tail], axis=0)
    A, pinv = _design(s, cfg.poly_degree)
    coef = segs @ pinv.T
    return segs - coef @ A.T


def _increment_variance(prof: Profile) -> float:
    """Variance of the series underlying a profile (profiles store
    cumulative sums of mean-subtracted values)."""
    inc = np.diff(prof.values, prepend=0.0)
    return float(np.mean(inc * inc))


def detrended_covariances(
    x_profile: Profile, y_profile: Profile, cfg: SegmentationConfig
) -> SegmentCovariances:
    """Covariance of detrended profile residuals per segment.

    Each segment gets independent degree-m fits to X and Y; the segment
    value is the mean over the segment of the residual product.  Equal
    profiles give a mean of squares, hence non-negative values.
    """
    if x_profile.length != y_profile.length:
        raise ValueError("profiles must have equal length")
    rx = segment_residuals(x_profile, cfg)
    ry = rx if y_profile is x_profile else segment_residuals(y_profile, cfg)
    values = np.mean(rx * ry, axis=1)
    floor = ZERO_FLOOR_REL * np.sqrt(
        _increment_variance(x_profile) * _increment_variance(y_profile)
    )
    return SegmentCovariances(values=values, scale=cfg.scale, zero_floor=floor)


def fluctuation_moment(cov: SegmentCovariances, q: float) -> tuple[float, int]:
    """Average signed covariance power: mean over segments of
    sign(F2) |F2|^(q/2).

    Returns the moment and the number of segments excluded.  For q < 0,
    segments with |F2| below the zero floor are dropped from the average;
    with every segment excluded the moment does not exist.
    """
    if q == 0:
        raise ValueError("q must be nonzero")
    if cov.segment_count == 0:
        raise ValueError("need at least one segment")
    f2 = cov.values
    if q < 0:
        keep = np.abs(f2) > cov.zero_floor
        excluded = int(f2.size - keep.sum())
        if excluded == f2.size:
            raise DegenerateDataError("all segments excluded: covariances vanish at this scale")
        f2 = f2[keep]
    else:
        excluded = 0
    moment = float(np.mean(np.sign(f2) * np.abs(f2) ** (q / 2.0)))
    return moment, excluded


def signed_root(value: float, q: float) -> float:
    """sign(v) |v|^(1/q): the continuous odd extension of v^(1/q), needed
    because negative cross-covariance moments have no real q-th root."""
    return float(np.sign(value) * np.abs(value) ** (1.0 / q))


def fluctuation_function(cov: SegmentCovariances, q: float) -> float:
    """q-order fluctuation function F(q, s) at one scale."""
    moment, _ = fluctuation_moment(cov, q)
    return signed_root(moment, q)


@dataclass(frozen=True)
class FluctuationSurface:
    """F(q, s) on a (scale x order) grid.

    ``values[i, j]`` is F(q_grid[j], s_grid[i]); ``excluded`` counts
    segments dropped from negative-q averages; ``invalid`` marks grid
    points where no moment exists.  ``single_signal`` records whether both
    inputs coincided, in which case all valid values are non-negative.
    """

    q_grid: np.ndarray
    s_grid: np.ndarray
    values: np.ndarray  # (len(s_grid), len(q_grid))
    excluded: np.ndarray
    invalid: np.ndarray
    single_signal: bool

    def to_csv(self, path, sidecar_path=None) -> None:
        """Rows = scales, columns = orders; optional exclusion-count sidecar."""
        cols = [f"q={q:g}" for q in self.q_grid]
        df = pd.DataFrame(self.values, columns=cols)
        df.insert(0, "s", self.s_grid)
        df.to_csv(path, index=False)
        if sidecar_path is not None:
            side = pd.DataFrame(self.excluded, columns=cols)
            side.insert(0, "s", self.s_grid)
            side.to_csv(sidecar_path, index=False)


def _as_values(x) -> np.ndarray:
    if isinstance(x, ReturnSeries):
        return x.values
    return np.asarray(x, dtype=np.float64)


def fluctuation_surface(
    x,
    y=None,
    q_grid=None,
    s_grid=None,
    poly_degree: int = 2,
    direction: str = FORWARD,
) -> FluctuationSurface:
    """Compute F(q, s) for every point of a (q, s) grid.

    ``x`` and ``y`` are return series or plain arrays; omitting ``y`` (or
    passing the same data) selects the single-signal path where all values
    are non-negative.  Grid points whose moment cannot be formed are
    flagged invalid instead of failing the whole surface.
    """
    xv = _as_values(x)
    yv = xv if y is None else _as_values(y)
    single = yv is xv or np.array_equal(xv, yv)
    if single:
        yv = xv
    if xv.size != yv.size:
        raise ValueError("series must have equal length")

    q_grid = np.asarray(q_grid, dtype=np.float64)
    s_grid = np.asarray(s_grid, dtype=np.int64)
    if q_grid.size == 0 or s_grid.size == 0:
        raise ValueError("q_grid and s_grid must be nonempty")
    if np.any(q_grid == 0):
        raise ValueError("q = 0 is not admissible in the fluctuation function")
    if int(s_grid.max()) > xv.size // 4:
        raise ValueError(f"largest scale {int(s_grid.max())} leaves fewer than 4 segments (T={xv.size})")

    px = profile(xv)
    py = px if single else profile(yv)

    values = np.full((s_grid.size, q_grid.size), np.nan)
    excluded = np.zeros((s_grid.size, q_grid.size), dtype=np.int64)
    invalid = np.zeros((s_grid.size, q_grid.size), dtype=bool)
    for i, s in enumerate(s_grid):
        cov = detrended_covariances(px, py, SegmentationConfig(int(s), direction, poly_degree))
        for j, q in enumerate(q_grid):
            try:
                moment, exc = fluctuation_moment(cov, float(q))
            except DegenerateDataError:
                invalid[i, j] = True
                excluded[i, j] = cov.segment_count
                continue
            values[i, j] = signed_root(moment, float(q))
            excluded[i, j] = exc
            if not np.isfinite(values[i, j]):
                invalid[i, j] = True
    return FluctuationSurface(q_grid, s_grid, values, excluded, invalid, single)


def default_s_grid(length: int, s_min: int = 10, n_scales: int = 20) -> np.ndarray:
    """~n_scales logarithmically spaced integer scales in [s_min, length/4]."""
    s_max = length // 4
    if s_max < s_min:
        raise ValueError(f"series too short: length/4 = {s_max} < s_min = {s_min}")
    raw = np.exp(np.linspace(np.log(s_min), np.log(s_max), n_scales))
    return np.unique(np.round(raw).astype(np.int64))
