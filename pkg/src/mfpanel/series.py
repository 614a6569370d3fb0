"""Price ingestion, panel synchronization, normalized returns, and profiles.

All timestamps are integer epoch milliseconds.  Operations are pure: they
never mutate their inputs and return new objects.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import AlignmentError, DegenerateDataError, IngestError

MINUTE_MS = 60_000

_INT_RE = re.compile(r"[+-]?\d+")


@dataclass(frozen=True)
class CsvSchema:
    """Column mapping for price CSV files.

    ``asset`` names an optional column for files holding several assets at
    once; leave it ``None`` for single-asset files.
    """

    timestamp: str = "timestamp"
    price: str = "price"
    asset: str | None = None


@dataclass(frozen=True)
class PriceSeries:
    """A single asset's price history on strictly increasing timestamps."""

    asset_id: str
    timestamps: np.ndarray  # int64 epoch ms
    prices: np.ndarray  # float64, strictly positive
    sampling_interval: int = MINUTE_MS  # ms

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64)
        px = np.asarray(self.prices, dtype=np.float64)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "prices", px)
        if ts.shape != px.shape or ts.ndim != 1:
            raise ValueError("timestamps and prices must be 1-D and equally long")
        if ts.size >= 2 and not (np.diff(ts) > 0).all():
            raise ValueError(f"{self.asset_id}: timestamps must be strictly increasing")
        if px.size and not (px > 0).all():
            raise ValueError(f"{self.asset_id}: prices must be strictly positive")
        if self.sampling_interval <= 0:
            raise ValueError("sampling_interval must be positive")

    def __len__(self):
        return self.timestamps.size


@dataclass(frozen=True)
class ReturnSeries:
    """Normalized logarithmic returns together with the raw moments that
    were divided out, so the original scale can be recovered."""

    asset_id: str
    timestamps: np.ndarray
    values: np.ndarray  # zero mean, unit standard deviation
    raw_mean: float
    raw_std: float
    sampling_interval: int = MINUTE_MS

    def __post_init__(self):
        object.__setattr__(self, "timestamps", np.asarray(self.timestamps, dtype=np.int64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.timestamps.shape != self.values.shape:
            raise ValueError("timestamps and values must be equally long")
        if self.raw_std <= 0:
            raise ValueError("raw_std must be positive")

    def __len__(self):
        return self.values.size

    @property
    def span_ms(self) -> int:
        return int(self.timestamps[-1] - self.timestamps[0])


@dataclass(frozen=True)
class Profile:
    """Cumulative sum of a mean-subtracted series; the object that gets
    segmented and detrended.  Its final value is ~0 by construction."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))

    @property
    def length(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class Panel:
    """Aligned multi-asset matrix on a shared timestamp grid.

    ``values[i, j]`` is asset ``assets[j]`` at ``grid[i]``.  ``kind`` is
    either ``"price"`` or ``"return"``.
    """

    assets: tuple[str, ...]
    grid: np.ndarray  # int64 epoch ms
    values: np.ndarray  # (len(grid), len(assets)) float64
    interval: int = MINUTE_MS
    kind: str = "price"

    def __post_init__(self):
        object.__setattr__(self, "assets", tuple(self.assets))
        object.__setattr__(self, "grid", np.asarray(self.grid, dtype=np.int64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.values.shape != (self.grid.size, len(self.assets)):
            raise ValueError("values shape must be (len(grid), len(assets))")
        if self.kind not in ("price", "return"):
            raise ValueError(f"unknown panel kind {self.kind!r}")

    @property
    def n_assets(self) -> int:
        return len(self.assets)

    def column(self, asset_id: str) -> np.ndarray:
        try:
            j = self.assets.index(asset_id)
        except ValueError:
            raise KeyError(f"asset {asset_id!r} not in panel") from None
        return self.values[:, j]

    def to_csv(self, path) -> None:
        """Write the panel as CSV: grid column plus one column per asset."""
        df = pd.DataFrame(self.values, columns=list(self.assets))
        df.insert(0, "timestamp", self.grid)
        df.to_csv(path, index=False)


def _parse_timestamps(raw: pd.Series, path) -> np.ndarray:
    """Epoch-ms integers or ISO-8601 strings -> int64 epoch ms."""
    text = raw.astype(str).str.strip()
    is_int = text.map(lambda v: bool(_INT_RE.fullmatch(v)))
    out = np.empty(len(text), dtype=np.int64)
    if is_int.any():
        out[is_int.to_numpy()] = text[is_int].astype(np.int64).to_numpy()
    rest = ~is_int
    if rest.any():
        parsed = pd.to_datetime(text[rest], errors="coerce", utc=True, format="ISO8601")
        bad = parsed.isna()
        if bad.any():
            row = int(text[rest][bad].index[0]) + 2  # +1 header, +1 one-based
            raise IngestError(f"{path}: unparseable timestamp at row {row}: {text[rest][bad].iloc[0]!r}")
        out[rest.to_numpy()] = (parsed.astype("int64") // 1_000_000).to_numpy()
    return out


def load_prices(path, schema: CsvSchema = CsvSchema(), sampling_interval: int = MINUTE_MS) -> PriceSeries:
    """Read one asset's prices from a CSV file.

    Rows are sorted by timestamp; duplicate timestamps collapse to the last
    value seen in file order (exchange feeds re-emit corrections).
    """
    groups = load_price_groups(path, schema, sampling_interval)
    if len(groups) != 1:
        ids = sorted(g.asset_id for g in groups)
        raise IngestError(
            f"{path}: expected a single asset but found {len(ids)} ({', '.join(ids)}); "
            "use load_price_groups for multi-asset files"
        )
    return groups[0]


def load_price_groups(path, schema: CsvSchema = CsvSchema(), sampling_interval: int = MINUTE_MS) -> list[PriceSeries]:
    """Read a price CSV, splitting on the schema's asset column if present.

    Returns one PriceSeries per asset, ordered by asset id.  Without an
    asset column the file stem is used as the asset id.
    """
    try:
        df = pd.read_csv(path, dtype=str, skipinitialspace=True)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise IngestError(f"{path}: unreadable file: {exc}") from exc
    for col in (schema.timestamp, schema.price):
        if col not in df.columns:
            raise IngestError(f"{path}: missing required column {col!r}")
    if df.empty:
        raise IngestError(f"{path}: no data rows")

    ts = _parse_timestamps(df[schema.timestamp], path)
    coerced = pd.to_numeric(df[schema.price], errors="coerce")
    bad = coerced.isna() | (coerced <= 0)
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0]) + 2
        raise IngestError(f"{path}: non-positive or unparseable price at row {row}: {df[schema.price].iloc[row - 2]!r}")
    px = df[schema.price].to_numpy(dtype=np.float64)  # numpy parse: correctly rounded

    if schema.asset is not None and schema.asset in df.columns:
        labels = df[schema.asset].astype(str).to_numpy()
    else:
        import os

        stem = os.path.splitext(os.path.basename(str(path)))[0]
        labels = np.full(len(df), stem)

    out = []
    for asset_id in sorted(set(labels)):
        mask = labels == asset_id
        t, p = ts[mask], px[mask]
        order = np.argsort(t, kind="stable")
        t, p = t[order], p[order]
        keep = np.ones(t.size, dtype=bool)
        keep[:-1] = t[:-1] != t[1:]  # last occurrence wins
        out.append(PriceSeries(asset_id, t[keep], p[keep], sampling_interval))
    return out


def synchronize(series: list[PriceSeries], interval: int = MINUTE_MS, max_fill: int = 60) -> Panel:
    """Align several price series on a shared grid by previous-tick fill.

    The grid runs from the latest first-timestamp to the earliest
    last-timestamp in steps of ``interval``.  A grid point whose most recent
    observation is older than ``max_fill`` intervals is a reporting error:
    unsynchronized sources would contaminate every cross-correlation
    downstream.
    """
    if not series:
        raise ValueError("need at least one series")
    if interval <= 0:
        raise ValueError("interval must be positive")
    ids = [s.asset_id for s in series]
    if len(set(ids)) != len(ids):
        raise AlignmentError("duplicate asset ids in synchronize input")
    series = sorted(series, key=lambda s: s.asset_id)

    start = max(int(s.timestamps[0]) for s in series)
    end = min(int(s.timestamps[-1]) for s in series)
    if start > end:
        raise AlignmentError(f"empty overlap window: starts at {start} but earliest end is {end}")
    grid = np.arange(start, end + 1, interval, dtype=np.int64)

    cols = np.empty((grid.size, len(series)))
    problems = []
    for j, s in enumerate(series):
        idx = np.searchsorted(s.timestamps, grid, side="right") - 1
        if idx[0] < 0:
            problems.append(f"{s.asset_id}: no observation at or before grid start {start}")
            continue
        stale = grid - s.timestamps[idx]
        worst = int(np.argmax(stale))
        if stale[worst] > max_fill * interval:
            prev_ts = int(s.timestamps[idx[worst]])
            nxt = idx[worst] + 1
            next_ts = int(s.timestamps[nxt]) if nxt < len(s) else end
            problems.append(
                f"{s.asset_id}: gap of {stale[worst] / interval:.0f} intervals exceeds "
                f"max_fill={max_fill} between {prev_ts} and {next_ts}"
            )
            continue
        cols[:, j] = s.prices[idx]
    if problems:
        raise AlignmentError("; ".join(problems))
    return Panel(tuple(s.asset_id for s in series), grid, cols, interval, kind="price")


def to_returns(series: PriceSeries, lag: int | None = None) -> ReturnSeries:
    """Normalized logarithmic returns over ``lag`` milliseconds.

    R(t) = log P(t+lag) - log P(t), then z-scored with the population
    standard deviation.  The raw mean and std are kept on the result.  The
    series must live on a uniform grid (synchronize first).
    """
    if lag is None:
        lag = series.sampling_interval
    if lag <= 0 or lag % series.sampling_interval != 0:
        raise ValueError(f"lag {lag} must be a positive multiple of the sampling interval")
    if len(series) < 3:
        raise ValueError("need at least 3 price points")
    gaps = np.diff(series.timestamps)
    if not (gaps == series.sampling_interval).all():
        raise AlignmentError(f"{series.asset_id}: non-uniform timestamp grid; synchronize before to_returns")
    steps = lag // series.sampling_interval
    if steps >= len(series):
        raise ValueError("lag longer than the series")

    logp = np.log(series.prices)
    raw = logp[steps:] - logp[:-steps]
    mu = float(np.mean(raw))
    sigma = float(np.std(raw))  # population
    if sigma == 0.0:
        raise DegenerateDataError(f"{series.asset_id}: constant prices give zero return variance")
    return ReturnSeries(
        asset_id=series.asset_id,
        timestamps=series.timestamps[:-steps],
        values=(raw - mu) / sigma,
        raw_mean=mu,
        raw_std=sigma,
        sampling_interval=series.sampling_interval,
    )


def build_index(panel: Panel, members: list[str], name: str = "INDEX", rebase: bool = False) -> PriceSeries:
    """Equal-weight market index: the plain sum of member prices.

    With ``rebase=True`` each member is first divided by its value at the
    grid start, so no single high-priced asset dominates the sum.
    """
    if panel.kind != "price":
        raise ValueError("build_index needs a price panel")
    if not members:
        raise ValueError("members must be nonempty")
    unknown = [m for m in members if m not in panel.assets]
    if unknown:
        raise KeyError(f"unknown panel members: {', '.join(unknown)}")
    cols = np.stack([panel.column(m) for m in members], axis=1)
    if rebase:
        cols = cols / cols[0, :]
    return PriceSeries(name, panel.grid, cols.sum(axis=1), panel.interval)


def profile(x) -> Profile:
    """Integrate a mean-subtracted series: X(j) = sum_{i<=j} (x_i - <x>)."""
    values = np.asarray(x.values if isinstance(x, ReturnSeries) else x, dtype=np.float64)
    if values.ndim != 1 or values.size < 2:
        raise ValueError("profile needs a 1-D series of length >= 2")
    return Profile(np.cumsum(values - values.mean()))


def panel_to_returns(panel: Panel, lag: int | None = None) -> Panel:
    """Convert a price panel to an aligned panel of normalized returns."""
    if panel.kind != "price":
        raise ValueError("panel_to_returns needs a price panel")
    if lag is None:
        lag = panel.interval
    cols, ts = [], None
    for asset in panel.assets:
        ps = PriceSeries(asset, panel.grid, panel.column(asset), panel.interval)
        rs = to_returns(ps, lag)
        cols.append(rs.values)
        ts = rs.timestamps
    return Panel(panel.assets, ts, np.stack(cols, axis=1), panel.interval, kind="return")


def read_panel_csv(path, kind: str = "price", interval: int | None = None) -> Panel:
    """Read a panel written by :meth:`Panel.to_csv` (exact float round trip)."""
    df = pd.read_csv(path, float_precision="round_trip")
    if "timestamp" not in df.columns:
        raise IngestError(f"{path}: missing 'timestamp' column")
    grid = df["timestamp"].to_numpy(dtype=np.int64)
    assets = [c for c in df.columns if c != "timestamp"]
    if interval is None:
        interval = int(grid[1] - grid[0]) if grid.size >= 2 else MINUTE_MS
    return Panel(tuple(assets), grid, df[assets].to_numpy(dtype=np.float64), interval, kind=kind)
