"""Declarative run configuration: TOML parsing, strict schema checking,
and static cross-field validation.

Unknown keys fail fast by name; semantic violations (segment floors, the
q != 0 rule) are collected by :func:`validate_config` so a run never
starts on a config that cannot finish.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from .errors import ConfigError
from .rho import MIN_SEGMENTS
from .spectrum import default_q_grid

_DURATION_RE = re.compile(r"^(\d+)\s*(ms|s|m|h|d)$")
_UNIT_MS = {"ms": 1, "s": 1_000, "m": 60_000, "h": 3_600_000, "d": 86_400_000}


def parse_duration(text) -> int:
    """'30d', '10m', '90s', ... -> milliseconds."""
    if isinstance(text, int):
        return text
    m = _DURATION_RE.match(str(text).strip())
    if not m:
        raise ConfigError(f"bad duration {text!r} (use e.g. '30d', '6h', '10m', '90s', '500ms')")
    return int(m.group(1)) * _UNIT_MS[m.group(2)]


def format_duration(ms: int) -> str:
    for unit in ("d", "h", "m", "s"):
        if ms % _UNIT_MS[unit] == 0:
            return f"{ms // _UNIT_MS[unit]}{unit}"
    return f"{ms}ms"


@dataclass(frozen=True)
class InputConfig:
    files: tuple[str, ...] = ()
    timestamp_column: str = "timestamp"
    price_column: str = "price"
    asset_column: str | None = None


@dataclass(frozen=True)
class SyncConfig:
    interval: int = 60_000  # ms
    max_fill: int = 60  # intervals


@dataclass(frozen=True)
class SpectrumConfig:
    enabled: bool = True
    window: int = parse_duration("30d")
    step: int = parse_duration("5d")
    q_grid: tuple[float, ...] = tuple(default_q_grid())
    s_min: int = 10
    n_scales: int = 20
    fit_s_min: int = 10
    fit_s_max: int = 0  # 0 = window_samples / 10
    poly_degree: int = 2
    direction: str = "forward"
    r2_min: float = 0.98


@dataclass(frozen=True)
class TailsConfig:
    enabled: bool = True
    window: int = parse_duration("30d")
    step: int = parse_duration("5d")
    tail_fraction: float = 0.01
    method: str = "hill"


@dataclass(frozen=True)
class RhoConfig:
    enabled: bool = True
    window: int = parse_duration("10d")
    step: int = parse_duration("1d")
    q: tuple[float, ...] = (1.0, 4.0)
    s: tuple[int, ...] = (parse_duration("10m"), parse_duration("360m"))  # durations, ms
    pairs: tuple[tuple[str, str], ...] | str = "all"
    poly_degree: int = 2
    direction: str = "forward"


@dataclass(frozen=True)
class MstConfig:
    enabled: bool = True
    window: int = parse_duration("7d")
    step: int = parse_duration("1d")
    q: tuple[float, ...] = (1.0, 4.0)
    s: tuple[int, ...] = (parse_duration("10m"), parse_duration("60m"), parse_duration("360m"))
    write_edges: bool = False
    poly_degree: int = 2
    direction: str = "forward"


@dataclass(frozen=True)
class RunConfig:
    input: InputConfig = field(default_factory=InputConfig)
    sync: SyncConfig = field(default_factory=SyncConfig)
    output_dir: str = "out"
    threads: int = 0  # 0 = available parallelism; results are identical either way
    seed: int = 0
    spectrum: SpectrumConfig | None = None
    tails: TailsConfig | None = None
    rho: RhoConfig | None = None
    mst: MstConfig | None = None
    base_dir: str = "."  # directory relative paths resolve against


_DURATION_KEYS = {"window", "step", "interval"}
_DURATION_LIST_KEYS = {"s"}


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _check_type(where: str, key: str, value, expected) -> None:
    """Shallow type check against the field's default value."""
    if key == "pairs":
        ok = value == "all" or (
            isinstance(value, tuple)
            and all(isinstance(p, tuple) and all(isinstance(a, str) for a in p) for p in value)
        )
    elif expected is None:
        ok = value is None or isinstance(value, str)
    elif isinstance(expected, bool):
        ok = isinstance(value, bool)
    elif isinstance(expected, (int, float)):
        ok = _is_number(value)
    elif isinstance(expected, str):
        ok = isinstance(value, str)
    elif isinstance(expected, tuple):
        ok = isinstance(value, tuple)
        if ok and key in ("q", "q_grid", "s"):
            ok = all(_is_number(v) for v in value)
        elif ok and key == "files":
            ok = all(isinstance(v, str) for v in value)
    else:
        ok = True
    if not ok:
        raise ConfigError(f"bad value for {key!r} in [{where}]: {value!r}")


def _build(cls, table: dict, where: str):
    """Construct a config dataclass from a TOML table, rejecting unknown
    keys by name, type-checking values, and coercing duration strings."""
    known = {f.name for f in fields(cls)}
    for key in table:
        if key not in known:
            raise ConfigError(f"unknown config key {key!r} in [{where}]")
    defaults = cls()
    kwargs = {}
    for key, value in table.items():
        if key in _DURATION_KEYS:
            value = parse_duration(value)
            if value <= 0:
                raise ConfigError(f"{key!r} in [{where}] must be a positive duration")
        elif key in _DURATION_LIST_KEYS:
            if not isinstance(value, list):
                raise ConfigError(f"{key!r} in [{where}] must be a list of durations")
            value = tuple(parse_duration(v) for v in value)
        elif isinstance(value, list):
            value = tuple(tuple(v) if isinstance(v, list) else v for v in value)
        _check_type(where, key, value, getattr(defaults, key))
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value in [{where}]: {exc}") from exc


_TOP_TABLES = {
    "input": ("input", InputConfig),
    "sync": ("sync", SyncConfig),
    "spectrum": ("spectrum", SpectrumConfig),
    "tails": ("tails", TailsConfig),
    "rho": ("rho", RhoConfig),
    "mst": ("mst", MstConfig),
}
_TOP_SCALARS = {"output_dir", "threads", "seed"}


def config_from_dict(data: dict, base_dir: str = ".") -> RunConfig:
    """Build a RunConfig from a parsed TOML mapping (fail-fast on unknown
    keys).  Analysis blocks are enabled by their table's presence."""
    kwargs = {"base_dir": base_dir}
    for key, value in data.items():
        if key in _TOP_SCALARS:
            if key == "output_dir" and not isinstance(value, str):
                raise ConfigError(f"output_dir must be a string, got {value!r}")
            if key in ("threads", "seed") and not (isinstance(value, int) and not isinstance(value, bool)):
                raise ConfigError(f"{key} must be an integer, got {value!r}")
            kwargs[key] = value
        elif key in _TOP_TABLES:
            attr, cls = _TOP_TABLES[key]
            if not isinstance(value, dict):
                raise ConfigError(f"[{key}] must be a table")
            kwargs[attr] = _build(cls, value, key)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    try:
        return RunConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad top-level value: {exc}") from exc


def load_config(path) -> RunConfig:
    """Parse and schema-check a TOML run configuration."""
    import os

    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config {path} is not valid TOML: {exc}") from exc
    return config_from_dict(data, base_dir=os.path.dirname(os.path.abspath(str(path))))


def _check_rolling_block(name, cfg, interval, violations, q_positive=False):
    if cfg.window <= 0 or cfg.step <= 0:
        violations.append(f"[{name}] window and step must be positive durations")
        return
    w = cfg.window // interval
    if w < 1:
        violations.append(f"[{name}] window shorter than one sampling interval")
        return
    if hasattr(cfg, "s"):
        floor = getattr(cfg, "poly_degree", 2) + 2
        for s_ms in cfg.s:
            s = s_ms // interval
            if s < floor:
                violations.append(
                    f"[{name}] scale {format_duration(s_ms)} spans {s} samples; the degree-"
                    f"{getattr(cfg, 'poly_degree', 2)} detrending fit needs at least {floor}"
                )
                continue
            if w // s < MIN_SEGMENTS:
                violations.append(
                    f"[{name}] window {format_duration(cfg.window)} holds only {w // s} segments "
                    f"of scale {format_duration(s_ms)}; need at least {MIN_SEGMENTS}"
                )
    if q_positive and hasattr(cfg, "q"):
        for q in cfg.q:
            if q <= 0:
                violations.append(f"[{name}] q = {q:g}: rho(q, s) requires q > 0")


def validate_config(cfg: RunConfig) -> list[str]:
    """Static validation; returns a list of violations (empty = ok)."""
    violations: list[str] = []
    if cfg.sync.interval <= 0:
        violations.append("[sync] interval must be positive")
        return violations
    if cfg.sync.max_fill < 1:
        violations.append("[sync] max_fill must be >= 1")
    if cfg.threads < 0:
        violations.append("threads must be >= 0 (0 = all cores)")

    if cfg.spectrum is not None and cfg.spectrum.enabled:
        sp = cfg.spectrum
        q = np.asarray(sp.q_grid, dtype=np.float64)
        if np.any(q == 0):
            violations.append("[spectrum] q_grid contains 0: the fluctuation function requires q != 0")
        if q.size < 5:
            violations.append("[spectrum] q_grid needs at least 5 values")
        elif not ((q < 0).any() and (q > 0).any()):
            violations.append("[spectrum] q_grid must contain both negative and positive orders")
        if np.any(np.diff(q) <= 0):
            violations.append("[spectrum] q_grid must be strictly increasing")
        _check_rolling_block("spectrum", sp, cfg.sync.interval, violations)
        w = sp.window // cfg.sync.interval
        if w < 4 * sp.s_min:
            violations.append(
                f"[spectrum] window of {w} samples cannot hold 4 segments of the smallest scale {sp.s_min}"
            )
        if sp.direction not in ("forward", "bidirectional"):
            violations.append(f"[spectrum] unknown direction {sp.direction!r}")

    if cfg.tails is not None and cfg.tails.enabled:
        t = cfg.tails
        if not 0 < t.tail_fraction < 1:
            violations.append("[tails] tail_fraction must be in (0, 1)")
        if t.method not in ("hill", "ls_loglog"):
            violations.append(f"[tails] unknown method {t.method!r}")
        _check_rolling_block("tails", t, cfg.sync.interval, violations)

    if cfg.rho is not None and cfg.rho.enabled:
        _check_rolling_block("rho", cfg.rho, cfg.sync.interval, violations, q_positive=True)
        if cfg.rho.pairs != "all":
            for pair in cfg.rho.pairs:
                if len(pair) != 2:
                    violations.append(f"[rho] pairs entries must name exactly two assets: {pair!r}")
        if cfg.rho.direction not in ("forward", "bidirectional"):
            violations.append(f"[rho] unknown direction {cfg.rho.direction!r}")

    if cfg.mst is not None and cfg.mst.enabled:
        _check_rolling_block("mst", cfg.mst, cfg.sync.interval, violations, q_positive=True)
        if cfg.mst.direction not in ("forward", "bidirectional"):
            violations.append(f"[mst] unknown direction {cfg.mst.direction!r}")

    return violations
