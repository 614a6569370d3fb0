"""End-to-end runs driven by a RunConfig: ingest -> synchronize ->
per-series spectra and tails -> pairwise rho -> rolling MST metrics,
with a JSON manifest describing what happened.

Output CSVs are deterministic for fixed config and inputs, independent of
the thread count; only manifest timing fields vary between runs.
"""

from __future__ import annotations

import glob
import itertools
import json
import os
import time
from dataclasses import dataclass

from . import __version__
from .config import RunConfig, format_duration, validate_config
from .errors import ConfigError, DegenerateDataError, MfpanelError
from .fluctuation import default_s_grid
from .network import rolling_mst
from .rho import rolling_rho
from .series import CsvSchema, Panel, PriceSeries, load_price_groups, panel_to_returns, synchronize, to_returns
from .spectrum import rolling_spectrum
from .tails import rolling_tail


@dataclass(frozen=True)
class RunReport:
    ok: bool
    out_dir: str
    manifest: dict


def _resolve_inputs(cfg: RunConfig) -> list[str]:
    paths = []
    for pattern in cfg.input.files:
        if not os.path.isabs(pattern):
            pattern = os.path.join(cfg.base_dir, pattern)
        hits = sorted(glob.glob(pattern))
        if not hits:
            raise ConfigError(f"input pattern matched no files: {pattern}")
        paths.extend(hits)
    if not paths:
        raise ConfigError("no input files configured")
    return paths


def _echo_config(cfg: RunConfig) -> dict:
    def enc(obj):
        if obj is None:
            return None
        out = {}
        for key, val in vars(obj).items():
            if key in ("window", "step", "interval"):
                val = format_duration(val)
            elif key == "s" and isinstance(val, tuple):
                val = [format_duration(v) for v in val]
            elif isinstance(val, tuple):
                val = list(val)
            out[key] = val
        return out

    return {
        "input": enc(cfg.input),
        "sync": enc(cfg.sync),
        "output_dir": cfg.output_dir,
        "threads": cfg.threads,
        "seed": cfg.seed,
        "spectrum": enc(cfg.spectrum),
        "tails": enc(cfg.tails),
        "rho": enc(cfg.rho),
        "mst": enc(cfg.mst),
    }


def _count_flags(flags) -> int:
    return sum(1 for f in flags if f)


class _Runner:
    def __init__(self, cfg: RunConfig, out_dir: str):
        self.cfg = cfg
        self.out_dir = out_dir
        self.panel: Panel | None = None
        self._returns = {}

    def returns_for(self, asset: str):
        if asset not in self._returns:
            ps = PriceSeries(asset, self.panel.grid, self.panel.column(asset), self.panel.interval)
            self._returns[asset] = to_returns(ps, self.panel.interval)
        return self._returns[asset]

    def ingest(self, manifest: dict) -> None:
        cfg = self.cfg
        schema = CsvSchema(
            timestamp=cfg.input.timestamp_column,
            price=cfg.input.price_column,
            asset=cfg.input.asset_column or None,
        )
        paths = _resolve_inputs(cfg)
        manifest["inputs"] = paths
        series = []
        for path in paths:
            series.extend(load_price_groups(path, schema, cfg.sync.interval))
        self.panel = synchronize(series, cfg.sync.interval, cfg.sync.max_fill)
        self.panel.to_csv(os.path.join(self.out_dir, "panel.csv"))
        manifest["outputs"].append("panel.csv")
        manifest["panel"] = {
            "assets": list(self.panel.assets),
            "rows": int(self.panel.grid.size),
            "grid_start": int(self.panel.grid[0]),
            "grid_end": int(self.panel.grid[-1]),
        }

    def spectrum_block(self, entry: dict) -> None:
        sp = self.cfg.spectrum
        w = sp.window // self.cfg.sync.interval
        fit_hi = sp.fit_s_max if sp.fit_s_max > 0 else max(w // 10, sp.fit_s_min + 1)
        s_grid = default_s_grid(w, s_min=sp.s_min, n_scales=sp.n_scales)
        for asset in self.panel.assets:
            try:
                tl = rolling_spectrum(
                    self.returns_for(asset),
                    sp.window,
                    sp.step,
                    q_grid=list(sp.q_grid),
                    s_grid=s_grid,
                    fit_range=(sp.fit_s_min, fit_hi),
                    poly_degree=sp.poly_degree,
                    direction=sp.direction,
                    r2_min=sp.r2_min,
                    threads=self.cfg.threads,
                )
            except DegenerateDataError as exc:
                entry.setdefault("errors", {})[asset] = str(exc)
                continue
            name = f"spectrum_{asset}.csv"
            tl.to_csv(os.path.join(self.out_dir, name))
            entry["outputs"].append(name)
            entry["flagged_windows"][asset] = _count_flags(tl.flags)

    def tails_block(self, entry: dict) -> None:
        t = self.cfg.tails
        for asset in self.panel.assets:
            try:
                tl = rolling_tail(
                    self.returns_for(asset), t.window, t.step, t.tail_fraction, t.method,
                    threads=self.cfg.threads,
                )
            except DegenerateDataError as exc:
                entry.setdefault("errors", {})[asset] = str(exc)
                continue
            name = f"tails_{asset}.csv"
            tl.to_csv(os.path.join(self.out_dir, name))
            entry["outputs"].append(name)
            entry["flagged_windows"][asset] = _count_flags(tl.flags)

    def rho_block(self, entry: dict) -> None:
        rc = self.cfg.rho
        if rc.pairs == "all":
            pairs = list(itertools.combinations(self.panel.assets, 2))
        else:
            pairs = [tuple(p) for p in rc.pairs]
            for a, b in pairs:
                if a not in self.panel.assets or b not in self.panel.assets:
                    raise ConfigError(f"[rho] pair ({a}, {b}) names assets missing from the panel")
        s_samples = [s // self.cfg.sync.interval for s in rc.s]
        for a, b in pairs:
            try:
                tl = rolling_rho(
                    self.returns_for(a),
                    self.returns_for(b),
                    rc.window,
                    rc.step,
                    q_set=rc.q,
                    s_set=s_samples,
                    poly_degree=rc.poly_degree,
                    direction=rc.direction,
                    threads=self.cfg.threads,
                )
            except DegenerateDataError as exc:
                entry.setdefault("errors", {})[f"{a}__{b}"] = str(exc)
                continue
            name = f"rho_{a}__{b}.csv"
            tl.to_csv(os.path.join(self.out_dir, name))
            entry["outputs"].append(name)
            entry["flagged_windows"][f"{a}__{b}"] = _count_flags(tl.flags)

    def mst_block(self, entry: dict) -> None:
        mc = self.cfg.mst
        s_samples = [s // self.cfg.sync.interval for s in mc.s]
        returns_panel = panel_to_returns(self.panel, self.cfg.sync.interval)
        tl = rolling_mst(
            returns_panel,
            mc.window,
            mc.step,
            q_set=mc.q,
            s_set=s_samples,
            poly_degree=mc.poly_degree,
            direction=mc.direction,
            collect_trees=mc.write_edges,
            threads=self.cfg.threads,
        )
        name = "mst_metrics.csv"
        tl.to_csv(os.path.join(self.out_dir, name))
        entry["outputs"].append(name)
        entry["flagged_windows"]["panel"] = _count_flags(tl.flags)
        if mc.write_edges:
            edge_dir = os.path.join(self.out_dir, "edges")
            os.makedirs(edge_dir, exist_ok=True)
            for (q, s), trees in tl.trees.items():
                for i, tree in enumerate(trees):
                    if tree is None:
                        continue
                    stem = f"q{q:g}_s{s}_{int(tl.window_ends[i])}"
                    tree.write_edge_csv(os.path.join(edge_dir, stem + ".csv"))
                    tree.write_pajek(os.path.join(edge_dir, stem + ".net"))
                    entry["outputs"].append(f"edges/{stem}.csv")
                    entry["outputs"].append(f"edges/{stem}.net")


def run(cfg: RunConfig, out_dir: str | None = None) -> RunReport:
    """Execute every enabled block in dependency order.

    Degenerate-data failures are recorded per block without aborting the
    others; any other failure marks the run as failed.  Returns the report
    whose ``ok`` decides the process exit status.
    """
    violations = validate_config(cfg)
    if violations:
        raise ConfigError("invalid config: " + "; ".join(violations))
    if out_dir is None:
        out_dir = cfg.output_dir
        if not os.path.isabs(out_dir):
            out_dir = os.path.join(cfg.base_dir, out_dir)
    os.makedirs(out_dir, exist_ok=True)

    manifest: dict = {
        "package": f"mfpanel {__version__}",
        "config": _echo_config(cfg),
        "blocks": {},
        "outputs": [],
    }
    ok = True
    t_start = time.time()
    runner = _Runner(cfg, out_dir)
    runner.ingest(manifest)

    blocks = []
    if cfg.spectrum is not None and cfg.spectrum.enabled:
        blocks.append(("spectrum", runner.spectrum_block))
    if cfg.tails is not None and cfg.tails.enabled:
        blocks.append(("tails", runner.tails_block))
    if cfg.rho is not None and cfg.rho.enabled:
        blocks.append(("rho", runner.rho_block))
    if cfg.mst is not None and cfg.mst.enabled:
        blocks.append(("mst", runner.mst_block))

    for name, fn in blocks:
        entry = {"status": "ok", "outputs": [], "flagged_windows": {}}
        t0 = time.time()
        try:
            fn(entry)
        except DegenerateDataError as exc:
            entry["status"] = "degenerate"
            entry["error"] = str(exc)
        except MfpanelError as exc:
            entry["status"] = "failed"
            entry["error"] = str(exc)
            ok = False
        entry["elapsed_s"] = round(time.time() - t0, 3)
        manifest["blocks"][name] = entry
        manifest["outputs"].extend(entry["outputs"])

    manifest["elapsed_s"] = round(time.time() - t_start, 3)
    manifest["ok"] = ok
    with open(os.path.join(out_dir, "run_manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return RunReport(ok=ok, out_dir=out_dir, manifest=manifest)
