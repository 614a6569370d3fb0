"""Command-line interface.

Subcommands: ``run`` and ``validate`` drive full configs; ``synth``
generates seeded synthetic price files in the ingestion schema;
``spectrum``, ``tails``, ``rho``, and ``mst`` are single-block
conveniences over the same pipeline.

Flags override config fields one-for-one; the environment variables
MFPANEL_OUT, MFPANEL_THREADS, and MFPANEL_SEED sit between config file and
flags in precedence (flags win).
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import pandas as pd

from .config import (
    ConfigError,
    InputConfig,
    MstConfig,
    RhoConfig,
    RunConfig,
    SpectrumConfig,
    SyncConfig,
    TailsConfig,
    load_config,
    parse_duration,
    validate_config,
)
from .errors import MfpanelError
from .pipeline import run as run_pipeline
from .synthetic import GeneratorSpec, correlated_pair, generate, prices_from_series


def _env_int(name):
    val = os.environ.get(name)
    return int(val) if val not in (None, "") else None


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    updates = {}
    out = getattr(args, "out", None) or os.environ.get("MFPANEL_OUT")
    if out:
        updates["output_dir"] = out
        updates["base_dir"] = os.getcwd() if getattr(args, "out", None) else cfg.base_dir
    threads = args.threads if getattr(args, "threads", None) is not None else _env_int("MFPANEL_THREADS")
    if threads is not None:
        updates["threads"] = threads
    seed = args.seed if getattr(args, "seed", None) is not None else _env_int("MFPANEL_SEED")
    if seed is not None:
        updates["seed"] = seed
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _cmd_run(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    report = run_pipeline(cfg)
    print(f"wrote {len(report.manifest['outputs'])} outputs to {report.out_dir}")
    for name, entry in report.manifest["blocks"].items():
        print(f"  [{entry['status']}] {name}: {len(entry['outputs'])} files, {entry['elapsed_s']}s")
    return 0 if report.ok else 1


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    violations = validate_config(cfg)
    if not violations:
        print("ok")
        return 0
    for v in violations:
        print(f"violation: {v}")
    return 1


def _write_price_csv(path, values, args) -> None:
    ts, prices = prices_from_series(
        values,
        start_ms=args.start_ms,
        interval_ms=parse_duration(args.interval),
        price0=args.price0,
        vol=args.vol,
    )
    pd.DataFrame({"timestamp": ts, "price": prices}).to_csv(path, index=False)
    print(f"wrote {len(ts)} rows to {path}")


def _cmd_synth(args) -> int:
    if args.kind == "correlated_pair":
        x, y = correlated_pair(args.c, args.length, args.seed)
        root, ext = os.path.splitext(args.out)
        _write_price_csv(f"{root}_a{ext or '.csv'}", x, args)
        _write_price_csv(f"{root}_b{ext or '.csv'}", y, args)
        return 0
    if args.kind == "cascade":
        length = 2**args.levels
    else:
        length = args.length
    spec = GeneratorSpec(
        kind=args.kind, length=length, seed=args.seed,
        p=args.p, hurst=args.hurst, gamma=args.gamma, c=args.c,
    )
    _write_price_csv(args.out, generate(spec), args)
    return 0


def _single_block_config(args, **blocks) -> RunConfig:
    return _apply_overrides(
        RunConfig(
            input=InputConfig(files=tuple(args.input)),
            sync=SyncConfig(interval=parse_duration(args.interval)),
            output_dir=args.out or "out",
            base_dir=os.getcwd(),
            **blocks,
        ),
        args,
    )


def _finish(report) -> int:
    print(f"wrote {len(report.manifest['outputs'])} outputs to {report.out_dir}")
    return 0 if report.ok else 1


def _cmd_spectrum(args) -> int:
    block = SpectrumConfig(window=parse_duration(args.window), step=parse_duration(args.step))
    return _finish(run_pipeline(_single_block_config(args, spectrum=block)))


def _cmd_tails(args) -> int:
    block = TailsConfig(
        window=parse_duration(args.window), step=parse_duration(args.step),
        tail_fraction=args.tail_fraction, method=args.method,
    )
    return _finish(run_pipeline(_single_block_config(args, tails=block)))


def _cmd_rho(args) -> int:
    block = RhoConfig(
        window=parse_duration(args.window), step=parse_duration(args.step),
        q=tuple(args.q), s=tuple(parse_duration(s) for s in args.s),
    )
    return _finish(run_pipeline(_single_block_config(args, rho=block)))


def _cmd_mst(args) -> int:
    block = MstConfig(
        window=parse_duration(args.window), step=parse_duration(args.step),
        q=tuple(args.q), s=tuple(parse_duration(s) for s in args.s),
        write_edges=args.write_edges,
    )
    return _finish(run_pipeline(_single_block_config(args, mst=block)))


def _add_common(sub):
    # no argparse default: MFPANEL_OUT must be distinguishable from a flag
    sub.add_argument("--out", default=None, help="output directory (default 'out')")
    sub.add_argument("--threads", type=int, default=None, help="worker threads (0 = all cores)")
    sub.add_argument("--seed", type=int, default=None, help="seed for synthetic inputs")


def _add_ingest(sub):
    sub.add_argument("--input", action="append", required=True, help="input CSV path or glob (repeatable)")
    sub.add_argument("--interval", default="1m", help="sampling interval, e.g. 1m")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfpanel",
        description="Multifractal, cross-correlation, tail, and MST-network analysis of asset panels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a full config")
    p.add_argument("--config", required=True)
    _add_common(p)
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("validate", help="statically validate a config")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=_cmd_validate)

    p = sub.add_parser("synth", help="write synthetic price CSVs in the ingestion schema")
    p.add_argument("--kind", required=True,
                   choices=["cascade", "fgn", "iid_gaussian", "pareto", "correlated_pair"])
    p.add_argument("--out", required=True, help="output CSV path (pairs get _a/_b suffixes)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--length", type=int, default=65536)
    p.add_argument("--levels", type=int, default=16, help="cascade levels (length = 2^levels)")
    p.add_argument("--p", type=float, default=0.7, help="cascade multiplier in (0.5, 1)")
    p.add_argument("--hurst", type=float, default=0.7)
    p.add_argument("--gamma", type=float, default=3.0)
    p.add_argument("--c", type=float, default=0.6, help="pair target correlation")
    p.add_argument("--start-ms", type=int, default=0)
    p.add_argument("--interval", default="1m")
    p.add_argument("--price0", type=float, default=100.0)
    p.add_argument("--vol", type=float, default=0.001)
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("spectrum", help="rolling singularity spectra for each input asset")
    _add_ingest(p)
    p.add_argument("--window", default="30d")
    p.add_argument("--step", default="5d")
    _add_common(p)
    p.set_defaults(fn=_cmd_spectrum)

    p = sub.add_parser("tails", help="rolling tail-exponent fits for each input asset")
    _add_ingest(p)
    p.add_argument("--window", default="30d")
    p.add_argument("--step", default="5d")
    p.add_argument("--tail-fraction", type=float, default=0.01)
    p.add_argument("--method", default="hill", choices=["hill", "ls_loglog"])
    _add_common(p)
    p.set_defaults(fn=_cmd_tails)

    p = sub.add_parser("rho", help="rolling rho(q,s) for every input pair")
    _add_ingest(p)
    p.add_argument("--window", default="10d")
    p.add_argument("--step", default="1d")
    p.add_argument("--q", type=float, action="append", default=None)
    p.add_argument("--s", action="append", default=None, help="scale duration, e.g. 10m (repeatable)")
    _add_common(p)
    p.set_defaults(fn=_cmd_rho)

    p = sub.add_parser("mst", help="rolling MST metrics over the input panel")
    _add_ingest(p)
    p.add_argument("--window", default="7d")
    p.add_argument("--step", default="1d")
    p.add_argument("--q", type=float, action="append", default=None)
    p.add_argument("--s", action="append", default=None)
    p.add_argument("--write-edges", action="store_true")
    _add_common(p)
    p.set_defaults(fn=_cmd_mst)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "q", "na") is None:
        args.q = [1.0, 4.0]
    if getattr(args, "s", "na") is None:
        args.s = ["10m", "360m"] if args.command == "rho" else ["10m", "60m", "360m"]
    try:
        return args.fn(args)
    except (MfpanelError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
