import json
import os

import numpy as np
import pandas as pd
import pytest

from mfpanel.cli import main as cli_main
from mfpanel.config import config_from_dict
from mfpanel.errors import ConfigError
from mfpanel.pipeline import run
from mfpanel.synthetic import correlated_pair, fgn, prices_from_series

MIN = 60_000
DAY = 86_400_000


def write_price_csv(path, values, vol=0.002, start_ms=0):
    ts, prices = prices_from_series(values, start_ms=start_ms, interval_ms=MIN, vol=vol)
    pd.DataFrame({"timestamp": ts, "price": prices}).to_csv(path, index=False)
    return path


@pytest.fixture
def price_dir(tmp_path):
    d = tmp_path / "prices"
    d.mkdir()
    x, y = correlated_pair(0.7, 10 * 1440, seed=31)
    z = fgn(0.6, 2**14, seed=32)[: 10 * 1440]
    write_price_csv(d / "AAA.csv", x)
    write_price_csv(d / "BBB.csv", y)
    write_price_csv(d / "CCC.csv", z)
    return d


def small_config(price_dir, out, blocks):
    data = {
        "input": {"files": [str(price_dir / "*.csv")]},
        "sync": {"interval": "1m"},
        "output_dir": str(out),
        **blocks,
    }
    return config_from_dict(data, base_dir=str(price_dir))


class TestRun:
    def test_single_spectrum_block(self, price_dir, tmp_path):
        out = tmp_path / "out"
        cfg = small_config(price_dir, out, {
            "spectrum": {"window": "3d", "step": "3d", "s_min": 8, "fit_s_min": 8, "fit_s_max": 400},
        })
        report = run(cfg)
        assert report.ok
        files = sorted(os.listdir(out))
        assert files == ["panel.csv", "run_manifest.json",
                         "spectrum_AAA.csv", "spectrum_BBB.csv", "spectrum_CCC.csv"]
        manifest = json.loads((out / "run_manifest.json").read_text())
        assert manifest["blocks"]["spectrum"]["status"] == "ok"
        assert manifest["panel"]["assets"] == ["AAA", "BBB", "CCC"]

    def test_mst_block_edge_lists(self, price_dir, tmp_path):
        out = tmp_path / "out"
        cfg = small_config(price_dir, out, {
            "mst": {"window": "2d", "step": "2d", "q": [1.0], "s": ["10m"], "write_edges": True},
        })
        report = run(cfg)
        assert report.ok
        edge_files = sorted(os.listdir(out / "edges"))
        csvs = [f for f in edge_files if f.endswith(".csv")]
        assert len(csvs) == 5  # floor((10-2)/2)+1 windows
        for f in csvs:
            rows = (out / "edges" / f).read_text().splitlines()
            assert len(rows) == 1 + 2  # header + (N-1) edges for 3 assets
        assert any(f.endswith(".net") for f in edge_files)

    def test_all_blocks_and_manifest(self, price_dir, tmp_path):
        out = tmp_path / "out"
        cfg = small_config(price_dir, out, {
            "spectrum": {"window": "3d", "step": "3d", "s_min": 8, "fit_s_min": 8, "fit_s_max": 400},
            "tails": {"window": "3d", "step": "3d", "tail_fraction": 0.02},
            "rho": {"window": "2d", "step": "2d", "q": [1.0, 4.0], "s": ["10m"], "pairs": [["AAA", "BBB"]]},
            "mst": {"window": "2d", "step": "2d", "q": [1.0], "s": ["10m"]},
        })
        report = run(cfg)
        assert report.ok
        manifest = report.manifest
        assert set(manifest["blocks"]) == {"spectrum", "tails", "rho", "mst"}
        assert "rho_AAA__BBB.csv" in manifest["outputs"]
        assert "mst_metrics.csv" in manifest["outputs"]
        rho_df = pd.read_csv(out / "rho_AAA__BBB.csv")
        assert (rho_df["rho"] > 0.3).all()  # strongly correlated pair

    def test_determinism_across_runs_and_threads(self, price_dir, tmp_path):
        blocks = {
            "spectrum": {"window": "3d", "step": "3d", "s_min": 8, "fit_s_min": 8, "fit_s_max": 400},
            "rho": {"window": "2d", "step": "2d", "q": [1.0], "s": ["10m"]},
        }
        outputs = {}
        for tag, threads in (("a", 1), ("b", 1), ("c", 4)):
            out = tmp_path / tag
            data = {
                "input": {"files": [str(price_dir / "*.csv")]},
                "output_dir": str(out),
                "threads": threads,
                **blocks,
            }
            run(config_from_dict(data, base_dir=str(price_dir)))
            outputs[tag] = {
                f: (out / f).read_bytes() for f in os.listdir(out) if f.endswith(".csv")
            }
        assert outputs["a"] == outputs["b"]
        assert outputs["a"] == outputs["c"]

    def test_invalid_config_fails_fast(self, price_dir, tmp_path):
        cfg = small_config(price_dir, tmp_path / "out", {
            "rho": {"window": "1d", "s": ["360m"]},
        })
        with pytest.raises(ConfigError, match="segments"):
            run(cfg)

    def test_missing_inputs(self, tmp_path):
        cfg = config_from_dict(
            {"input": {"files": [str(tmp_path / "nothing*.csv")]}, "spectrum": {}},
            base_dir=str(tmp_path),
        )
        with pytest.raises(ConfigError, match="matched no files"):
            run(cfg)

    def test_degenerate_asset_recorded_not_fatal(self, price_dir, tmp_path):
        n = 10 * 1440
        ts = MIN * np.arange(n, dtype=np.int64)
        pd.DataFrame({"timestamp": ts, "price": np.full(n, 5.0)}).to_csv(
            price_dir / "DDD.csv", index=False
        )
        out = tmp_path / "out"
        cfg = small_config(price_dir, out, {
            "tails": {"window": "3d", "step": "3d", "tail_fraction": 0.02},
        })
        report = run(cfg)
        assert report.ok  # degenerate data is recorded, not fatal
        entry = report.manifest["blocks"]["tails"]
        assert "DDD" in entry.get("errors", {})
        assert "tails_AAA.csv" in entry["outputs"]


class TestCli:
    def test_synth_then_spectrum(self, tmp_path, capsys):
        prices = tmp_path / "cascade.csv"
        rc = cli_main(["synth", "--kind", "cascade", "--levels", "13", "--p", "0.7",
                       "--seed", "3", "--out", str(prices)])
        assert rc == 0
        out = tmp_path / "out"
        rc = cli_main(["spectrum", "--input", str(prices), "--window", "3d", "--step", "1d",
                       "--out", str(out), "--threads", "1"])
        assert rc == 0
        files = os.listdir(out)
        assert "spectrum_cascade.csv" in files
        assert "run_manifest.json" in files
        df = pd.read_csv(out / "spectrum_cascade.csv")
        assert (df["delta_alpha"].dropna() > 0.3).all()  # cascade windows are wide

    def test_synth_pair(self, tmp_path):
        rc = cli_main(["synth", "--kind", "correlated_pair", "--c", "0.8", "--length", "2000",
                       "--seed", "5", "--out", str(tmp_path / "pair.csv")])
        assert rc == 0
        assert (tmp_path / "pair_a.csv").exists()
        assert (tmp_path / "pair_b.csv").exists()

    def test_validate_ok_and_violation(self, tmp_path, capsys):
        good = tmp_path / "good.toml"
        good.write_text('[input]\nfiles = ["x.csv"]\n[spectrum]\nwindow = "30d"\n')
        assert cli_main(["validate", "--config", str(good)]) == 0
        assert "ok" in capsys.readouterr().out
        bad = tmp_path / "bad.toml"
        bad.write_text('[rho]\nwindow = "1d"\ns = ["360m"]\n')
        assert cli_main(["validate", "--config", str(bad)]) == 1
        assert "segments" in capsys.readouterr().out

    def test_unknown_key_fails_fast_with_name(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text("qq_grid = [1.0]\n")
        assert cli_main(["validate", "--config", str(bad)]) == 2
        assert "qq_grid" in capsys.readouterr().err

    def test_rho_subcommand(self, tmp_path):
        x, y = correlated_pair(0.9, 3 * 1440, seed=8)
        write_price_csv(tmp_path / "X.csv", x)
        write_price_csv(tmp_path / "Y.csv", y)
        out = tmp_path / "out"
        rc = cli_main(["rho", "--input", str(tmp_path / "X.csv"), "--input", str(tmp_path / "Y.csv"),
                       "--window", "1d", "--step", "1d", "--s", "10m", "--out", str(out)])
        assert rc == 0
        df = pd.read_csv(out / "rho_X__Y.csv")
        assert set(df["q"]) == {1.0, 4.0}

    def test_tails_subcommand(self, tmp_path):
        from mfpanel.synthetic import pareto

        write_price_csv(tmp_path / "P.csv", pareto(2.0, 5 * 1440, 2), vol=0.0005)
        out = tmp_path / "out"
        rc = cli_main(["tails", "--input", str(tmp_path / "P.csv"), "--window", "2d",
                       "--step", "1d", "--tail-fraction", "0.02", "--out", str(out)])
        assert rc == 0
        assert (out / "tails_P.csv").exists()

    def test_mst_subcommand(self, tmp_path):
        for i in range(3):
            write_price_csv(tmp_path / f"M{i}.csv", fgn(0.5, 2**12, seed=40 + i))
        out = tmp_path / "out"
        rc = cli_main(["mst", "--input", str(tmp_path / "M*.csv"), "--window", "1d",
                       "--step", "1d", "--s", "10m", "--out", str(out)])
        assert rc == 0
        df = pd.read_csv(out / "mst_metrics.csv")
        assert set(df.columns) == {"window_end", "q", "s", "mean_L", "mean_rho", "k_max", "hub_id"}

    def test_env_override(self, tmp_path, monkeypatch):
        prices = tmp_path / "f.csv"
        write_price_csv(prices, fgn(0.5, 2**12, seed=50))
        env_out = tmp_path / "env_out"
        monkeypatch.setenv("MFPANEL_OUT", str(env_out))
        rc = cli_main(["tails", "--input", str(prices), "--window", "1d", "--step", "1d"])
        assert rc == 0
        assert env_out.exists()


class TestAdversarialInputs:
    """Malformed text must surface as typed errors and clean exit codes,
    never as tracebacks."""

    CONFIGS = [
        "",  # empty file: no blocks, no inputs
        "[[rho]]\nwindow = 3\n",  # array-of-tables where a table is expected
        "[spectrum]\nwindow = -5\n",
        '[input]\nfiles = "not-a-list"\n',
        '[rho]\nq = ["one"]\n',
        '[mst]\ns = ["10 fortnights"]\n',
        "\x00\x01\x02",
        '[tails]\ntail_fraction = "much"\n',
    ]

    @pytest.mark.parametrize("body", CONFIGS)
    def test_bad_configs_never_crash(self, tmp_path, body):
        path = tmp_path / "c.toml"
        path.write_bytes(body.encode("utf-8", "surrogateescape"))
        rc = cli_main(["validate", "--config", str(path)])
        assert rc in (0, 1, 2)

    BAD_CSVS = [
        "not,a,header\n1,2,3\n",
        "timestamp,price\n",  # no rows
        "timestamp,price\nabc,def\n",
        "timestamp,price\n0,0\n",  # zero price
        'timestamp,price\n0,"1.0\n',  # unbalanced quote
        "\xff\xfe garbage",
    ]

    @pytest.mark.parametrize("body", BAD_CSVS)
    def test_bad_price_files_never_crash(self, tmp_path, body):
        path = tmp_path / "x.csv"
        path.write_bytes(body.encode("utf-8", "surrogateescape"))
        rc = cli_main(["tails", "--input", str(path), "--window", "1d", "--step", "1d",
                       "--out", str(tmp_path / "out")])
        assert rc == 2
