import numpy as np
import pytest

from conftest import make_return_series, rank_correlation

from mfpanel.errors import DegenerateDataError
from mfpanel.rho import rho_matrix, rho_q, rolling_rho
from mfpanel.series import Panel
from mfpanel.synthetic import correlated_pair, iid_gaussian

HOUR = 3_600_000
DAY = 86_400_000
MIN = 60_000


class TestRhoQ:
    def test_identity_is_exactly_one(self, rng):
        x = rng.standard_normal(1024)
        assert rho_q(x, x.copy(), q=2.0, s=32).value == 1.0

    def test_negation_is_exactly_minus_one(self, rng):
        x = rng.standard_normal(1024)
        for q in (0.5, 1.0, 2.0, 4.0):
            assert rho_q(x, -x, q=q, s=32).value == -1.0

    def test_independent_pairs_unbiased(self):
        # Monte Carlo oracle: mean over 50 seeds of rho(1, 32)
        vals = []
        for seed in range(50):
            x = iid_gaussian(2**15, 2 * seed)
            y = iid_gaussian(2**15, 2 * seed + 1)
            vals.append(rho_q(x, y, q=1.0, s=32).value)
        assert abs(float(np.mean(vals))) <= 0.02

    def test_symmetry_exact(self, rng):
        x, y = rng.standard_normal(2048), rng.standard_normal(2048)
        a = rho_q(x, y, q=1.5, s=64).value
        b = rho_q(y, x, q=1.5, s=64).value
        assert a == b

    def test_sign_flip_exact(self, rng):
        x, y = rng.standard_normal(2048), rng.standard_normal(2048)
        assert rho_q(x, -y, q=2.0, s=32).value == -rho_q(x, y, q=2.0, s=32).value

    def test_affine_invariance(self, rng):
        x, y = correlated_pair(0.5, 4096, 99)
        base = rho_q(x, y, q=2.0, s=64).value
        moved = rho_q(3.7 * x + 11.0, 0.002 * y - 5.0, q=2.0, s=64).value
        assert abs(moved - base) < 1e-9

    def test_bounded_battery(self):
        # 200 random cases; the acceptance suite runs the full 10^4 battery
        for seed in range(200):
            g = np.random.Generator(np.random.Philox(seed))
            c = g.uniform(-1, 1)
            x, y = correlated_pair(c, 512, seed)
            q = float(g.uniform(0.2, 5.0))
            s = int(g.integers(8, 65))
            v = rho_q(x, y, q=q, s=s).value
            assert -1.0 - 1e-9 <= v <= 1.0 + 1e-9

    def test_q_nonpositive_rejected(self, rng):
        x = rng.standard_normal(512)
        for q in (0.0, -1.0):
            with pytest.raises(ValueError, match="q > 0"):
                rho_q(x, x, q=q, s=16)

    def test_segment_floor(self, rng):
        x = rng.standard_normal(100)
        with pytest.raises(ValueError, match="4 segments"):
            rho_q(x, x, q=1.0, s=30)

    def test_constant_series_degenerate(self):
        x = np.zeros(512)
        y = np.arange(512, dtype=float)
        with pytest.raises(DegenerateDataError, match="denominator"):
            rho_q(x, y, q=1.0, s=16, poly_degree=0)

    def test_pearson_sanity_at_q2(self):
        # rank correlation with Pearson across a battery of pair syntheses
        rhos, pearsons = [], []
        for i, c in enumerate(np.linspace(-0.9, 0.9, 30)):
            x, y = correlated_pair(float(c), 4096, 1000 + i)
            rhos.append(rho_q(x, y, q=2.0, s=1024, poly_degree=0).value)
            pearsons.append(float(np.corrcoef(x, y)[0, 1]))
        assert rank_correlation(np.array(rhos), np.array(pearsons)) > 0.9


class TestRhoMatrix:
    def make_panel(self, cols):
        names = tuple(sorted(cols))
        values = np.stack([cols[a] for a in names], axis=1)
        grid = MIN * np.arange(values.shape[0], dtype=np.int64)
        return Panel(names, grid, values, MIN, kind="return")

    def test_two_assets_match_rho_q(self, rng):
        x, y = correlated_pair(0.4, 2048, 5)
        panel = self.make_panel({"A": x, "B": y})
        mat = rho_matrix(panel, q=1.0, s=32)
        direct = rho_q(x, y, q=1.0, s=32).value
        assert mat.pair("A", "B") == pytest.approx(direct, abs=1e-12)
        assert mat.values[0, 0] == 1.0 and mat.values[1, 1] == 1.0

    def test_identical_columns_all_ones(self, rng):
        x = rng.standard_normal(1024)
        panel = self.make_panel({k: x.copy() for k in "ABCD"})
        mat = rho_matrix(panel, q=2.0, s=32)
        assert np.max(np.abs(mat.values - 1.0)) <= 1e-12

    def test_symmetry_and_diagonal_exact(self, rng):
        panel = self.make_panel({k: rng.standard_normal(2048) for k in "ABCDEFGH"})
        mat = rho_matrix(panel, q=4.0, s=64)
        assert np.array_equal(mat.values, mat.values.T)
        assert (np.diag(mat.values) == 1.0).all()

    def test_unique_pair_count(self, rng):
        panel = self.make_panel({f"A{i:02d}": rng.standard_normal(1024) for i in range(16)})
        mat = rho_matrix(panel, q=1.0, s=16)
        assert mat.n_pairs == 16 * 15 // 2
        assert mat.offdiagonal().size == 120

    def test_degenerate_column_flagged(self, rng):
        cols = {"A": rng.standard_normal(512), "B": np.zeros(512), "C": rng.standard_normal(512)}
        panel = self.make_panel(cols)
        mat = rho_matrix(panel, q=1.0, s=16, poly_degree=0)
        assert mat.degenerate == ("B",)
        assert np.isnan(mat.pair("A", "B"))
        assert np.isfinite(mat.pair("A", "C"))
        assert mat.values[1, 1] == 1.0

    def test_matrix_csv(self, tmp_path, rng):
        panel = self.make_panel({k: rng.standard_normal(512) for k in "AB"})
        mat = rho_matrix(panel, q=1.0, s=16)
        path = tmp_path / "rho.csv"
        mat.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "asset,A,B"
        assert len(lines) == 3


class TestRollingRho:
    def test_segment_count_in_ten_day_window(self):
        # 10 days of minute data, s = 360 min -> 40 forward segments
        from mfpanel.fluctuation import SegmentationConfig

        w = 10 * DAY // MIN
        assert SegmentationConfig(scale=360).segment_count(w) == 40

    def test_four_timelines_per_pair(self):
        x, y = correlated_pair(0.6, 20 * 1440, 3)
        rx = make_return_series(x)
        ry = make_return_series(y)
        tl = rolling_rho(rx, ry, window=10 * DAY, step=5 * DAY, q_set=(1.0, 4.0), s_set=(10, 360))
        assert set(tl.values) == {(1.0, 10), (1.0, 360), (4.0, 10), (4.0, 360)}
        assert len(tl.window_ends) == 3  # floor((20-10)/5)+1

    def test_independent_series_mean_near_zero(self):
        xs = make_return_series(iid_gaussian(15 * 1440, 40), asset="X")
        ys = make_return_series(iid_gaussian(15 * 1440, 41), asset="Y")
        tl = rolling_rho(xs, ys, window=5 * DAY, step=1 * DAY, q_set=(1.0,), s_set=(10,))
        vals = tl.values[(1.0, 10)]
        assert abs(float(np.mean(vals))) <= 0.05

    def test_segment_floor_violation(self):
        xs = make_return_series(iid_gaussian(2 * 1440, 1))
        ys = make_return_series(iid_gaussian(2 * 1440, 2))
        with pytest.raises(ValueError, match="at least 10"):
            rolling_rho(xs, ys, window=1 * DAY, step=1 * DAY, q_set=(1.0,), s_set=(360,))

    def test_grid_mismatch_rejected(self):
        xs = make_return_series(iid_gaussian(1440, 1), start_ms=0)
        ys = make_return_series(iid_gaussian(1440, 2), start_ms=60_000)
        with pytest.raises(ValueError, match="grid"):
            rolling_rho(xs, ys, window=HOUR, step=HOUR, s_set=(5,))

    def test_csv_format(self, tmp_path):
        x, y = correlated_pair(0.3, 3 * 1440, 8)
        tl = rolling_rho(make_return_series(x), make_return_series(y),
                         window=1 * DAY, step=1 * DAY, q_set=(1.0,), s_set=(10,))
        path = tmp_path / "rho_tl.csv"
        tl.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "window_end,q,s,rho,excluded_segments"
        assert len(lines) == 1 + 3 * 1 * 1
