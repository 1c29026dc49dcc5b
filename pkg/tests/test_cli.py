import numpy as np
import pytest

from rankregions.cli import (
    ConfigError,
    emit_csv,
    main,
    parse_config,
    render_heatmap,
    resolved_config_text,
)
from rankregions.experiments import CoverageReport, RankMap


def _synthetic_map(res=81, m=20, values=None):
    a = np.linspace(-2, 2, res)
    b = np.linspace(-1, 5, res)
    if values is None:
        rng = np.random.default_rng(0)
        values = rng.integers(1, m + 1, size=(res, res)) / m
    return RankMap(
        a_values=a, b_values=b, values=values, engine_kind="knn",
        m=m, n=100, seed=0, scenario="gaussian-mixture", estimate=None,
    )


class TestParseConfig:
    def test_valid_coverage_invocation(self):
        cfg = parse_config(
            "coverage --engine knn --n 20 --m 20 --q 19 --trials 10000 --seed 1".split()
        )
        assert cfg.subcommand == "coverage"
        assert cfg.engine == "knn"
        assert cfg.n == 20 and cfg.m == 20 and cfg.q == 19
        assert cfg.trials == 10000 and cfg.seed == 1

    def test_q_above_m_rejected(self):
        with pytest.raises(ConfigError, match="q must be <= m"):
            parse_config("coverage --m 20 --q 21".split())

    def test_flag_overrides_config_file(self, tmp_path):
        f = tmp_path / "run.conf"
        f.write_text("n = 50\nm = 10\nq = 9\n")
        cfg = parse_config(["coverage", "--config", str(f), "--n", "100"])
        assert cfg.n == 100 and cfg.m == 10 and cfg.q == 9

    def test_unknown_key_rejected(self, tmp_path):
        f = tmp_path / "run.conf"
        f.write_text("frobnicate = 3\n")
        with pytest.raises(ConfigError, match="frobnicate"):
            parse_config(["coverage", "--config", str(f)])

    def test_alpha_range(self):
        with pytest.raises(ConfigError, match="alpha.*0.5 and 1"):
            parse_config("coverage --alpha 0.4".split())

    def test_grid_parse(self):
        cfg = parse_config(["rankmap", "--grid=-1,1,0,3,11"])
        g = cfg.grid
        assert (g.a_min, g.a_max, g.b_min, g.b_max, g.res) == (-1, 1, 0, 3, 11)

    def test_shrinkage_accepts_n_list(self):
        cfg = parse_config(["shrinkage", "--n", "50,200,800"])
        assert cfg.n_values == (50, 200, 800)

    def test_coverage_rejects_n_list(self):
        with pytest.raises(ConfigError, match="single sample size"):
            parse_config(["coverage", "--n", "50,100"])

    def test_ellipsoid_engine_rejected_for_rankmap(self):
        with pytest.raises(ConfigError, match="resampling engine"):
            parse_config(["rankmap", "--engine", "ellipsoid"])

    def test_resolved_roundtrip(self, tmp_path):
        argv = "coverage --engine mle --n 50 --m 10 --q 9 --trials 77 --seed 3".split()
        cfg = parse_config(argv)
        f = tmp_path / "config.resolved"
        f.write_text(resolved_config_text(cfg))
        cfg2 = parse_config(["coverage", "--config", str(f)])
        assert cfg2 == cfg


class TestEmitCsv:
    def test_coverage_columns(self, tmp_path):
        rep = CoverageReport(
            method="knn", scenario="gaussian-mixture", n=20, m=20, q=19,
            trials=100, hits=95, failures=0, nominal=0.95,
        )
        path = tmp_path / "coverage.csv"
        emit_csv(rep, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "method,n,m,q,trials,hits,coverage"
        assert lines[1] == "knn,20,20,19,100,95,0.95"

    def test_ellipsoid_row_blank_mq(self, tmp_path):
        rep = CoverageReport(
            method="ellipsoid", scenario="uniform-input", n=20, m=None, q=None,
            trials=100, hits=97, failures=2, nominal=0.95,
        )
        path = tmp_path / "coverage.csv"
        emit_csv(rep, path)
        row = path.read_text().splitlines()[1]
        assert row.startswith("ellipsoid,20,,,100,97,")

    def test_rankmap_line_count_and_determinism(self, tmp_path):
        rmap = _synthetic_map(res=81)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        emit_csv(rmap, p1)
        emit_csv(rmap, p2)
        text = p1.read_text()
        assert len(text.splitlines()) == 81 * 81 + 1
        assert text.endswith("\n")
        assert p1.read_bytes() == p2.read_bytes()

    def test_shrinkage_rows(self, tmp_path):
        path = tmp_path / "shrinkage.csv"
        emit_csv([(50, 0.5, 4), (100, 0.25, 4)], path)
        lines = path.read_text().splitlines()
        assert lines[0] == "n,accepted_fraction,repeats"
        assert lines[1] == "50,0.5,4"


class TestRenderHeatmap:
    def _pixels(self, path):
        data = path.read_bytes()
        header, rest = data.split(b"\n", 1)
        dims, rest = rest.split(b"\n", 1)
        maxval, raw = rest.split(b"\n", 1)
        w, h = map(int, dims.split())
        return header, w, h, np.frombuffer(raw, dtype=np.uint8).reshape(h, w, 3)

    def test_dimensions(self, tmp_path):
        rmap = _synthetic_map(res=81)
        path = tmp_path / "map.ppm"
        render_heatmap(rmap, path, block=4)
        header, w, h, px = self._pixels(path)
        assert header == b"P6" and (w, h) == (324, 324)

    def test_constant_map_single_color(self, tmp_path):
        rmap = _synthetic_map(res=5, m=4, values=np.ones((5, 5)))
        path = tmp_path / "map.ppm"
        render_heatmap(rmap, path, block=2)
        _, _, _, px = self._pixels(path)
        colors = np.unique(px.reshape(-1, 3), axis=0)
        # the constant field plus the white marker cross at (0, 2)
        assert len(colors) == 2
        assert [255, 255, 255] in colors.tolist()

    def test_endpoint_values_get_endpoint_colors(self, tmp_path):
        m = 4
        values = np.full((3, 3), 1.0 / m)
        values[2, 2] = 1.0
        rmap = _synthetic_map(res=3, m=m, values=values)
        rmap = RankMap(
            a_values=np.array([5.0, 6.0, 7.0]), b_values=np.array([5.0, 6.0, 7.0]),
            values=values, engine_kind="knn", m=m, n=10, seed=0,
            scenario="gaussian-mixture", estimate=None,
        )  # grid away from (0,2) so no marker lands on it
        path = tmp_path / "map.ppm"
        render_heatmap(rmap, path, block=1)
        _, _, _, px = self._pixels(path)
        assert (13, 8, 135) == tuple(px[-1, 0])  # low endpoint, bottom-left
        assert (240, 249, 33) == tuple(px[0, -1])  # high endpoint, top-right

    def test_deterministic_bytes(self, tmp_path):
        rmap = _synthetic_map(res=7)
        p1, p2 = tmp_path / "a.ppm", tmp_path / "b.ppm"
        render_heatmap(rmap, p1)
        render_heatmap(rmap, p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestMain:
    def test_coverage_end_to_end_byte_identical(self, tmp_path):
        argv = (
            "coverage --engine knn --scenario gaussian-mixture --n 20 --m 5 "
            "--q 4 --trials 40 --seed 1"
        ).split()
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert main(argv + ["--out", str(out1)]) == 0
        assert main(argv + ["--out", str(out2)]) == 0
        assert (out1 / "coverage.csv").read_bytes() == (out2 / "coverage.csv").read_bytes()

    def test_rankmap_end_to_end_byte_identical(self, tmp_path):
        argv = (
            "rankmap --engine knn --n 25 --m 5 --grid=-1,1,1,3,4 --seed 2"
        ).split()
        out1, out2 = tmp_path / "m1", tmp_path / "m2"
        assert main(argv + ["--out", str(out1)]) == 0
        assert main(argv + ["--out", str(out2)]) == 0
        for name in ("rankmap.csv", "rankmap.ppm"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_rerun_from_resolved_config(self, tmp_path):
        out1 = tmp_path / "orig"
        argv = "coverage --engine mle --n 20 --m 5 --q 4 --trials 25 --seed 4".split()
        assert main(argv + ["--out", str(out1)]) == 0
        out2 = tmp_path / "replay"
        assert main(["coverage", "--config", str(out1 / "config.resolved"),
                     "--out", str(out2)]) == 0
        assert (out1 / "coverage.csv").read_bytes() == (out2 / "coverage.csv").read_bytes()

    def test_bad_flag_exits_nonzero(self, capsys):
        rc = main("coverage --m 5 --q 6 --trials 1".split())
        assert rc == 2
        assert "q must be <= m" in capsys.readouterr().err

    def test_ellipsoid_demo(self, tmp_path):
        out = tmp_path / "e"
        argv = f"ellipsoid-demo --n 150 --seed 5 --grid=-1,1,0,4,9 --out {out}".split()
        assert main(argv) == 0
        text = (out / "ellipsoid.csv").read_text()
        assert text.startswith("key,value\n")
        assert (out / "ellipsoid.ppm").exists()

    def test_shrinkage_cli(self, tmp_path):
        out = tmp_path / "s"
        argv = (
            f"shrinkage --engine knn --n 20,40 --m 5 --q 4 --trials 3 "
            f"--grid=-1,1,1,3,3 --seed 6 --out {out}"
        ).split()
        assert main(argv) == 0
        lines = (out / "shrinkage.csv").read_text().splitlines()
        assert lines[0] == "n,accepted_fraction,repeats"
        assert len(lines) == 3


class TestWriteErrors:
    def test_unwritable_path_reports_absolute(self, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("a plain file, not a directory")
        rep = CoverageReport(
            method="knn", scenario="gaussian-mixture", n=5, m=5, q=4,
            trials=10, hits=9, failures=0, nominal=0.8,
        )
        with pytest.raises(OSError, match=str(blocker)):
            emit_csv(rep, blocker / "sub" / "coverage.csv")

    def test_multi_report_rows(self, tmp_path):
        reports = [
            CoverageReport("knn", "gaussian-mixture", n, 20, 19, 100, 95, 0, 0.95)
            for n in (20, 50, 100)
        ]
        path = tmp_path / "table.csv"
        emit_csv(reports, path)
        lines = path.read_text().splitlines()
        assert len(lines) == 4
        assert lines[2].startswith("knn,50,")
