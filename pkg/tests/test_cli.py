import json
import logging

import numpy as np
import pytest

from bestat import (
    ConfigError,
    DataError,
    cells_of,
    derive_null_seed,
    empirical_copula,
    interval_index,
    sample_scenario,
)
from bestat.beast import _streams
from bestat.cli import (
    SCHEMAS,
    _load_table,
    _merge,
    _parse_bool,
    _parse_lam,
    _resolve_columns,
    build_parser,
    main,
)


@pytest.fixture(autouse=True)
def _fresh_logger():
    # the CLI binds its stderr handler on first use; rebind per test so
    # captured streams are never stale
    log = logging.getLogger("bestat")
    saved = log.handlers[:]
    log.handlers = []
    yield
    log.handlers = saved


@pytest.fixture()
def data_file(tmp_path):
    x = sample_scenario("circle", 64, 0.1, seed=3)
    path = tmp_path / "data.csv"
    lines = ["a,b"] + [f"{float(row[0])!r},{float(row[1])!r}" for row in x]
    path.write_text("\n".join(lines) + "\n")
    return path


class TestLoadTable:
    def test_comma_with_header(self, tmp_path):
        f = tmp_path / "t.csv"
        f.write_text("x,y\n1,2\n3,4\n")
        header, data = _load_table(f)
        assert header == ["x", "y"]
        assert data.tolist() == [[1.0, 2.0], [3.0, 4.0]]

    def test_whitespace_no_header(self, tmp_path):
        f = tmp_path / "t.dat"
        f.write_text("1 2\n3 4\n")
        header, data = _load_table(f)
        assert header is None
        assert data.shape == (2, 2)

    def test_semicolon_and_tab(self, tmp_path):
        f = tmp_path / "t.txt"
        f.write_text("1;2\n3;4\n")
        assert _load_table(f)[1].tolist() == [[1.0, 2.0], [3.0, 4.0]]
        f.write_text("1\t2\n3\t4\n")
        assert _load_table(f)[1].tolist() == [[1.0, 2.0], [3.0, 4.0]]

    def test_explicit_delimiter(self, tmp_path):
        f = tmp_path / "t.txt"
        f.write_text("1|2\n3|4\n")
        assert _load_table(f, "|")[1].tolist() == [[1.0, 2.0], [3.0, 4.0]]

    def test_ragged(self, tmp_path):
        f = tmp_path / "t.csv"
        f.write_text("1,2\n3\n")
        with pytest.raises(DataError):
            _load_table(f)

    def test_header_without_rows(self, tmp_path):
        f = tmp_path / "t.csv"
        f.write_text("x,y\n")
        with pytest.raises(DataError):
            _load_table(f)

    def test_bad_cell(self, tmp_path):
        f = tmp_path / "t.csv"
        f.write_text("1,2\n3,oops\n")
        with pytest.raises(DataError):
            _load_table(f)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            _load_table(tmp_path / "absent.csv")


class TestColumnSelection:
    header = ["alpha", "beta", "gamma"]

    def test_by_name_and_index(self):
        assert _resolve_columns("beta,alpha", self.header, 3, "x") == [1, 0]
        assert _resolve_columns("0,2", self.header, 3, "x") == [0, 2]
        assert _resolve_columns("-1", self.header, 3, "y") == [2]
        assert _resolve_columns("2", None, 3, "y") == [2]

    def test_errors(self):
        with pytest.raises(ConfigError):
            _resolve_columns("delta", self.header, 3, "x")
        with pytest.raises(ConfigError):
            _resolve_columns("5", self.header, 3, "x")
        with pytest.raises(ConfigError):
            _resolve_columns("alpha,0", self.header, 3, "x")
        with pytest.raises(ConfigError):
            _resolve_columns(" , ", self.header, 3, "x")


class TestOptionMerge:
    def test_parse_helpers(self):
        assert _parse_bool("Yes") is True and _parse_bool("0") is False
        with pytest.raises(ConfigError):
            _parse_bool("maybe")
        assert _parse_lam("auto") == "auto"
        assert _parse_lam("0.25") == 0.25
        with pytest.raises(ConfigError):
            _parse_lam("soft")

    def test_config_file_under_flags(self, tmp_path, data_file):
        conf = tmp_path / "run.conf"
        conf.write_text("# defaults\ndepth=2\nnull-sims=50\nm=16\nr=16\n")
        args = build_parser().parse_args(
            ["test", str(data_file), "--config", str(conf), "--depth", "3"]
        )
        opt = _merge(args, SCHEMAS["test"])
        assert opt.depth == 3          # flag wins
        assert opt.null_sims == 50     # config fills the gap
        assert opt.m == 16 and opt.r == 16
        assert opt.lam == "auto"       # untouched default

    def test_unknown_config_key(self, tmp_path, data_file):
        conf = tmp_path / "run.conf"
        conf.write_text("dept=2\n")
        assert main(["test", str(data_file), "--config", str(conf)]) == 1

    def test_malformed_config_line(self, tmp_path, data_file):
        conf = tmp_path / "run.conf"
        conf.write_text("depth 2\n")
        assert main(["test", str(data_file), "--config", str(conf)]) == 1


class TestTestCommand:
    def test_report_roundtrip_and_figure(self, tmp_path, data_file):
        out = tmp_path / "report.json"
        argv = [
            "test", str(data_file), "--seed", "5", "--depth", "2",
            "--m", "16", "--r", "16", "--null-sims", "60",
            "--out", str(out), "--no-cache",
        ]
        assert main(argv) == 0
        report = json.loads(out.read_text())
        assert report["format"] == "bestat-report"
        assert report["schema_version"] == 1
        assert report["input"]["x_names"] == ["a"]
        assert report["input"]["y_names"] == ["b"]
        assert report["input"]["n"] == 64 and report["input"]["p"] == 2
        assert report["params"]["method"] == "beast"
        assert report["params"]["seed"] == 5
        assert report["params"]["null_seed"] == derive_null_seed(5)
        assert report["params"]["set_kind"] == "cross2"
        assert 0.0 < report["result"]["p_value"] <= 1.0
        top = report["result"]["top_interactions"]
        assert len(top) == 3
        assert np.asarray(top[0]["digits"]).shape == (2, 2)
        assert top[0]["white"] + top[0]["blue"] == 64
        fig = tmp_path / "report-interaction.png"
        assert fig.exists() and fig.stat().st_size > 0

        first = out.read_bytes()
        assert main(argv) == 0
        assert out.read_bytes() == first

    def test_no_figures_suppresses(self, tmp_path, data_file):
        out = tmp_path / "r.json"
        assert main([
            "test", str(data_file), "--seed", "5", "--depth", "2",
            "--m", "16", "--r", "16", "--null-sims", "40",
            "--out", str(out), "--no-cache", "--no-figures",
        ]) == 0
        assert not (tmp_path / "r-interaction.png").exists()

    def test_stdout_report(self, data_file, capsys):
        assert main([
            "test", str(data_file), "--seed", "5", "--depth", "2",
            "--m", "16", "--r", "16", "--null-sims", "40", "--no-cache",
        ]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["command"] == "test"

    def test_column_flags(self, tmp_path, data_file):
        out = tmp_path / "r.json"
        assert main([
            "test", str(data_file), "--x", "b", "--y", "a",
            "--seed", "5", "--depth", "2", "--m", "16", "--r", "16",
            "--null-sims", "40", "--out", str(out), "--no-cache",
            "--no-figures",
        ]) == 0
        report = json.loads(out.read_text())
        assert report["input"]["x_columns"] == [1]
        assert report["input"]["y_columns"] == [0]

    def test_overlapping_columns_fail(self, data_file):
        assert main([
            "test", str(data_file), "--x", "a", "--y", "a", "--seed", "1",
        ]) == 1

    def test_missing_file_fails(self, tmp_path):
        assert main(["test", str(tmp_path / "none.csv"), "--seed", "1"]) == 1

    def test_depth_out_of_range_fails(self, data_file):
        assert main(["test", str(data_file), "--depth", "7", "--seed", "1"]) == 1

    def test_alternative_methods(self, tmp_path, data_file):
        for method in ("chi2", "maxbet", "spearman"):
            out = tmp_path / f"{method}.json"
            assert main([
                "test", str(data_file), "--method", method,
                "--seed", "5", "--depth", "2", "--m", "16", "--r", "16",
                "--null-sims", "40", "--out", str(out), "--no-cache",
                "--no-figures",
            ]) == 0
            report = json.loads(out.read_text())
            assert report["params"]["method"] == method
            assert report["params"]["lam"] is None


class TestNullThenTest:
    def test_prebuilt_cache_is_reused(self, tmp_path, data_file):
        cache = tmp_path / "cache"
        assert main([
            "null", "--seed", "7", "--n", "64", "--depth", "2",
            "--m", "16", "--r", "16", "--null-sims", "50",
            "--cache-dir", str(cache),
        ]) == 0
        files = sorted(cache.glob("null-*.json"))
        assert len(files) == 1
        before = files[0].read_bytes()

        out = tmp_path / "r.json"
        assert main([
            "test", str(data_file), "--seed", "7", "--depth", "2",
            "--m", "16", "--r", "16", "--null-sims", "50",
            "--cache-dir", str(cache), "--out", str(out), "--no-figures",
        ]) == 0
        after = sorted(cache.glob("null-*.json"))
        assert after == files
        assert files[0].read_bytes() == before
        report = json.loads(out.read_text())
        assert report["params"]["null_seed"] == derive_null_seed(7)


class TestPowerCommand:
    def test_csv_and_figure(self, tmp_path):
        out = tmp_path / "power.csv"
        assert main([
            "power", "circle", "--kappas", "0,1", "--methods", "chi2,maxbet",
            "--n", "48", "--replicates", "10", "--null-sims", "50",
            "--depth", "2", "--m", "8", "--r", "16", "--seed", "21",
            "--alpha", "0.1", "--out", str(out), "--no-cache",
        ]) == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "scenario,kappa,method,n,replicates,power,se"
        assert len(lines) == 5
        chi2_zero = next(l for l in lines[1:] if l.startswith("circle,0.0,chi2"))
        assert float(chi2_zero.split(",")[5]) > 0.5
        assert (tmp_path / "power-power.png").exists()

    def test_unknown_scenario_rejected_by_parser(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["power", "spiral"])


class TestBeautyCommand:
    def test_table_and_direction(self, tmp_path, data_file, capsys):
        assert main([
            "beauty", str(data_file), "--depth", "2", "--t-max", "2",
            "--t-steps", "5", "--seed", "9",
        ]) == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert lines[0] == "t,re,im"
        assert len(lines) == 6
        t0 = lines[1].split(",")
        assert float(t0[0]) == 0.0
        assert float(t0[1]) == 1.0 and float(t0[2]) == 0.0
        out = tmp_path / "phi.csv"
        assert main([
            "beauty", str(data_file), "--depth", "2", "--t-steps", "3",
            "--direction", "1,-1", "--seed", "9", "--out", str(out),
        ]) == 0
        assert out.exists()
        assert (tmp_path / "phi-beauty.png").exists()

    def test_bad_direction_length(self, data_file):
        assert main([
            "beauty", str(data_file), "--direction", "1,2,3", "--seed", "1",
        ]) == 1


class TestExpandCommand:
    def test_rows_match_library(self, tmp_path, data_file, capsys):
        assert main(["expand", str(data_file), "--depth", "2", "--seed", "9"]) == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert lines[0] == "u_a,u_b,k_a,k_b,cell"
        rows = [l.split(",") for l in lines[1:]]
        assert len(rows) == 64
        got_u = np.array([[float(r[0]), float(r[1])] for r in rows])
        got_k = np.array([[int(r[2]), int(r[3])] for r in rows])
        got_cell = np.array([int(r[4]) for r in rows])

        x = sample_scenario("circle", 64, 0.1, seed=3)
        u = empirical_copula(x, np.random.default_rng(_streams(9)[0]))
        assert np.array_equal(got_u, u)
        assert np.array_equal(got_k, interval_index(u, 2))
        assert np.array_equal(got_cell, cells_of(u, 2))
