import json
import math

import numpy as np
import pytest

from wicksell.cli import main, resolve_config, build_parser
from wicksell.errors import InputError
from wicksell.io import dumps_json, fmt, read_observations, write_columns


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


class TestReading:
    def test_header_and_squaring(self, tmp_path):
        p = tmp_path / "r.csv"
        p.write_text("radius\n1\n2\n\n0.5\n")
        s = read_observations(p)
        np.testing.assert_array_equal(s.values, [0.25, 1, 4])
        p.write_text("z\n1\n2\n")
        np.testing.assert_array_equal(read_observations(p, squared=True).values, [1, 2])

    @pytest.mark.parametrize(
        "text,msg",
        [("", "no observations"), ("radius\n", "no observations"), ("0\n0\n", "zero"), ("1\nabc\n", "row 2"), ("1,2\n", "row 1"), ("-1\n", "row 1"), ("nan\n", "row 1")],
    )
    def test_errors(self, tmp_path, text, msg):
        p = tmp_path / "bad.csv"
        p.write_text(text)
        with pytest.raises(InputError, match=msg):
            read_observations(p)


class TestWriting:
    def test_fmt_roundtrip(self):
        for v in (0.1, 1 / 3, 1e-300, 123456789.123):
            assert float(fmt(v)) == v
        assert fmt(math.nan) == "nan"

    def test_json(self):
        s = dumps_json({"a": 0.1, "b": [1, 2.5], "c": math.nan, "d": np.array([[1.0]])})
        assert json.loads(s) == {"a": 0.1, "b": [1, 2.5], "c": None, "d": [[1.0]]}

    def test_columns(self):
        import io

        buf = io.StringIO()
        write_columns({"x": [1, 2], "y": [0.5, 0.25]}, buf)
        assert buf.getvalue() == "x,y\n1,0.5\n2,0.25\n"


class TestCli:
    def test_estimate_from_file(self, tmp_path, capsys):
        p = tmp_path / "r.csv"
        p.write_text("radius\n1\n2\n")
        code, out, _ = run(["estimate", "--input", str(p), "--grid", "0:5:2.5"], capsys)
        assert code == 0
        rows = out.strip().splitlines()
        assert rows[0] == "x,f_hat,v_hat,f_naive"
        assert len(rows) == 4

    def test_simulate_json(self, capsys):
        code, out, _ = run(["simulate", "--n", "5", "--seed", "3", "--format", "json"], capsys)
        assert code == 0
        assert len(json.loads(out)["z"]) == 5

    def test_usage_errors(self, tmp_path, capsys):
        assert run(["nope"], capsys)[0] == 2
        assert run(["simulate", "--n", "0"], capsys)[0] == 2
        assert run(["simulate", "--model", "bogus"], capsys)[0] == 2
        assert run(["estimate", "--grid", "1:0:1"], capsys)[0] == 2
        assert run(["estimate", "--input", str(tmp_path / "missing.csv")], capsys)[0] == 2
        empty = tmp_path / "e.csv"
        empty.write_text("")
        code, _, err = run(["estimate", "--input", str(empty)], capsys)
        assert code == 2 and "no observations" in err
        assert run(["estimate", "--format", "svg"], capsys)[0] == 2  # svg needs --out

    def test_numeric_failure(self, capsys):
        # uniform F is not flat at 0.5, so the limit process does not exist
        code, _, err = run(["gp-limit", "--model", "uniform01", "--x", "0.5"], capsys)
        assert code == 3 and "not flat" in err
        code, _, _ = run(["lan-check", "--n", "1000", "--h", "0,50", "--reps", "2"], capsys)
        assert code == 3

    def test_config_merge(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"n": 77, "seed": 5, "reps": 3}))
        args = build_parser().parse_args(["mc-variance", "--config", str(cfg), "--seed", "9"])
        merged = resolve_config(args)
        assert (merged["n"], merged["seed"], merged["reps"], merged["x"]) == (77, 9, 3, 0.5)

    def test_mc_variance_bytes_reproducible(self, tmp_path, capsys):
        outs = []
        for k, threads in enumerate(("1", "3")):
            path = tmp_path / f"mc{k}.json"
            argv = ["mc-variance", "--n", "500", "--reps", "12", "--seed", "4", "--threads", threads, "--out", str(path)]
            assert main(argv) == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]

    def test_gp_limit_files(self, tmp_path):
        prefix = tmp_path / "gp"
        assert main(["gp-limit", "--paths", "4", "--points", "41", "--format", "csv", "--out", str(prefix)]) == 0
        for suffix in ("_kernel.csv", "_paths.csv", "_lx.csv", "_diagnostics.json"):
            assert (tmp_path / f"gp{suffix}").exists()
        assert len((tmp_path / "gp_lx.csv").read_text().splitlines()) == 5

    def test_svg_outputs(self, tmp_path):
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        for p in (a, b):
            assert main(["estimate", "--n", "60", "--seed", "2", "--format", "svg", "--out", str(p)]) == 0
        assert a.read_bytes() == b.read_bytes()
        assert a.read_text().startswith("<svg")

    def test_flat_rate_small(self, capsys):
        code, out, _ = run(["flat-rate", "--ns", "200,800", "--reps", "20", "--ks-n", "0"], capsys)
        assert code == 0
        d = json.loads(out)
        assert d["ns"] == [200, 800] and d["ks_vs_lx"] is None


class TestReferenceValues:
    def test_estimate_two_points(self, tmp_path, capsys):
        p = tmp_path / "z.csv"
        p.write_text("z\n1\n4\n")
        code, out, _ = run(["estimate", "--input", str(p), "--squared", "--grid", "0:4:2", "--format", "json"], capsys)
        assert code == 0
        res = json.loads(out)
        assert res["x"] == [0, 2, 4]
        np.testing.assert_allclose(res["f_hat"], [0.0, 0.544658, 1.0], atol=5e-7)


class TestStepPlot:
    def test_right_continuous(self):
        from wicksell.plotting import _step_points

        xs, ys = _step_points(np.array([0.0, 1.0, 2.0]), np.array([0.1, 0.5, 0.9]))
        np.testing.assert_array_equal(xs, [0, 1, 1, 2, 2])
        np.testing.assert_array_equal(ys, [0.1, 0.1, 0.5, 0.5, 0.9])
        # at each jump the later vertex carries the new value
        for k in range(1, xs.size):
            if xs[k] == xs[k - 1]:
                assert ys[k] >= ys[k - 1]
