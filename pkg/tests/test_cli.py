import csv
import io
import subprocess
import sys

import numpy as np
import pytest

from bayescoint.cli import build_parser, config_from_args, load_csv, main, run
from bayescoint.core import Method
from bayescoint.errors import MissingDataError, ParseError


def write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def kv(text):
    return dict(line.split("=", 1) for line in text.splitlines() if "=" in line and " " not in line.split("=")[0])


def invoke(argv):
    cfg = config_from_args(build_parser().parse_args(argv))
    out, err = io.StringIO(), io.StringIO()
    code = run(cfg, out, err)
    return code, out.getvalue(), err.getvalue()


def series_csv(tmp_path, T=80, seed=0, name="pair.csv"):
    rng = np.random.default_rng(seed)
    x = np.cumsum(rng.normal(size=T))
    y = 1.0 + 2.0 * x + rng.normal(size=T)
    return write(tmp_path, "y,x\n" + "".join(f"{a:.17g},{b:.17g}\n" for a, b in zip(y, x)), name)


class TestLoadCsv:
    def test_plain(self, tmp_path):
        d = load_csv(write(tmp_path, "a,b\n1,2\n3,4\n5,6\n7,8\n9,10\n"))
        assert d.labels == ("a", "b")
        np.testing.assert_array_equal(d.y, [1, 3, 5, 7, 9])

    def test_timestamp_column_dropped(self, tmp_path):
        text = "date,a,b\n" + "".join(f"2020-01-0{i + 1},{i},{2 * i + 1}\n" for i in range(6))
        d = load_csv(write(tmp_path, text))
        assert d.labels == ("a", "b")
        assert d.values.shape == (6, 2)

    def test_regressand_choice(self, tmp_path):
        d = load_csv(write(tmp_path, "a,b\n1,2\n3,4\n5,6\n7,8\n9,10\n"), regressand="b")
        np.testing.assert_array_equal(d.y, [2, 4, 6, 8, 10])

    @pytest.mark.parametrize("token", ["NA", "", "nan", "."])
    def test_missing_reports_position(self, tmp_path, token):
        p = write(tmp_path, f"a,b\n1,2\n3,{token}\n5,6\n7,8\n9,10\n")
        with pytest.raises(MissingDataError) as info:
            load_csv(p)
        assert (info.value.line, info.value.column) == (3, 2)

    def test_bad_cell(self, tmp_path):
        with pytest.raises(ParseError):
            load_csv(write(tmp_path, "a,b\n1,2\n3,x\n5,6\n7,8\n9,10\n"))

    def test_ragged_row(self, tmp_path):
        with pytest.raises(ParseError):
            load_csv(write(tmp_path, "a,b\n1,2\n3\n"))

    def test_empty(self, tmp_path):
        with pytest.raises(ParseError):
            load_csv(write(tmp_path, ""))


class TestCommands:
    def test_simulate_is_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        a.mkdir()
        b.mkdir()
        for d in (a, b):
            code, out, _ = invoke(["simulate", "--T", "50", "--seed", "3", "--output-dir", str(d)])
            assert code == 0
        name = "instance_T50_k1_seed3.csv"
        assert (a / name).read_bytes() == (b / name).read_bytes()
        assert (a / "instance_T50_k1_seed3.truth.json").read_bytes() == \
               (b / "instance_T50_k1_seed3.truth.json").read_bytes()

    def test_simulate_then_test(self, tmp_path):
        invoke(["simulate", "--T", "120", "--seed", "1", "--order", "2", "--output-dir", str(tmp_path)])
        code, out, _ = invoke(["test", "--input", str(tmp_path / "instance_T120_k2_seed1.csv"), "--method", "rjmcmc",
                               "--k-max", "3", "--iterations", "1500", "--burn-in", "300", "--output-dir",
                               str(tmp_path)])
        assert code == 0
        vals = kv(out)
        assert vals["method"] == "rjmcmc"
        assert vals["verdict"] in ("cointegrated", "not-cointegrated")
        with open(tmp_path / "draws.csv") as fh:
            header = next(csv.reader(fh))
        assert header == ["k", "rho", "xi_1", "xi_2", "alpha", "beta2_x", "sigma2"]
        assert (tmp_path / "order_posterior.csv").exists()

    @pytest.mark.parametrize("method", ["ar1-bf", "ar1-credible", "engle-granger"])
    def test_other_methods(self, tmp_path, method):
        p = series_csv(tmp_path)
        code, out, _ = invoke(["test", "--input", str(p), "--method", method, "--output-dir", str(tmp_path)])
        assert code == 0
        assert kv(out)["verdict"] == "cointegrated"

    def test_missing_data_exit_code(self, tmp_path):
        p = write(tmp_path, "a,b\n1,2\n3,NA\n5,6\n7,8\n9,10\n")
        code, _, err = invoke(["test", "--input", str(p)])
        assert code == 2
        assert "line 3" in err

    def test_missing_file_exit_code(self, tmp_path):
        assert invoke(["test", "--input", str(tmp_path / "nope.csv")])[0] == 2

    def test_numerical_failure_exit_code(self, tmp_path):
        x = np.arange(20.0)
        p = write(tmp_path, "y,x\n" + "".join(f"{3 * v + 1},{v}\n" for v in x))
        assert invoke(["test", "--input", str(p), "--method", "engle-granger"])[0] == 3

    def test_seed_from_environment(self, monkeypatch):
        monkeypatch.setenv("BAYESCOINT_SEED", "42")
        assert config_from_args(build_parser().parse_args(["simulate"])).seed == 42
        assert config_from_args(build_parser().parse_args(["simulate", "--seed", "7"])).seed == 7

    def test_bad_environment_seed(self, monkeypatch):
        monkeypatch.setenv("BAYESCOINT_SEED", "abc")
        assert main(["simulate"]) == 2

    def test_bench_order_and_summarize(self, tmp_path):
        code, out, _ = invoke(["bench-order", "--T", "60", "80", "--trials", "3", "--k-max", "2", "--iterations",
                               "400", "--burn-in", "100", "--output-dir", str(tmp_path)])
        assert code == 0
        vals = kv(out)
        assert {"accuracy_rjmcmc_T60", "variance_rjmcmc_T80", "accuracy_bic_T80"} <= set(vals)
        with open(tmp_path / "order_summary.csv") as fh:
            assert next(csv.reader(fh)) == ["method", "T", "accuracy", "variance", "trials", "failures"]
        code, again, _ = invoke(["summarize", "--input", str(tmp_path / "order_results.csv")])
        assert code == 0
        for key in ("accuracy_rjmcmc_T60", "variance_rjmcmc_T80", "accuracy_bic_T60"):
            assert float(kv(again)[key]) == pytest.approx(float(vals[key]))

    def test_bench_roc_and_summarize(self, tmp_path):
        code, out, _ = invoke(["bench-roc", "--T", "60", "--trials", "10", "--methods", "ar1-credible", "engle-granger",
                               "--output-dir", str(tmp_path)])
        assert code == 0
        code, again, _ = invoke(["summarize", "--input", str(tmp_path / "roc_results.csv")])
        assert kv(again)["auc_ar1-credible"] == kv(out)["auc_ar1-credible"]

    def test_summarize_unknown_file(self, tmp_path):
        p = write(tmp_path, "a,b\n1,2\n")
        assert invoke(["summarize", "--input", str(p)])[0] == 2

    def test_gibbs_defaults_to_order_one(self):
        cfg = config_from_args(build_parser().parse_args(["test", "--input", "x.csv", "--method", "gibbs"]))
        assert cfg.spec().order == 1
        assert cfg.spec().method is Method.GIBBS

    def test_module_entry_point(self, tmp_path):
        res = subprocess.run([sys.executable, "-m", "bayescoint", "--help"], capture_output=True, text=True)
        assert res.returncode == 0
        assert "bench-roc" in res.stdout
