import io
import json
import math

import numpy as np
import pytest
from scipy import integrate, stats

from mixhom import (Kernel, MixingDistribution, Theta, em_statistic, fit_null, limit_law,
                    load_series, run_report)
from mixhom.calibration import save_law
from mixhom.cli import main, run_experiment, sig6
from mixhom.errors import ConfigurationError, DomainError, ParseError
from mixhom.report import density_curves, write_curves

LOGISTIC = Kernel.parse("logistic")


def _write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture(scope="module")
def law_table(tmp_path_factory):
    path = tmp_path_factory.mktemp("law") / "logistic.json"
    save_law(limit_law(LOGISTIC, 20_000, seed=1), path, LOGISTIC)
    return path


@pytest.fixture(scope="module")
def sample_csv(tmp_path_factory):
    rng = np.random.default_rng(8)
    x = np.concatenate([rng.logistic(0, 1, 80), rng.logistic(4, 1, 70)])
    path = tmp_path_factory.mktemp("data") / "sample.csv"
    path.write_text("id,value\n" + "".join(f"{i},{float(v)!r}\n" for i, v in enumerate(x)),
                    encoding="utf-8")
    return path, x


# load_series -----------------------------------------------------------------

def test_load_single_column(tmp_path):
    assert load_series(_write(tmp_path, "1\n2\n3\n")).tolist() == [1.0, 2.0, 3.0]


def test_load_log_transform(tmp_path):
    x = load_series(_write(tmp_path, f"1\n{math.e!r}\n"), log_transform=True)
    assert np.allclose(x, [0.0, 1.0], atol=1e-15)


@pytest.mark.parametrize("bad", ["0", "-2.5"])
def test_log_transform_nonpositive_names_row(tmp_path, bad):
    path = _write(tmp_path, f"1\n2\n{bad}\n4\n")
    with pytest.raises(DomainError, match="row 3"):
        load_series(path, log_transform=True)


def test_non_numeric_names_row(tmp_path):
    path = _write(tmp_path, "1\n2\nabc\n")
    with pytest.raises(ParseError, match="row 3"):
        load_series(path)


def test_header_detection_and_column_name(tmp_path):
    path = _write(tmp_path, "a,b\n1,10\n2,20\n")
    assert load_series(path, column=1).tolist() == [10.0, 20.0]
    assert load_series(path, column="b").tolist() == [10.0, 20.0]
    assert load_series(path, column="a", has_header=True).tolist() == [1.0, 2.0]
    with pytest.raises(ParseError, match="row 1"):
        load_series(path, column=0, has_header=False)
    with pytest.raises(ParseError):
        load_series(path, column="c")


def test_missing_column_and_file(tmp_path):
    path = _write(tmp_path, "1,2\n3\n")
    with pytest.raises(ParseError, match="row 2"):
        load_series(path, column=1)
    with pytest.raises(ParseError):
        load_series(tmp_path / "nope.csv")
    with pytest.raises(ParseError):
        load_series(_write(tmp_path, "", "empty.csv"))
    with pytest.raises(ParseError):
        load_series(_write(tmp_path, "1\nnan\n", "nan.csv"))


# run_report ------------------------------------------------------------------

def test_report_statistic_equals_library(sample_csv, law_table):
    path, x = sample_csv
    rep = run_report(LOGISTIC, load_series(path, "value"), table=str(law_table))
    lib = em_statistic(LOGISTIC, x)
    assert rep.em["statistic"] == lib.statistic
    assert rep.n == x.size and rep.kernel == LOGISTIC.name
    assert 0 < rep.em["p_value"] <= 1
    assert rep.calibration["case"] == "CaseI"


def test_report_json_round_trip(sample_csv, law_table):
    _, x = sample_csv
    rep = run_report(LOGISTIC, x, table=str(law_table))
    back = json.loads(rep.to_json())
    assert back == json.loads(json.dumps(rep.to_dict()))
    assert back["em"]["statistic"] == rep.em["statistic"]
    assert back["null_fit"]["mu_hat"] == rep.null_fit["mu_hat"]
    for track, orig in zip(back["em"]["per_pi"], rep.em["per_pi"]):
        assert track["M"] == orig["M"]


def test_report_with_lrt(sample_csv, law_table):
    _, x = sample_csv
    rep = run_report(LOGISTIC, x, table=str(law_table), lrt_reps=100)
    assert rep.lrt["reps"] == 100
    assert rep.lrt["statistic"] >= -1e-9
    assert 0 < rep.lrt["p_value"] <= 1


def test_cli_test_byte_identical(sample_csv, law_table, tmp_path):
    path, _ = sample_csv
    outs = []
    for i in range(2):
        out = tmp_path / f"r{i}.json"
        code = main(["test", "--data", str(path), "--column", "value",
                     "--table", str(law_table), "--out", str(out)])
        assert code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["em"]["statistic"] > 0


def test_pvalues_uniform_under_null(law_table):
    law = limit_law(LOGISTIC, 20_000, seed=1)
    pvals = []
    for s in range(200):
        x = np.random.default_rng([77, s]).logistic(size=200)
        pvals.append(em_statistic(LOGISTIC, x, law=law).p_value)
    assert stats.kstest(pvals, "uniform").pvalue > 0.01


# exit codes ------------------------------------------------------------------

def test_exit_codes(tmp_path, capsys):
    good = _write(tmp_path, "".join(f"{v}\n" for v in np.linspace(1, 5, 30)), "good.csv")
    assert main(["test", "--data", str(_write(tmp_path, "1\nx\n", "bad.csv"))]) == 3
    assert main(["test", "--data", str(_write(tmp_path, "1\n0\n", "z.csv")),
                 "--log-transform"]) == 4
    assert main(["matrices", "--kernel", "cauchy"]) == 6
    assert main(["test", "--data", str(good), "--threads", "0"]) == 6
    assert main(["curves", "--data", str(good), "--range", "2,2"]) == 4
    err = capsys.readouterr().err
    assert "ParseError" in err and "DomainError" in err
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2


def test_cli_matrices_six_digits(capsys):
    assert main(["matrices", "--kernel", "extreme"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["case"] == "CaseI"
    T = np.array(out["tildeB22"])
    assert T.shape == (3, 3)
    for v in T.ravel():
        assert v == float(f"{v:.6g}")
    assert T[0, 0] == pytest.approx(0.3921, abs=5e-4)


def test_cli_matrices_case_two(capsys):
    assert main(["matrices", "--kernel", "t10"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["case"] == "CaseII"
    u = out["null_eigenvector"]
    assert abs(u[1]) < 1e-6 and u[0] * u[2] > 0


def test_sig6():
    assert sig6(1.23456789) == 1.23457
    assert sig6({"a": [0.000123456789, 2]}) == {"a": [0.000123457, 2]}


def test_cli_lrt_and_calibrate(sample_csv, tmp_path):
    path, _ = sample_csv
    out = tmp_path / "lrt.json"
    assert main(["lrt", "--data", str(path), "--column", "value", "--reps", "100",
                 "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["reps"] == 100 and rep["statistic"] > 0
    table = tmp_path / "law.json"
    assert main(["calibrate", "--draws", "2000", "--out", str(table)]) == 0
    assert main(["test", "--data", str(path), "--column", "value", "--table", str(table),
                 "--out", str(tmp_path / "t.json")]) == 0
    assert json.loads((tmp_path / "t.json").read_text())["calibration"]["draws"] == 2000


def test_cli_experiment(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"kernel": "normal", "published_design": True}))
    out = tmp_path / "tuning.json"
    assert main(["experiment", "tuning", "--spec", str(spec), "--out", str(out)]) == 0
    res = json.loads(out.read_text())
    assert res["c0"] == pytest.approx(-1.410, abs=0.05)
    assert res["c1"] == pytest.approx(-114.433, abs=10)
    with pytest.raises(ConfigurationError):
        run_experiment("power", {"kernel": "logistic", "n": 50})
    with pytest.raises(ConfigurationError):
        run_experiment("bogus", {"kernel": "logistic"})
    assert main(["experiment", "type1", "--spec", str(tmp_path / "missing.json")]) == 3


# density_curves --------------------------------------------------------------

def _null_fit(mu=0.0, sigma=1.0):
    x = np.random.default_rng(0).logistic(mu, sigma, 500)
    return fit_null(LOGISTIC, x)


def test_curves_integrate_to_one():
    G = MixingDistribution(0.3, Theta(-1.0, 0.7), Theta(2.0, 1.5))
    tab = density_curves(LOGISTIC, G, _null_fit(), -60, 80, 20001)
    assert integrate.trapezoid(tab[:, 1], tab[:, 0]) == pytest.approx(1.0, abs=1e-3)
    assert integrate.trapezoid(tab[:, 2], tab[:, 0]) == pytest.approx(1.0, abs=1e-3)
    assert np.allclose(np.diff(tab[:, 0]), tab[1, 0] - tab[0, 0])


def test_curves_single_component():
    G = MixingDistribution(1.0, Theta(1.0, 2.0), Theta(5.0, 0.5))
    tab = density_curves(LOGISTIC, G, _null_fit(), -10, 10, 101)
    ref = stats.logistic.pdf(tab[:, 0], loc=1.0, scale=2.0)
    assert np.allclose(tab[:, 1], ref, rtol=1e-12, atol=1e-300)


def test_curves_bimodal():
    G = MixingDistribution(0.5, Theta(-4.0, 0.8), Theta(4.0, 0.8))
    y = density_curves(LOGISTIC, G, _null_fit(), -10, 10, 401)[:, 1]
    peaks = np.sum((y[1:-1] > y[:-2]) & (y[1:-1] > y[2:]))
    assert peaks == 2


@pytest.mark.parametrize("lo,hi,points", [(1.0, 1.0, 10), (2.0, 1.0, 10), (0.0, math.inf, 10),
                                          (0.0, 1.0, 1)])
def test_curves_domain_errors(lo, hi, points):
    G = MixingDistribution(0.5, Theta(0.0, 1.0), Theta(1.0, 1.0))
    with pytest.raises(DomainError):
        density_curves(LOGISTIC, G, _null_fit(), lo, hi, points)


def test_write_curves_csv(tmp_path, sample_csv):
    G = MixingDistribution(0.5, Theta(0.0, 1.0), Theta(3.0, 1.0))
    tab = density_curves(LOGISTIC, G, _null_fit(), -5, 8, 7)
    buf = io.StringIO()
    write_curves(tab, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "x,mixture_density,null_density"
    back = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    assert np.array_equal(back, tab)
    path, _ = sample_csv
    out = tmp_path / "curves.csv"
    assert main(["curves", "--data", str(path), "--column", "value", "--points", "50",
                 "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 51
