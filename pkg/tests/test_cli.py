import csv
import json

import numpy as np
import pytest
from scipy import stats

from stochsearch import experiments
from stochsearch.cli import main
from stochsearch.logconcave import profile_fit, recenter_to_mean_zero
from stochsearch.model import load_problem, ols_fit


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    rng = np.random.default_rng(3)
    n = 120
    x1, x2 = rng.uniform(-1, 1, n), rng.uniform(-1, 1, n)
    y = 1.0 + 2.0 * x1 - x2 + (rng.exponential(size=n) - 1.0)
    path = tmp_path_factory.mktemp("data") / "data.csv"
    np.savetxt(path, np.column_stack([x1, y, x2]), delimiter=",", header="x1,y,x2", comments="")
    return path


def run_cli(tmp_path, name, *args):
    out = tmp_path / f"{name}.json"
    code = main([name, *map(str, args), "--output", str(out)])
    report = json.loads(out.read_text()) if out.exists() else None
    return code, report, out


def read_table(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


class TestFit:
    def test_fields_and_tables(self, tmp_path, dataset):
        code, rep, out = run_cli(tmp_path, "fit", "--input", dataset, "--response", "y", "--add-intercept",
                                 "--B", 200, "--scheme", "multinomial", "--c", 1, "--seed", 7, "--dump-weights")
        assert code == 0
        assert {"theta_hat", "best_index", "ols", "fit"} <= rep.keys()
        assert rep["columns"] == ["x1", "x2", "(intercept)"]
        header, rows = read_table(f"{out}.candidates.csv")
        assert header == ["b", "theta_1", "theta_2", "theta_3", "profile_loglik"]
        assert len(rows) == 201
        vals = np.array(rows, dtype=float)
        assert int(np.argmax(vals[:, -1])) == rep["best_index"]
        assert vals[rep["best_index"], -1] == rep["profile_values"]["max"]
        np.testing.assert_array_equal(vals[0, 1:4], rep["ols"]["theta"])
        wh, wrows = read_table(f"{out}.weights.csv")
        assert len(wh) == 120 and len(wrows) == 200
        np.testing.assert_allclose(np.array(wrows, dtype=float).sum(axis=1), 120.0)

    def test_b_zero_recentered_ols(self, tmp_path, dataset):
        code, rep, _ = run_cli(tmp_path, "fit", "--input", dataset, "--response", "y", "--add-intercept", "--B", 0)
        assert code == 0
        p = load_problem(dataset, "y", add_intercept=True)
        ols = ols_fit(p).theta
        _, expected = recenter_to_mean_zero(profile_fit(p, ols), ols, p.intercept_col)
        np.testing.assert_allclose(rep["theta_hat"], expected, rtol=1e-12)
        assert rep["best_index"] == 0

    def test_deterministic(self, tmp_path, dataset):
        args = ("fit", "--input", dataset, "--response", "y", "--add-intercept", "--B", 50, "--seed", 7)
        reports = []
        for k in range(2):
            sub = tmp_path / str(k)
            sub.mkdir()
            _, rep, out = run_cli(sub, *args)
            rep.pop("runtime_seconds")
            rep["config"].pop("output")
            reports.append(json.dumps(rep, sort_keys=True))
            reports.append(open(f"{out}.candidates.csv").read())
        assert reports[0] == reports[2] and reports[1] == reports[3]

    def test_missing_file(self, tmp_path):
        code, _, _ = run_cli(tmp_path, "fit", "--input", tmp_path / "nope.csv", "--response", "y")
        assert code == 1

    def test_missing_response(self, tmp_path, dataset):
        assert run_cli(tmp_path, "fit", "--input", dataset, "--response", "zz")[0] == 1
        assert run_cli(tmp_path, "fit", "--input", dataset)[0] == 1

    def test_multinomial_needs_unit_c(self, tmp_path, dataset):
        code, _, _ = run_cli(tmp_path, "fit", "--input", dataset, "--response", "y", "--c", 0.5)
        assert code == 1

    def test_subsample_c(self, tmp_path, dataset):
        code, rep, _ = run_cli(tmp_path, "fit", "--input", dataset, "--response", "y", "--add-intercept",
                               "--scheme", "subsample", "--c", 0.5, "--B", 20)
        assert code == 0 and rep["config"]["scheme"] == "subsample"


def test_unknown_flag_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["fit", "--bogus"])
    assert exc.value.code == 2


def test_stdout_output(capsys):
    assert main(["check-conditions", "--n", "50"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["experiment"] == "check-conditions"


class TestShapes:
    def test_weibull_small_not_asserted(self, tmp_path):
        code, rep, out = run_cli(tmp_path, "sim-weibull", "--q", 2, "--B", 1, "--reps", 10)
        assert code == 0 and rep["asserted"] is False and rep["passed"] is True
        header, rows = read_table(f"{out}.ecdf.csv")
        assert header == ["statistic", "ecdf", "weibull_cdf"] and len(rows) == 10

    def test_joint_small(self, tmp_path):
        code, rep, out = run_cli(tmp_path, "sim-joint", "--n", 200, "--reps", 2)
        assert code == 0 and rep["asserted"] is False
        assert set(rep["relative_errors"]) == {"ols", "increment", "cross"}
        header, rows = read_table(f"{out}.ellipses.csv")
        assert header == ["curve", "level", "x", "y"] and len(rows) == 3 * 2 * 200

    def test_consistency_single_rep(self, tmp_path):
        code, rep, out = run_cli(tmp_path, "sim-consistency", "--n-grid", 50, 100, "--reps", 1, "--B", 3)
        assert code == 0 and rep["asserted"] is False
        assert [r["n"] for r in rep["results"]] == [50, 100]
        assert len(read_table(f"{out}.replicates.csv")[1]) == 2

    def test_bad_counts(self, tmp_path):
        assert run_cli(tmp_path, "sim-weibull", "--reps", 0)[0] == 1
        assert run_cli(tmp_path, "sim-joint", "--n", -3)[0] == 1
        assert run_cli(tmp_path, "sim-weibull", "--tol", 0)[0] == 1


def test_failed_assertion_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr(experiments, "KS_WEIBULL", 0.0)
    code, rep, _ = run_cli(tmp_path, "sim-weibull", "--q", 1, "--B", 1000, "--reps", 100)
    assert code == 2
    assert rep["asserted"] and not rep["passed"]
    assert rep["checks"] == {"ks_below_threshold": False}


class TestCheckConditions:
    def test_half_subsample(self, tmp_path):
        code, rep, _ = run_cli(tmp_path, "check-conditions", "--n", 10, "--scheme", "subsample", "--c", 1, "--Ks", 3)
        assert code == 0
        res = rep["results"][0]
        assert res["w2"] == 1.0
        assert res["w3"] == {"3.0": 0.0}

    def test_unit_weights_dataset(self, tmp_path, dataset, monkeypatch):
        from stochsearch import weights

        def ones(scheme, n, c, rng):
            return weights.WeightVector(np.ones(n), scheme, c)

        monkeypatch.setattr(experiments, "draw_weights", ones)
        code, rep, _ = run_cli(tmp_path, "check-conditions", "--input", dataset, "--response", "y",
                               "--add-intercept")
        assert code == 0
        assert rep["results"][0]["w2"] == 0.0

    def test_d3_decreasing(self, tmp_path):
        code, rep, _ = run_cli(tmp_path, "check-conditions", "--n-grid", 100, 10000)
        assert code == 0 and rep["asserted"] and rep["checks"] == {"d3_decreasing": True}


def test_joint_homoscedastic_identity_gram(tmp_path):
    code, rep, _ = run_cli(tmp_path, "sim-joint", "--design", "sign", "--error-model", "normal",
                           "--n", 2000, "--reps", 2000, "--seed", 4)
    assert code == 0
    sigma = np.array(rep["sigma"])
    assert np.linalg.norm(sigma - np.eye(2)) / np.linalg.norm(np.eye(2)) <= 0.10
    assert max(rep["relative_errors"].values()) <= 0.10


def test_bootstrap_subsample_scheme_same_limit(tmp_path):
    code, rep, _ = run_cli(tmp_path, "sim-bootstrap", "--scheme", "subsample", "--c", 1, "--n-grid", 2000,
                           "--reps", 100, "--inner", 500, "--seed", 2)
    assert code == 0 and rep["checks"]["cov_within_tol"]
    assert rep["results"][0]["median_rel_error"] <= 0.15


def test_tables_agree_with_report(tmp_path):
    code, rep, out = run_cli(tmp_path, "sim-mindist", "--n", 200, "--reps", 10, "--B-grid", 5, 50)
    assert code == 0
    _, rows = read_table(f"{out}.mindist.csv")
    table = np.array(rows, dtype=float)
    np.testing.assert_allclose(table[:, 1], rep["median_min_excl0"], rtol=0, atol=1e-9)
    np.testing.assert_allclose(table[:, 2], rep["median_min_all"], rtol=0, atol=1e-9)
    assert rep["config"]["B_grid"] == [5, 50] and rep["config"]["seed"] == 0

    code, rep, out = run_cli(tmp_path, "sim-joint", "--n", 500, "--reps", 20)
    sigma = np.array(rep["sigma"]) / 500
    _, rows = read_table(f"{out}.ellipses.csv")
    _, pts = read_table(f"{out}.points.csv")
    theta = np.array(pts[0][1:], dtype=float)
    inv = np.linalg.inv(sigma)
    for curve, level, x, y in rows:
        if curve != "ols_law":
            continue
        d = np.array([float(x), float(y)]) - theta
        assert d @ inv @ d == pytest.approx(stats.chi2.ppf(float(level), 2), abs=1e-9)
