import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bolasso.harness.cli import main
from bolasso.harness.cv import (CvSettings, MethodReport, fold_sizes, kfold_cv, parameter_grid,
                                partition, selection_error)
from bolasso.harness.experiments import ExperimentSpec, pattern_from_supports, run_experiment
from bolasso.harness.io import (AllRowsDropped, MissingTarget, ParseError, fmt, load_csv,
                                standardize, write_table)
from bolasso.lasso import LassoProblem, lars_lasso_path, path_at
from bolasso.population import generate_population, sample_dataset


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


# ---------------------------------------------------------------- load_csv

def test_load_csv_direct(tmp_path):
    d = load_csv(write(tmp_path / "a.csv", "a,b,y\n1,2,3\n4,5,6\n7,8,9\n"), "y")
    np.testing.assert_array_equal(d.problem.X, [[1, 2], [4, 5], [7, 8]])
    np.testing.assert_array_equal(d.problem.y, [3, 6, 9])
    assert d.feature_names == ["a", "b"] and d.target_name == "y" and d.n_dropped == 0


def test_load_csv_missing_row_dropped(tmp_path):
    d = load_csv(write(tmp_path / "a.csv", "a,b,y\n1,2,3\n4,,6\n7,8,9\n"), "y")
    assert d.n_dropped == 1
    np.testing.assert_array_equal(d.problem.y, [3, 9])
    d = load_csv(write(tmp_path / "b.csv", "a,b,y\n1,NA,3\n4,5,?\n7,8,9\n"), "y")
    assert d.n_dropped == 2


def test_load_csv_target_index(tmp_path):
    path = write(tmp_path / "a.csv", "a,b,y\n1,2,3\n4,5,6\n")
    d = load_csv(path, 0)
    np.testing.assert_array_equal(d.problem.y, [1, 4])
    assert d.feature_names == ["b", "y"]
    assert load_csv(path, "0").target_name == "a"
    assert load_csv(path, -1).target_name == "y"


def test_load_csv_errors(tmp_path):
    with pytest.raises(MissingTarget):
        load_csv(write(tmp_path / "a.csv", "a,b\n1,2\n"), "y")
    with pytest.raises(MissingTarget):
        load_csv(tmp_path / "a.csv", 5)
    with pytest.raises(ParseError) as err:
        load_csv(write(tmp_path / "c.csv", "a,color,y\n1,red,3\n2,blue,4\n"), "y")
    assert "color" in str(err.value)
    with pytest.raises(ParseError):
        load_csv(write(tmp_path / "d.csv", "a,b,y\n1,2\n"), "y")
    with pytest.raises(AllRowsDropped):
        load_csv(write(tmp_path / "e.csv", "a,y\n,1\n2,\n"), "y")
    with pytest.raises(ParseError):
        load_csv(write(tmp_path / "f.csv", ""), "y")


def test_load_csv_delimiter(tmp_path):
    d = load_csv(write(tmp_path / "a.csv", "a;y\n1.5;2\n3;4\n"), "y", delimiter=";")
    np.testing.assert_array_equal(d.problem.X, [[1.5], [3]])


# ---------------------------------------------------------------- standardize

def test_standardize_properties(rng):
    X = rng.standard_normal((30, 4)) * [1, 10, 0.1, 3] + [5, -2, 0, 1]
    P = LassoProblem(X, rng.standard_normal(30) + 4)
    S, st_ = standardize(P)
    assert S.centered and S.scaled
    np.testing.assert_allclose(S.X.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose((S.X ** 2).mean(axis=0), 1, atol=1e-12)
    assert abs(S.y.mean()) < 1e-12


def test_standardize_idempotent_on_standardized_input(rng):
    S, _ = standardize(LassoProblem(rng.standard_normal((25, 3)), rng.standard_normal(25)))
    S2, _ = standardize(S)
    np.testing.assert_allclose(S2.X, S.X, atol=1e-12)
    np.testing.assert_allclose(S2.y, S.y, atol=1e-12)


def test_standardize_drops_constant_column(rng):
    X = np.column_stack([rng.standard_normal(10), np.full(10, 3.0), rng.standard_normal(10)])
    S, st_ = standardize(LassoProblem(X, rng.standard_normal(10)))
    assert S.n_features == 2
    np.testing.assert_array_equal(st_.dropped_columns_, [1])
    np.testing.assert_array_equal(st_.kept_columns_, [0, 2])


def test_standardize_prediction_round_trip(rng):
    X = rng.standard_normal((40, 5)) * 4 + 2
    y = X @ [1, 0, -2, 0, 0.5] + 7 + rng.standard_normal(40)
    S, st_ = standardize(LassoProblem(X, y))
    w = path_at(lars_lasso_path(S), 0.05 * S.mu_max)
    fitted_std = S.X @ w
    raw = st_.predict(X, w)
    np.testing.assert_allclose(raw, fitted_std + y.mean(), atol=1e-10)


def test_standardize_needs_two_rows():
    with pytest.raises(ValueError):
        standardize(LassoProblem([[1.0]], [1.0]))


# ---------------------------------------------------------------- folds

def test_fold_sizes_example():
    assert fold_sizes(23, 10) == [3, 3, 3, 2, 2, 2, 2, 2, 2, 2]


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 200), data=st.data(), seed=st.integers(0, 2**32 - 1))
def test_partition_covers_rows_once(n, data, seed):
    folds = data.draw(st.integers(2, n))
    parts = partition(n, folds, np.random.default_rng(seed))
    sizes = [len(p) for p in parts]
    assert max(sizes) - min(sizes) <= 1
    np.testing.assert_array_equal(np.sort(np.concatenate(parts)), np.arange(n))


# ---------------------------------------------------------------- cv

def test_loo_null_predictor_oracle(rng):
    n = 15
    y = rng.standard_normal(n)
    y = y - y.mean()
    P = LassoProblem(rng.standard_normal((n, 2)), y)
    rep = kfold_cv(P, ("null",), CvSettings(folds=n, replications=1))
    # leave-one-out mean of the other n-1 centered values is -y_i / (n - 1)
    oracle = np.mean([(y[i] - (y.sum() - y[i]) / (n - 1)) ** 2 for i in range(n)])
    assert rep.methods["null"].mean_x100 == pytest.approx(100 * oracle, rel=1e-12)
    assert oracle == pytest.approx((n / (n - 1)) ** 2 * np.mean(y ** 2))


def test_kfold_cells_and_best_rule():
    model = generate_population(6, 2, np.random.default_rng(0))
    P = sample_dataset(model, 40, np.random.default_rng(1))
    rep = kfold_cv(P, ("ridge", "lasso", "bolasso", "bolasso-s", "bagging"),
                   CvSettings(folds=4, replications=3, m=4, n_grid=6))
    assert rep.n_cells == 12
    for name, r in rep.methods.items():
        assert r.cell_mse.shape == (len(r.grid), 12)
        pooled = r.cell_mse.mean(axis=1)
        assert r.best_index == int(np.argmin(pooled))
        assert r.mean_x100 == pytest.approx(100 * pooled.min())
        assert r.std_x100 >= 0
    np.testing.assert_array_equal(rep.methods["bolasso"].grid, rep.methods["bolasso-s"].grid)


def test_kfold_ten_by_ten_count():
    P = sample_dataset(generate_population(4, 2, np.random.default_rng(0)), 30,
                       np.random.default_rng(1))
    rep = kfold_cv(P, ("null", "ridge"), CvSettings(n_grid=3))
    assert rep.methods["ridge"].cell_mse.shape[1] == 100


def test_kfold_deterministic_and_parallel():
    P = sample_dataset(generate_population(5, 2, np.random.default_rng(0)), 30,
                       np.random.default_rng(1))
    s = CvSettings(folds=3, replications=2, m=4, n_grid=5)
    a = kfold_cv(P, ("lasso", "bolasso"), s)
    b = kfold_cv(P, ("lasso", "bolasso"), CvSettings(folds=3, replications=2, m=4, n_grid=5,
                                                     n_jobs=2))
    for k in a.methods:
        np.testing.assert_array_equal(a.methods[k].cell_mse, b.methods[k].cell_mse)


def test_kfold_errors():
    P = LassoProblem(np.arange(10.0)[:, None], np.arange(10.0))
    with pytest.raises(ValueError):
        kfold_cv(P, ("nope",))
    with pytest.raises(ValueError):
        kfold_cv(P, ("null",), CvSettings(folds=1))
    with pytest.raises(ValueError):
        kfold_cv(P, ("null",), CvSettings(folds=11))


def test_parameter_grids(rng):
    S, _ = standardize(LassoProblem(rng.standard_normal((20, 3)), rng.standard_normal(20)))
    g = parameter_grid("lasso", S)
    assert g.size == 32 and g[0] == pytest.approx(S.mu_max) and np.all(np.diff(g) < 0)
    r = parameter_grid("ridge", S)
    assert r.size == 32 and r[0] == pytest.approx(100.0)
    np.testing.assert_array_equal(parameter_grid("null", S), [0.0])


def test_method_report_std_single_cell():
    r = MethodReport("x", np.array([1.0]), np.array([[0.5]]))
    assert r.std_x100 == 0.0


# ---------------------------------------------------------------- selection error

def test_selection_error_examples():
    assert selection_error((1, 2), (1, 2), 4) == 0
    assert selection_error({1, 2}, {2, 3}, 4) == 2
    assert selection_error(range(5), (), 5) == 5


subsets = st.sets(st.integers(0, 7))


@given(subsets, subsets, subsets)
def test_selection_error_is_metric(a, b, c):
    d = lambda u, v: selection_error(u, v, 8)  # noqa: E731
    assert d(a, a) == 0
    assert d(a, b) == d(b, a)
    assert (d(a, b) == 0) == (a == b)
    assert d(a, c) <= d(a, b) + d(b, c)
    assert d(a, b) == len(a ^ b)


def test_pattern_fallback_to_closest_size():
    assert pattern_from_supports([(), (1,), (1, 2, 3)], 2) == (1,)
    assert pattern_from_supports([(), (1, 2), (1, 2)], 2) == (1, 2)


# ---------------------------------------------------------------- output

def test_fmt_round_trip():
    for v in (0.1, 1 / 3, 1e-300, -2.5e17):
        assert float(fmt(v)) == v
    assert fmt(np.int64(3)) == "3" and fmt(True) == "1" and fmt((1, 4)) == "1 4"


def test_write_table_json(tmp_path):
    p = write_table(tmp_path / "t.csv", ["a", "b"], [[1, 0.5], [2, (1, 2)]], "json")
    assert p.suffix == ".json"
    assert json.loads(p.read_text()) == [{"a": 1, "b": 0.5}, {"a": 2, "b": [1, 2]}]


# ---------------------------------------------------------------- experiments

def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_sign_frequency_spec_shape(tmp_path):
    spec = ExperimentSpec("sign-frequency", p=16, r=8, n=200, reps=4, m=4, mu_points=6,
                          out=str(tmp_path), plot=True)
    out = run_experiment(spec)
    rows = read_csv(out["frequencies"])
    assert rows[0][5:] == [f"var{j}" for j in range(16)]
    assert len(rows) == 1 + 2 * 2 * 6
    manifest = json.loads(out["manifest"].read_text())
    assert manifest["spec"]["kind"] == "sign-frequency" and manifest["seed"] == 0
    assert ExperimentSpec.from_dict(manifest["spec"]) == spec
    assert all(out[k].suffix == ".svg" for k in out if k.startswith("plot"))


def test_method_comparison_spec(tmp_path):
    spec = ExperimentSpec("method-comparison", p=12, r=3, n_grid=(32, 64), reps=2, m=4,
                          mu_points=16, models=("consistent",), out=str(tmp_path))
    rows = read_csv(run_experiment(spec)["selection_error"])
    assert rows[0][:4] == ["model", "kappa", "n", "method"]
    combos = {(r[2], r[3]) for r in rows[1:]}
    assert len(combos) == 2 * 6
    assert all(float(r[4]) >= 0 for r in rows[1:])


def test_experiment_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec("nope")
    with pytest.raises(ValueError):
        ExperimentSpec("sign-frequency", reps=0)
    with pytest.raises(ValueError):
        ExperimentSpec("sign-frequency", methods=("greedy",))
    with pytest.raises(ValueError):
        ExperimentSpec("cv-benchmark", folds=1)


def test_experiment_deterministic(tmp_path):
    kw = dict(p=6, r=2, n=60, reps=3, m=4, mu_points=5, m_values=(1, 2, 4))
    a = run_experiment(ExperimentSpec("correct-pattern", out=str(tmp_path / "a"), **kw))
    b = run_experiment(ExperimentSpec("correct-pattern", out=str(tmp_path / "b"), n_jobs=2,
                                      **kw))
    assert a["pattern_probability"].read_bytes() == b["pattern_probability"].read_bytes()


# ---------------------------------------------------------------- cli

def test_cli_synth_kappa_path_bolasso(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["synth", "--p", "6", "--r", "2", "--n", "40", "--kappa", "consistent",
                 "--out", str(out)]) == 0
    assert main(["kappa", str(out / "model.json"), "--format", "json"]) == 0
    printed = capsys.readouterr().out.strip().splitlines()[-1]
    assert json.loads(printed)["kappa"] <= 1
    assert main(["lasso-path", str(out / "data.csv"), "--out", str(out)]) == 0
    rows = read_csv(out / "path.csv")
    assert rows[0][:3] == ["knot", "mu", "n_active"] and float(rows[-1][1]) == 0.0
    assert main(["bolasso", str(out / "data.csv"), "--m", "4", "--mu-grid", "5,0.01",
                 "--out", str(out)]) == 0
    assert len(read_csv(out / "bolasso_supports.csv")) == 6


def test_cli_exit_codes(tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        main(["freq", "--bogus"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["bolasso", "x.csv", "--mu-grid", "abc"])
    assert e.value.code == 2
    assert main(["kappa", str(tmp_path / "missing.json")]) == 3
    bad = write(tmp_path / "bad.csv", "a,b,y\n1,red,2\n")
    assert main(["lasso-path", str(bad), "--out", str(tmp_path)]) == 3
    dup = write(tmp_path / "dup.csv", "a,b,y\n1,1,1\n2,2,3\n3,3,2\n4,4,5\n")
    assert main(["lasso-path", str(dup), "--out", str(tmp_path)]) == 4
    assert main(["freq", "--reps", "0", "--out", str(tmp_path)]) == 2


def test_cli_byte_identical_reruns(tmp_path):
    args = ["--p", "6", "--r", "2", "--n", "50", "--reps", "2", "--m", "4",
            "--mu-grid", "5,0.001", "--seed", "3"]
    for run in ("a", "b"):
        assert main(["freq", *args, "--out", str(tmp_path / run), "--plot"]) == 0
    for name in ("frequencies.csv", "plot_consistent_lasso.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
