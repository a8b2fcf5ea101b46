"""Experiment pipelines: selection frequencies, correct-pattern
probabilities, selector comparison and the cross-validation benchmark.

Every pipeline is a pure function of its :class:`ExperimentSpec`. Outputs
are written next to a ``manifest.json`` holding those settings, so a run
can be repeated bit for bit.
"""

import hashlib
import json
import platform
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from .. import __version__
from ..baselines import (adaptive_lasso_path, bagged_ls_threshold, forward_greedy,
                         threshold_ls)
from ..bootstrap import (BolassoConfig, NoPatternOfSizeR, log_grid, most_stable_pattern,
                         replicate_rng, run_bolasso)
from ..lasso import lars_lasso_path, path_supports
from ..population import (PopulationModel, bolasso_m_sweep, consistency_kappa,
                          correct_pattern_probability, find_model_with_kappa,
                          generate_population, sample_dataset, sign_frequency_experiment)
from .cv import DEFAULT_METHODS, CvSettings, kfold_cv, selection_error
from .io import load_csv, write_table

KINDS = ("sign-frequency", "correct-pattern", "method-comparison", "cv-benchmark")
COMPARE_METHODS = ("lasso", "bolasso", "greedy", "threshold-ls", "adaptive-lasso", "bagged-ls")
FREQ_METHODS = ("lasso", "bolasso")


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to run (and re-run) one experiment."""

    kind: str
    p: int = 16
    r: int = 8
    n: int = 1000
    n_grid: tuple = (64, 128, 256, 512, 1024)
    reps: int = 256
    models: tuple = ("consistent", "inconsistent")
    model_file: str = None
    methods: tuple = ()
    m: int = 128
    m_values: tuple = (2, 4, 8, 16, 32, 64, 128, 256)
    mu_points: int = 64
    mu_min_ratio: float = 1e-4
    soft: float = 0.9
    seed: int = 0
    data_path: str = None
    target: str = "-1"
    delimiter: str = ","
    folds: int = 10
    replications: int = 10
    n_synthetic: int = 4
    out: str = "results"
    fmt: str = "csv"
    plot: bool = False
    n_jobs: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; choose from {KINDS}")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.fmt not in ("csv", "json"):
            raise ValueError("fmt must be 'csv' or 'json'")
        allowed = {"sign-frequency": FREQ_METHODS, "correct-pattern": FREQ_METHODS,
                   "method-comparison": COMPARE_METHODS,
                   "cv-benchmark": DEFAULT_METHODS + ("null",)}[self.kind]
        bad = [m for m in self.methods if m not in allowed]
        if bad:
            raise ValueError(f"methods {bad} not available for {self.kind}; choose from {allowed}")
        for side in self.models:
            if side not in ("consistent", "inconsistent"):
                raise ValueError(f"model side must be consistent/inconsistent, got {side!r}")
        if self.kind == "cv-benchmark" and self.folds < 2:
            raise ValueError("cv needs at least 2 folds")

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        kw = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items() if k in names}
        return cls(**kw)


def _models(spec):
    """``[(label, model)]`` from a model file or seeded generator draws."""
    if spec.model_file:
        d = json.loads(Path(spec.model_file).read_text(encoding="utf-8"))
        return [("file", PopulationModel.from_dict(d))]
    out = []
    for i, side in enumerate(spec.models):
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 1000 + i]))
        out.append((side, find_model_with_kappa(spec.p, spec.r, side == "consistent", rng)))
    return out


def _kappa(model):
    try:
        return consistency_kappa(model)
    except ValueError:
        return 0.0


def _grid(spec, model):
    return log_grid(model.mu_max, spec.mu_points, spec.mu_min_ratio)


def _sign_frequency(spec):
    methods = spec.methods or FREQ_METHODS
    rows = []
    tables = {}
    for label, model in _models(spec):
        grid = _grid(spec, model)
        for method in methods:
            how = "lasso" if method == "lasso" else BolassoConfig(m=spec.m)
            table = sign_frequency_experiment(model, spec.n, grid, spec.reps, spec.seed,
                                              how, n_jobs=spec.n_jobs)
            tables[(label, method)] = table
            for i, mu in enumerate(grid):
                rows.append([label, _kappa(model), method, i, mu, *table.frequencies[i]])
    header = ["model", "kappa", "method", "mu_index", "mu"] + [f"var{j}" for j in range(spec.p)]
    return {"frequencies": (header, rows)}, {"tables": tables}


def _correct_pattern(spec):
    rows = []
    curves = {}
    for label, model in _models(spec):
        grid = _grid(spec, model)
        lasso = correct_pattern_probability(
            sign_frequency_experiment(model, spec.n, grid, spec.reps, spec.seed,
                                      n_jobs=spec.n_jobs), model)
        curves[(label, "lasso", 0)] = (grid, lasso)
        for i, mu in enumerate(grid):
            rows.append([label, _kappa(model), "lasso", 0, i, mu, lasso[i]])
        sweep = bolasso_m_sweep(model, spec.n, grid, spec.reps, spec.seed, spec.m_values,
                                n_jobs=spec.n_jobs)
        for m, prob in sweep.items():
            curves[(label, "bolasso", m)] = (grid, prob)
            for i, mu in enumerate(grid):
                rows.append([label, _kappa(model), "bolasso", m, i, mu, prob[i]])
    header = ["model", "kappa", "method", "m", "mu_index", "mu", "probability"]
    return {"pattern_probability": (header, rows)}, {"curves": curves}


def pattern_from_supports(supports, r):
    """Most stable size-``r`` support; if none has size ``r``, the support
    whose size is closest to ``r`` (first such, i.e. largest penalty)."""
    try:
        return most_stable_pattern(supports, r)
    except NoPatternOfSizeR:
        gaps = [abs(len(s) - r) for s in supports]
        return tuple(supports[int(np.argmin(gaps))])


def select_r(problem, method, r, m=128, seed=0, mu_points=64, mu_min_ratio=1e-4):
    """Pick exactly (or as close as possible to) ``r`` variables with ``method``."""
    if method == "greedy":
        return forward_greedy(problem, r).support
    if method == "threshold-ls":
        return threshold_ls(problem, r).support
    if method == "bagged-ls":
        return bagged_ls_threshold(problem, m, r, np.random.default_rng(seed)).support
    if method == "adaptive-lasso":
        path, _, keep = adaptive_lasso_path(problem)
        grid = log_grid(path.mus[0], mu_points, mu_min_ratio)
        supports = [tuple(int(keep[j]) for j in s) for s in path_supports(path, grid)]
        return pattern_from_supports(supports, r)
    grid = log_grid(problem.mu_max, mu_points, mu_min_ratio)
    if method == "lasso":
        return pattern_from_supports(path_supports(lars_lasso_path(problem), grid), r)
    if method == "bolasso":
        res = run_bolasso(problem, BolassoConfig(m=m, mu_grid=tuple(grid), seed=seed))
        return pattern_from_supports(res.hard_supports, r)
    raise ValueError(f"unknown method {method!r}")


def _comparison_cell(spec, model, n, rep, methods):
    rng = replicate_rng(spec.seed, n, rep)
    data = sample_dataset(model, n, rng)
    sub = int(rng.integers(2 ** 63))
    truth = model.J_true
    return [selection_error(select_r(data, meth, spec.r, spec.m, sub, spec.mu_points,
                                     spec.mu_min_ratio), truth, model.p)
            for meth in methods]


def _method_comparison(spec):
    methods = spec.methods or COMPARE_METHODS
    rows = []
    raw = []
    curves = {}
    for label, model in _models(spec):
        for n in spec.n_grid:
            jobs = [(spec, model, n, rep, methods) for rep in range(spec.reps)]
            if spec.n_jobs == 1:
                errs = [_comparison_cell(*j) for j in jobs]
            else:
                errs = Parallel(n_jobs=spec.n_jobs)(delayed(_comparison_cell)(*j) for j in jobs)
            errs = np.array(errs, dtype=float)
            for rep, e in enumerate(errs):
                for meth, v in zip(methods, e):
                    raw.append([label, n, rep, meth, int(v)])
            for k, meth in enumerate(methods):
                col = errs[:, k]
                sd = float(col.std(ddof=1)) if col.size > 1 else 0.0
                rows.append([label, _kappa(model), n, meth, float(col.mean()), sd, spec.reps])
                curves.setdefault((label, meth), []).append((n, float(col.mean())))
    header = ["model", "kappa", "n", "method", "mean_error", "std_error", "reps"]
    return ({"selection_error": (header, rows),
             "selection_error_raw": (["model", "n", "rep", "method", "error"], raw)},
            {"curves": curves})


def _cv_benchmark(spec):
    methods = spec.methods or DEFAULT_METHODS
    settings = CvSettings(folds=spec.folds, replications=spec.replications, seed=spec.seed,
                          m=spec.m, soft_fraction=spec.soft, n_jobs=spec.n_jobs)
    datasets = []
    if spec.data_path:
        loaded = load_csv(spec.data_path, spec.target, spec.delimiter)
        datasets.append((Path(spec.data_path).stem, "", loaded.problem, loaded.n_dropped))
    else:
        for i in range(spec.n_synthetic):
            rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 2000 + i]))
            model = generate_population(spec.p, spec.r, rng)
            datasets.append((f"synthetic{i}", _kappa(model), sample_dataset(model, spec.n, rng), 0))
    rows = []
    for name, kappa, problem, dropped in datasets:
        report = kfold_cv(problem, methods, settings)
        for method, mean, std, best, cells in report.rows():
            rows.append([name, kappa, method, mean, std, best, cells, problem.n_samples, dropped])
    header = ["dataset", "kappa", "method", "mse_x100_mean", "mse_x100_std", "best_param",
              "n_cells", "n_rows", "n_dropped"]
    return {"cv_report": (header, rows)}, {}


_PIPELINES = {
    "sign-frequency": _sign_frequency,
    "correct-pattern": _correct_pattern,
    "method-comparison": _method_comparison,
    "cv-benchmark": _cv_benchmark,
}


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_experiment(spec):
    """Run ``spec`` and write its tables, optional SVG plots and a manifest.

    Returns
    -------
    dict
        Output name -> written path, including ``"manifest"``.
    """
    start = time.perf_counter()
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    tables, extras = _PIPELINES[spec.kind](spec)
    written = {}
    for name, (header, rows) in tables.items():
        written[name] = write_table(out / f"{name}.csv", header, rows, spec.fmt)
    if spec.plot:
        from . import plots
        written.update(plots.plot_experiment(spec, tables, extras, out))
    manifest = {
        "spec": asdict(spec),
        "seed": spec.seed,
        "software": {"bolasso": __version__, "python": platform.python_version(),
                     "numpy": np.__version__},
        "wall_time_s": time.perf_counter() - start,
        "outputs": {name: {"path": Path(p).name, "sha256": _sha256(p)}
                    for name, p in written.items()},
    }
    mpath = out / "manifest.json"
    mpath.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    written["manifest"] = mpath
    return written
