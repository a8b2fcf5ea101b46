"""Command-line entry point.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ..bootstrap import BolassoConfig, log_grid, run_bolasso
from ..lasso import DegenerateDesign, NotConverged, lars_lasso_path
from ..numerics import NotPositiveDefinite
from ..population import (EmptyComplement, NotFound, PopulationModel, SingularGram,
                          consistency_kappa, find_model_with_kappa, generate_population,
                          sample_dataset)
from .experiments import ExperimentSpec, run_experiment
from .io import DataError, load_csv, standardize, write_problem_csv, write_table

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4


def _ints(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def _words(text):
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _grid_spec(text):
    try:
        count, ratio = text.split(",")
        count, ratio = int(count), float(ratio)
    except ValueError:
        raise argparse.ArgumentTypeError("expected <count>,<min-ratio>, e.g. 64,1e-3") from None
    if count < 1 or not 0 < ratio < 1:
        raise argparse.ArgumentTypeError("count must be >= 1 and min-ratio in (0, 1)")
    return count, ratio


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--m", type=int, default=128, help="bootstrap replicates")
    p.add_argument("--mu-grid", type=_grid_spec, default=None, metavar="COUNT,MIN_RATIO")
    p.add_argument("--soft", type=float, default=0.9, help="Bolasso-S fraction")
    p.add_argument("--out", default="results")
    p.add_argument("--format", choices=("csv", "json"), default="csv", dest="fmt")
    p.add_argument("--plot", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    return p


def _data_args(p):
    p.add_argument("data", help="CSV file with a header row")
    p.add_argument("--target", default="-1", help="target column name or index (default: last)")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--no-standardize", action="store_true")


def _model_args(p, p_default, r_default, n_default):
    p.add_argument("--p", type=int, default=p_default)
    p.add_argument("--r", type=int, default=r_default)
    p.add_argument("--n", type=int, default=n_default)
    p.add_argument("--models", type=_words, default=("consistent", "inconsistent"))
    p.add_argument("--model", dest="model_file", default=None, help="model JSON from `synth`")


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="bolasso", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a population model and dataset")
    p.add_argument("--p", type=int, default=16)
    p.add_argument("--r", type=int, default=8)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--kappa", choices=("any", "consistent", "inconsistent"), default="any")

    p = sub.add_parser("kappa", parents=[common], help="print the consistency quantity of a model")
    p.add_argument("model", help="model JSON written by `synth`")

    p = sub.add_parser("lasso-path", parents=[common], help="emit the exact Lasso path knots")
    _data_args(p)

    p = sub.add_parser("bolasso", parents=[common], help="run Bolasso on a CSV dataset")
    _data_args(p)

    p = sub.add_parser("freq", parents=[common], help="selection-frequency experiment")
    _model_args(p, 16, 8, 1000)
    p.add_argument("--methods", type=_words, default=("lasso", "bolasso"))

    p = sub.add_parser("pattern-prob", parents=[common], help="correct-support probability")
    _model_args(p, 16, 8, 1000)
    p.add_argument("--m-values", type=_ints, default=(2, 4, 8, 16, 32, 64, 128, 256))

    p = sub.add_parser("compare", parents=[common], help="compare variable selectors")
    _model_args(p, 64, 8, 0)
    p.add_argument("--n-grid", type=_ints, default=(64, 128, 256, 512, 1024))
    p.add_argument("--methods", type=_words, default=())

    p = sub.add_parser("cv", parents=[common], help="repeated k-fold CV benchmark")
    p.add_argument("data", nargs="?", default=None,
                   help="CSV file; omit to use synthetic sparse models")
    p.add_argument("--target", default="-1")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--replications", type=int, default=10)
    p.add_argument("--methods", type=_words, default=())
    p.add_argument("--synthetic", type=int, default=4, help="number of synthetic models")
    p.add_argument("--p", type=int, default=32)
    p.add_argument("--r", type=int, default=8)
    p.add_argument("--n", type=int, default=64)
    return parser


def _load(args):
    loaded = load_csv(args.data, args.target, args.delimiter)
    problem = loaded.problem
    names = loaded.feature_names
    if not args.no_standardize:
        problem, st = standardize(problem)
        names = [names[j] for j in st.kept_columns_]
    return problem, names, loaded


def _cmd_synth(args, out):
    rng = np.random.default_rng(args.seed)
    if args.kappa == "any":
        model = generate_population(args.p, args.r, rng)
    else:
        model = find_model_with_kappa(args.p, args.r, args.kappa == "consistent", rng)
    data = sample_dataset(model, args.n, rng)
    (out / "model.json").write_text(json.dumps(model.to_dict(), indent=1) + "\n",
                                    encoding="utf-8")
    write_problem_csv(out / "data.csv", data)
    print(out / "model.json")
    print(out / "data.csv")


def _cmd_kappa(args, out):
    model = PopulationModel.from_dict(json.loads(Path(args.model).read_text(encoding="utf-8")))
    try:
        kappa = consistency_kappa(model)
    except EmptyComplement:
        kappa = 0.0
    if args.fmt == "json":
        print(json.dumps({"kappa": kappa, "consistent": kappa <= 1}))
    else:
        print(repr(kappa))


def _cmd_path(args, out):
    problem, names, _ = _load(args)
    path = lars_lasso_path(problem)
    rows = [[k, float(mu), len(knot.active), *knot.weights]
            for k, (mu, knot) in enumerate(zip(path.mus, path.knots))]
    print(write_table(out / "path.csv", ["knot", "mu", "n_active"] + names, rows, args.fmt))


def _cmd_bolasso(args, out):
    problem, names, _ = _load(args)
    count, ratio = args.mu_grid or (64, 1e-3)
    grid = log_grid(problem.mu_max, count, ratio)
    res = run_bolasso(problem, BolassoConfig(m=args.m, mu_grid=tuple(grid), seed=args.seed,
                                             soft_fraction=args.soft, n_jobs=args.jobs))
    fmt = args.fmt
    freq = [[i, s.mu, *s.frequencies] for i, s in enumerate(res.steps)]
    sup = [[i, s.mu, len(s.hard_support), s.hard_support, len(s.soft_support), s.soft_support]
           for i, s in enumerate(res.steps)]
    refit = ([[i, s.mu, "hard", *s.refit_weights] for i, s in enumerate(res.steps)]
             + [[i, s.mu, "soft", *s.soft_refit_weights] for i, s in enumerate(res.steps)])
    print(write_table(out / "bolasso_frequencies.csv", ["mu_index", "mu"] + names, freq, fmt))
    print(write_table(out / "bolasso_supports.csv",
                      ["mu_index", "mu", "hard_size", "hard_support", "soft_size",
                       "soft_support"], sup, fmt))
    print(write_table(out / "bolasso_refit.csv", ["mu_index", "mu", "kind"] + names, refit, fmt))


def _experiment(args, kind, **extra):
    kw = dict(kind=kind, seed=args.seed, m=args.m, soft=args.soft, out=str(args.out),
              fmt=args.fmt, plot=args.plot, n_jobs=args.jobs, **extra)
    if args.reps is not None:
        kw["reps"] = args.reps
    if args.mu_grid is not None:
        kw["mu_points"], kw["mu_min_ratio"] = args.mu_grid
    for name in ("p", "r", "n", "models", "model_file", "methods"):
        if name in vars(args) and name not in kw:
            kw[name] = getattr(args, name)
    spec = ExperimentSpec(**kw)
    for name, path in run_experiment(spec).items():
        print(path)


def _cmd_freq(args, out):
    _experiment(args, "sign-frequency")


def _cmd_pattern(args, out):
    _experiment(args, "correct-pattern", m_values=args.m_values)


def _cmd_compare(args, out):
    if args.reps is None:
        args.reps = 32
    _experiment(args, "method-comparison", n_grid=args.n_grid)


def _cmd_cv(args, out):
    _experiment(args, "cv-benchmark", data_path=args.data, target=args.target,
                delimiter=args.delimiter, folds=args.folds, replications=args.replications,
                n_synthetic=args.synthetic)


COMMANDS = {
    "synth": _cmd_synth,
    "kappa": _cmd_kappa,
    "lasso-path": _cmd_path,
    "bolasso": _cmd_bolasso,
    "freq": _cmd_freq,
    "pattern-prob": _cmd_pattern,
    "compare": _cmd_compare,
    "cv": _cmd_cv,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Path(args.out)
    try:
        if args.command not in ("kappa",):
            out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args, out)
    except (DataError, FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        print(f"bolasso: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DegenerateDesign, NotConverged, NotPositiveDefinite, SingularGram,
            NotFound, np.linalg.LinAlgError) as exc:
        print(f"bolasso: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"bolasso: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
