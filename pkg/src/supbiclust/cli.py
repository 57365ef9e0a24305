"""Command-line front end: fit, predict, simulate, evaluate, reproduce.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 numerical
failure. Errors are also printed to stderr as one JSON object.
"""

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .exceptions import (ConfigError, InvalidDataError, NumericalError, SearchFailure,
                         SelectionError)
from .metrics import bicluster_scores, outcome_error
from .predict import predict
from .simulation import generate
from .workflow import SETTINGS, SUMMARY_COLUMNS, default_lambda_grid, reproduce, run_fit

__all__ = ["main", "build_parser"]

logger = logging.getLogger("supbiclust")


def _k_names(K):
    return [f"k{k + 1}" for k in range(K)]


def _out_dir(args, cfg, default):
    out = args.out or (cfg.get("out") if cfg else None) or default
    p = Path(out)
    if cfg and not p.is_absolute() and not args.out and "out" in cfg:
        p = Path(cfg["_base_dir"]) / p
    p.mkdir(parents=True, exist_ok=True)
    return p


def _load_cfg(args, required=True):
    if args.config is None:
        if required:
            raise ConfigError("--config is required for this command")
        return None
    cfg = io.read_config(args.config)
    io.check_keys(cfg)
    return cfg


# --- fit ---------------------------------------------------------------

def _reorder(result, d):
    """Row order by bicluster then weight; column order by bicluster then |loading|."""
    W = result.params.W
    labels = result.assignments
    rows = np.lexsort((-W[np.arange(W.shape[0]), labels - 1], labels))
    V = result.reported_V()[d]
    p = V.shape[0]
    col_label = np.zeros(p, dtype=int)
    for k, members in enumerate(result.variable_members[d]):
        col_label[members] = k + 1
    col_label_sort = np.where(col_label == 0, result.K + 1, col_label)
    mag = np.abs(V).max(axis=1)
    cols = np.lexsort((-mag, col_label_sort))
    table = [("row", i, int(r), int(labels[r])) for i, r in enumerate(rows)]
    table += [("col", i, int(c), int(col_label[c])) for i, c in enumerate(cols)]
    return table


def _write_reorder(path, table):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["axis", "position", "index", "bicluster"])
        w.writerows(table)


def write_fit_outputs(out, run, sample_ids, var_names, covariate_names=()):
    res = run.result
    K = res.K
    ks = _k_names(K)
    io.write_table(out / "assignments.csv", sample_ids, ["bicluster"] + [f"w_{k}" for k in ks],
                   np.column_stack([res.assignments, res.params.W]))
    reported = res.reported_V()
    for d, name in enumerate(res.view_names):
        ids, vals = [], []
        V = reported[d]
        for j, vname in enumerate(var_names[d]):
            ks_j = [k for k in range(K) if j in set(res.variable_members[d][k].tolist())]
            if not ks_j:
                ids.append(vname)
                vals.append((0, 0.0))
            for k in ks_j:
                ids.append(vname)
                vals.append((k + 1, V[j, k]))
        io.write_table(out / f"variables_{name}.csv", ids, ["bicluster", "loading"],
                       np.array(vals, dtype=float).reshape(-1, 2), "variable")
        _write_reorder(out / f"reorder_{name}.csv", _reorder(res, d))
    terms = ks + [str(c) for c in covariate_names]
    io.write_table(out / "beta.csv", terms, ["beta"], res.beta_hat, "term")
    res.extra["variable_names"] = [list(v) for v in var_names]
    io.save_model(out / "params", res, sample_ids, covariate_names)
    cfg = run.config
    io.write_json(out / "fit_report.json", {
        "k_selection": run.k_selection,
        "K": K,
        "lambdas": np.broadcast_to(np.asarray(cfg.lambdas, dtype=float),
                                   (len(res.params.V),)).tolist(),
        "stop_reason": res.stop_reason,
        "converged": res.converged,
        "iterations": res.iterations,
        "separation": res.separation,
        "loss_trace": [float(v) for v in res.loss_trace],
        "ic_table": run.ic_table,
        "k_table": run.k_table,
        "config": cfg.as_dict(),
    })


def cmd_fit(args):
    cfg = _load_cfg(args)
    views, ids = io.views_from_config(cfg)
    outcome = io.outcome_from_config(cfg, ids)
    fit_cfg = io.fit_config_from(cfg, args.seed)
    space = io.search_space_from(cfg, [v.name for v in views])
    run = run_fit(views, outcome, fit_cfg, space)
    out = _out_dir(args, cfg, "fit_out")
    cov_names = []
    if "covariates" in cfg:
        cov_names = io.read_table(io._path(cfg, "covariates")).col_names
    write_fit_outputs(out, run, ids, [v.variable_names for v in views], cov_names)
    logger.info("fit finished: K=%d, stop=%s, output in %s", run.result.K,
                run.result.stop_reason, out)
    return 0


# --- predict -----------------------------------------------------------

def cmd_predict(args):
    cfg = _load_cfg(args, required=False) or {"_base_dir": "."}
    model_dir = args.model or (io._path(cfg, "model") if "model" in cfg else None)
    if model_dir is None:
        raise ConfigError("a model directory is required (--model)")
    model = io.load_model(model_dir)
    if args.views:
        paths = [Path(p) for p in args.views]
    elif "views" in cfg:
        paths = [Path(p) if Path(p).is_absolute() else Path(cfg["_base_dir"]) / p
                 for p in io._list(cfg["views"])]
    else:
        raise ConfigError("new view files are required (--views)")
    views, ids = io.load_views(paths, [str(f) for f in model.families], list(model.view_names))
    for v, names in zip(views, model.extra["variable_names"]):
        if list(v.variable_names) != list(names):
            raise InvalidDataError(f"view {v.name!r}: variables differ from the fitted model")
    cov_path = args.covariates or (io._path(cfg, "covariates") if "covariates" in cfg else None)
    covariates = None
    if cov_path is not None:
        ct = io.read_table(cov_path)
        if ct.row_ids != ids:
            raise InvalidDataError(f"{cov_path}: sample ids differ from the views")
        covariates = ct.values
    if model.outcome_family is None:
        raise InvalidDataError("the saved model has no outcome")
    pred = predict(views, model, covariates=covariates)
    out = _out_dir(args, cfg if args.config else None, "predict_out")
    io.write_table(out / "predictions.csv", ids, ["bicluster", "psi_y_hat", "y_hat"],
                   np.column_stack([pred.assignments, pred.psi_y_hat, pred.y_hat]))
    truth = args.truth or (io._path(cfg, "truth") if "truth" in cfg else None)
    if truth is not None:
        tt = io.read_table(truth)
        if tt.row_ids != ids or tt.values.shape[1] != 1:
            raise InvalidDataError(f"{truth}: must hold one outcome column for the same samples")
        err = outcome_error(tt.values[:, 0], pred.y_hat, model.outcome_family)
        key = "error_rate" if model.outcome_family.name == "bernoulli" else "mse"
        io.write_json(out / "metrics.json", {key: err, "n": len(ids)})
    return 0


# --- simulate ----------------------------------------------------------

def cmd_simulate(args):
    cfg = _load_cfg(args, required=False) or {"_base_dir": "."}
    sim = io.sim_config_from(cfg, args.seed)
    bundle = generate(sim)
    out = _out_dir(args, cfg if args.config else None, "sim_out")
    var_names = [f"v{j + 1}" for j in range(sim.p)]
    names = [v.name for v in bundle.train_views]
    for split, views, outcome, truth, prefix in (
            ("train", bundle.train_views, bundle.train_outcome, bundle.truth, "s"),
            ("test", bundle.test_views, bundle.test_outcome, bundle.test_truth, "t")):
        ids = [f"{prefix}{i + 1}" for i in range(sim.n)]
        for v in views:
            io.write_table(out / f"{split}_{v.name}.csv", ids, var_names, v.data)
        io.write_table(out / f"{split}_outcome.csv", ids, ["y"], outcome.y)
        stem = "sample_truth.csv" if split == "train" else "test_sample_truth.csv"
        io.write_table(out / stem, ids, ["bicluster"], truth.labels)
    for d, name in enumerate(names):
        labels = np.zeros(sim.p, dtype=int)
        for k, members in enumerate(bundle.truth.variables[d]):
            labels[members] = k + 1
        io.write_table(out / f"variable_truth_{name}.csv", var_names, ["bicluster"], labels,
                       "variable")
    grid = ", ".join(format(v, ".6g") for v in default_lambda_grid(sim.p))
    (out / "fit.cfg").write_text(
        f"views = {', '.join(f'train_{n}.csv' for n in names)}\n"
        f"view_names = {', '.join(names)}\n"
        f"outcome = train_outcome.csv\n"
        f"outcome_family = {sim.outcome_family}\n"
        f"K = {sim.K}\n"
        f"lambda_grid = {grid}\n"
        f"seed = {sim.seed}\n")
    return 0


# --- evaluate ----------------------------------------------------------

def _read_membership(directory, sample_file, var_prefix):
    d = Path(directory)
    st = io.read_table(d / sample_file)
    labels = st.column("bicluster").astype(int)
    view_files = sorted(d.glob(f"{var_prefix}*.csv"))
    if not view_files:
        raise InvalidDataError(f"no {var_prefix}<view>.csv files in {d}")
    variables = {}
    for f in view_files:
        t = io.read_table(f)
        names = list(dict.fromkeys(t.row_ids))
        pos = {nm: j for j, nm in enumerate(names)}
        lab = t.column("bicluster").astype(int)
        variables[f.stem[len(var_prefix):]] = (len(names), [
            (pos[nm], int(k)) for nm, k in zip(t.row_ids, lab) if k > 0])
    return st.row_ids, labels, variables


def cmd_evaluate(args):
    if not args.estimated or not args.truth:
        raise ConfigError("--estimated and --truth directories are required")
    ids_e, lab_e, var_e = _read_membership(args.estimated, "assignments.csv", "variables_")
    ids_t, lab_t, var_t = _read_membership(args.truth, args.sample_truth, "variable_truth_")
    if ids_e != ids_t:
        raise InvalidDataError("estimated and true sample ids differ")
    if set(var_e) != set(var_t):
        raise InvalidDataError(f"views differ: {sorted(var_e)} vs {sorted(var_t)}")
    views = sorted(var_t)
    n = len(ids_t)
    K_e = max(int(lab_e.max()), max((k for v in views for _, k in var_e[v][1]), default=0))
    K_t = max(int(lab_t.max()), max((k for v in views for _, k in var_t[v][1]), default=0))
    p_list = [var_t[v][0] for v in views]
    if [var_e[v][0] for v in views] != p_list:
        raise InvalidDataError("estimated and true variable counts differ")

    def sets(labels, var, K):
        samples = [np.flatnonzero(labels == k + 1) for k in range(K)]
        variables = [[np.array(sorted(j for j, kk in var[v][1] if kk == k + 1), dtype=int)
                      for k in range(K)] for v in views]
        return samples, variables

    se, ve = sets(lab_e, var_e, K_e)
    st, vt = sets(lab_t, var_t, K_t)
    scores = bicluster_scores(se, ve, st, vt, n, p_list)
    out = _out_dir(args, None, "eval_out")
    io.write_json(out / "eval.json", scores)
    return 0


# --- reproduce ---------------------------------------------------------

def cmd_reproduce(args):
    cfg = _load_cfg(args, required=False) or {"_base_dir": "."}
    setting = args.setting or cfg.get("setting")
    if setting not in SETTINGS:
        raise ConfigError(f"unknown setting {setting!r}; choose from {', '.join(SETTINGS)}")
    reps = args.reps if args.reps is not None else int(cfg.get("reps", 10))
    if reps < 1:
        raise ConfigError("reps must be positive")
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    threads = args.threads if args.threads is not None else int(cfg.get("threads", 1))
    rows, summary, sd = reproduce(setting, reps, seed, max(1, threads))
    out = _out_dir(args, cfg if args.config else None, "reproduce_out")
    cols = list(SUMMARY_COLUMNS)
    io.write_table(out / "replications.csv", [str(i + 1) for i in range(reps)],
                   cols + ["lambda"], [[r[c] for c in cols + ["lambda"]] for r in rows],
                   "replication")
    io.write_table(out / "summary.csv", ["mean", "sd"], cols,
                   [[summary[c] for c in cols], [sd[c] for c in cols]], "statistic")
    io.write_json(out / "summary.json", {"setting": setting, "reps": reps, "seed": seed,
                                         "mean": summary, "sd": sd})
    return 0


# --- driver ------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="supbiclust",
                                     description="Supervised multi-view biclustering")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value configuration file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--threads", type=int, help="worker processes (reproduce)")
    common.add_argument("--quiet", action="store_true", help="only log warnings")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("fit", parents=[common], help="fit a model")
    p = sub.add_parser("predict", parents=[common], help="predict new samples")
    p.add_argument("--model", help="params directory written by fit")
    p.add_argument("--views", nargs="+", help="new view CSV files, in model order")
    p.add_argument("--covariates", help="covariate CSV for the new samples")
    p.add_argument("--truth", help="true outcome CSV, used only for scoring")
    sub.add_parser("simulate", parents=[common], help="generate synthetic data")
    p = sub.add_parser("evaluate", parents=[common], help="score biclusters against truth")
    p.add_argument("--estimated", help="fit output directory")
    p.add_argument("--truth", help="directory with sample_truth.csv and variable_truth_*.csv")
    p.add_argument("--sample-truth", default="sample_truth.csv",
                   help="sample truth file name inside the truth directory")
    p = sub.add_parser("reproduce", parents=[common], help="run a simulation study")
    p.add_argument("--setting", help=f"one of {', '.join(SETTINGS)}")
    p.add_argument("--reps", type=int, help="number of replications")
    return parser


_COMMANDS = {"fit": cmd_fit, "predict": cmd_predict, "simulate": cmd_simulate,
             "evaluate": cmd_evaluate, "reproduce": cmd_reproduce}


def _fail(code, exc):
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc),
                                 "exit_code": code}) + "\n")
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", force=True)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, SelectionError) as exc:
        return _fail(1, exc)
    except (InvalidDataError, FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        return _fail(2, exc)
    except (NumericalError, SearchFailure, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _fail(3, exc)


if __name__ == "__main__":
    sys.exit(main())
