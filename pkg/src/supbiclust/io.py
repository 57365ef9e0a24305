"""CSV matrices, flat key=value configuration files and model bundles.

Matrix files have a header row (first cell is the row-label column name,
then one name per column) and one row per sample or variable whose first
cell is its identifier. Numbers are written with 17 significant digits so
that a write/read round trip is exact.
"""

import csv
import json
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .exceptions import ConfigError, InvalidDataError, ShapeError
from .expfam import get_family
from .fit import FitConfig
from .model import (BiclusterResult, ModelParams, OutcomeSpec, ViewMatrix, hard_assign,
                    variable_membership)
from .selection import SearchSpace
from .simulation import SimConfig

__all__ = ["Table", "read_table", "write_table", "fmt", "read_config", "parse_config",
           "fit_config_from", "search_space_from", "sim_config_from", "load_views",
           "load_outcome", "views_from_config", "outcome_from_config", "save_model",
           "load_model", "write_json", "check_keys"]


def fmt(x):
    """Lossless decimal text for a float (integers stay integral)."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if x == 0.0:
        return "0"
    return format(x, ".17g")


@dataclass
class Table:
    """A labelled numeric matrix as stored on disk."""

    row_ids: list
    col_names: list
    values: np.ndarray
    index_name: str = "id"

    def column(self, name):
        try:
            return self.values[:, self.col_names.index(name)]
        except ValueError:
            raise ShapeError(f"column {name!r} not found") from None


def write_table(path, row_ids, col_names, values, index_name="sample_id"):
    values = np.asarray(values)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape != (len(row_ids), len(col_names)):
        raise ShapeError(f"table {path}: values {values.shape} do not match labels "
                         f"{(len(row_ids), len(col_names))}")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([index_name, *col_names])
        for rid, row in zip(row_ids, values):
            writer.writerow([rid, *(fmt(v) for v in row)])


def read_table(path):
    """Read a matrix file; raises InvalidDataError on missing or malformed files."""
    path = Path(path)
    if not path.is_file():
        raise InvalidDataError(f"file not found: {path}")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise InvalidDataError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    width = len(header)
    if width < 2:
        raise InvalidDataError(f"{path}: need an id column and at least one value column")
    ids, vals = [], []
    for i, r in enumerate(body, start=2):
        if len(r) != width:
            raise InvalidDataError(f"{path}: line {i} has {len(r)} fields, expected {width}")
        ids.append(r[0])
        try:
            vals.append([float(v) for v in r[1:]])
        except ValueError as exc:
            raise InvalidDataError(f"{path}: line {i}: {exc}") from None
    values = np.array(vals, dtype=float).reshape(len(ids), width - 1)
    return Table(ids, header[1:], values, header[0])


def write_json(path, obj):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    return str(o)


# --- configuration -------------------------------------------------------

def parse_config(text, base_dir="."):
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Returns a dict of raw strings plus ``_base_dir`` for resolving paths.
    """
    out = {"_base_dir": str(base_dir)}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"config line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"config line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def read_config(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(), path.parent)


def _list(value):
    return [v.strip() for v in value.split(",") if v.strip()]


def _bool(value, key):
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def _num(value, key, kind=float):
    try:
        x = float(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None
    if kind is int:
        if x != int(x):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return int(x)
    return x


def _path(cfg, key):
    value = cfg[key]
    p = Path(value)
    return p if p.is_absolute() else Path(cfg["_base_dir"]) / p


def _convert(cfg, key, kind):
    value = cfg[key]
    if kind == "bool":
        return _bool(value, key)
    if kind == "int":
        return _num(value, key, int)
    if kind == "float":
        return _num(value, key)
    if kind == "floats":
        return tuple(_num(v, key) for v in _list(value))
    if kind == "opt_float":
        return None if value.lower() in ("", "none") else _num(value, key)
    if kind == "opt_floats":
        return None if value.lower() in ("", "none") else tuple(_num(v, key) for v in _list(value))
    return value


_FIT_KEYS = {"alpha": "float", "tol": "float", "max_iter": "int", "rho": "float",
             "lambdas": "floats", "non_overlapping": "bool", "seed": "int",
             "outcome_weight_refit": "bool", "predict_alpha": "opt_float",
             "block_scaling": "str"}
_SIM_KEYS = {"n": "int", "p": "int", "D": "int", "K": "int", "S": "floats",
             "important_frac": "float", "sigma2_x": "float", "outcome_family": "str",
             "beta_true": "opt_floats", "seed": "int", "min_group_size": "int",
             "sigma2_y": "float"}
_SEARCH_KEYS = {"shared_lambda": "bool", "sigma_ebic": "float", "use_ebic": "bool",
                "loss_for_ic": "str", "ic_form": "str", "max_draws": "int"}

KNOWN_KEYS = ({"views", "view_names", "view_families", "outcome", "outcome_family",
               "covariates", "K", "k_range", "lambda_grid", "out", "model", "truth",
               "setting", "reps", "threads"}
              | set(_FIT_KEYS) | set(_SIM_KEYS) | set(_SEARCH_KEYS))


def check_keys(cfg):
    unknown = sorted(k for k in cfg if not k.startswith("_") and k not in KNOWN_KEYS
                     and not k.startswith("lambda_grid."))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")


def fit_config_from(cfg, seed=None):
    """FitConfig from the parsed config (``K = auto`` maps to K=1 here)."""
    kw = {k: _convert(cfg, k, t) for k, t in _FIT_KEYS.items() if k in cfg}
    if "lambdas" in kw and len(kw["lambdas"]) == 1:
        kw["lambdas"] = kw["lambdas"][0]
    k = cfg.get("K", "3")
    if k.lower() != "auto":
        kw["K"] = _num(k, "K", int)
    if seed is not None:
        kw["seed"] = int(seed)
    try:
        return FitConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def search_space_from(cfg, view_names):
    """SearchSpace, or None when neither a grid nor automatic K was requested."""
    auto_k = cfg.get("K", "3").lower() == "auto"
    per_view = [f"lambda_grid.{v}" for v in view_names]
    has_grid = "lambda_grid" in cfg or any(k in cfg for k in per_view)
    if not (has_grid or auto_k):
        return None
    if any(k in cfg for k in per_view):
        missing = [k for k in per_view if k not in cfg]
        if missing:
            raise ConfigError(f"missing per-view grids: {', '.join(missing)}")
        grid = tuple(_convert(cfg, k, "floats") for k in per_view)
    elif "lambda_grid" in cfg:
        grid = tuple(_convert(cfg, "lambda_grid", "floats") for _ in view_names)
    else:
        lam = np.atleast_1d(fit_config_from(cfg).lambdas)
        grid = tuple((float(lam[min(d, lam.size - 1)]),) for d in range(len(view_names)))
    kw = {k: _convert(cfg, k, t) for k, t in _SEARCH_KEYS.items() if k in cfg}
    kw.setdefault("ic_form", "neg2loglik")
    if "k_range" in cfg:
        parts = cfg["k_range"].replace("-", ",").split(",")
        if len(parts) != 2:
            raise ConfigError("k_range must look like 2-6")
        kw["k_range"] = tuple(_num(v, "k_range", int) for v in parts)
    elif not auto_k:
        K = _num(cfg.get("K", "3"), "K", int)
        kw["k_range"] = (K, K)
    return SearchSpace(lambda_grid=grid, **kw)


def sim_config_from(cfg, seed=None):
    kw = {k: _convert(cfg, k, t) for k, t in _SIM_KEYS.items() if k in cfg}
    if seed is not None:
        kw["seed"] = int(seed)
    try:
        return SimConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


# --- data ---------------------------------------------------------------

def load_views(paths, families, names=None):
    """Read view files; returns (views, sample_ids)."""
    paths = [Path(p) for p in paths]
    if len(families) == 1 and len(paths) > 1:
        families = list(families) * len(paths)
    if len(families) != len(paths):
        raise ConfigError(f"{len(paths)} view files but {len(families)} families")
    names = list(names) if names else [p.stem for p in paths]
    if len(names) != len(paths) or len(set(names)) != len(names):
        raise ConfigError("view names must be unique, one per view file")
    views, ids = [], None
    for path, fam, name in zip(paths, families, names):
        table = read_table(path)
        if ids is None:
            ids = table.row_ids
        elif table.row_ids != ids:
            raise ShapeError(f"{path}: sample ids differ from the first view")
        views.append(ViewMatrix(table.values, get_family(fam), name, tuple(table.col_names)))
    return views, ids


def load_outcome(path, family, sample_ids=None, covariates=None):
    table = read_table(path)
    if table.values.shape[1] != 1:
        raise ShapeError(f"{path}: outcome file must have exactly one value column")
    if sample_ids is not None and table.row_ids != list(sample_ids):
        raise ShapeError(f"{path}: sample ids differ from the views")
    xe = None
    if covariates is not None:
        ct = read_table(covariates)
        if sample_ids is not None and ct.row_ids != list(sample_ids):
            raise ShapeError(f"{covariates}: sample ids differ from the views")
        xe = ct.values
    return OutcomeSpec(table.values[:, 0], get_family(family), xe)


def views_from_config(cfg):
    if "views" not in cfg:
        raise ConfigError("config needs a 'views' entry")
    paths = [Path(p) if Path(p).is_absolute() else Path(cfg["_base_dir"]) / p
             for p in _list(cfg["views"])]
    families = _list(cfg.get("view_families", "gaussian"))
    names = _list(cfg["view_names"]) if "view_names" in cfg else None
    return load_views(paths, families, names)


def outcome_from_config(cfg, sample_ids):
    if "outcome" not in cfg:
        return None
    cov = _path(cfg, "covariates") if "covariates" in cfg else None
    return load_outcome(_path(cfg, "outcome"), cfg.get("outcome_family", "gaussian"),
                        sample_ids, cov)


# --- model bundle ---------------------------------------------------------

def _k_names(K):
    return [f"k{k + 1}" for k in range(K)]


def save_model(directory, result, sample_ids, covariate_names=()):
    """Write the fitted parameters needed for prediction."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    p = result.params
    ks = _k_names(p.K)
    write_table(d / "U.csv", sample_ids, ks, p.U)
    write_table(d / "W.csv", sample_ids, ks, p.W)
    var_names = result.extra.get("variable_names") or [
        [f"v{j + 1}" for j in range(V.shape[0])] for V in p.V]
    for name, V, mu, vn in zip(result.view_names, p.V, p.mu, var_names):
        write_table(d / f"V_{name}.csv", vn, ks, V, "variable")
        write_table(d / f"mu_{name}.csv", vn, ["mu"], mu, "variable")
    terms = ks + [str(c) for c in covariate_names]
    write_table(d / "beta.csv", terms, ["beta"], result.beta_hat, "term")
    cfg = result.extra.get("config")
    write_json(d / "model.json", {
        "K": p.K,
        "view_names": list(result.view_names),
        "view_families": [str(f) for f in result.families],
        "outcome_family": None if result.outcome_family is None else str(result.outcome_family),
        "covariate_names": [str(c) for c in covariate_names],
        "non_overlapping": result.non_overlapping,
        "config": None if cfg is None else cfg.as_dict(),
    })


def load_model(directory):
    """Rebuild a BiclusterResult (enough for prediction) from a model bundle."""
    d = Path(directory)
    meta_path = d / "model.json"
    if not meta_path.is_file():
        raise InvalidDataError(f"model description not found: {meta_path}")
    with open(meta_path) as fh:
        meta = json.load(fh)
    V, mu, var_names = [], [], []
    for name in meta["view_names"]:
        tv = read_table(d / f"V_{name}.csv")
        tm = read_table(d / f"mu_{name}.csv")
        if tv.values.shape[1] != meta["K"] or tm.values.shape != (tv.values.shape[0], 1):
            raise ShapeError(f"model files for view {name!r} are inconsistent")
        V.append(tv.values)
        mu.append(tm.values[:, 0])
        var_names.append(tv.row_ids)
    U = read_table(d / "U.csv").values
    W = read_table(d / "W.csv").values
    beta = read_table(d / "beta.csv").values[:, 0]
    params = ModelParams(U=U, V=V, W=W, mu=mu, beta=beta)
    cfg = None
    if meta.get("config"):
        c = dict(meta["config"])
        lam = c.get("lambdas")
        c["lambdas"] = lam if np.ndim(lam) == 0 else np.asarray(lam, dtype=float)
        cfg = FitConfig(**{f.name: c[f.name] for f in fields(FitConfig) if f.name in c})
    fam = meta.get("outcome_family")
    return BiclusterResult(
        assignments=hard_assign(W),
        variable_members=variable_membership(V, meta["non_overlapping"]),
        params=params, beta_hat=beta, loss_trace=np.array([]), converged=True,
        iterations=0, stop_reason="loaded", non_overlapping=meta["non_overlapping"],
        view_names=tuple(meta["view_names"]),
        families=tuple(get_family(f) for f in meta["view_families"]),
        outcome_family=None if fam is None else get_family(fam),
        extra={"config": cfg, "variable_names": var_names,
               "covariate_names": meta.get("covariate_names", [])},
    )
