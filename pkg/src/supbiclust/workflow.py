"""Fit-with-selection pipeline and the simulate/fit/predict/evaluate cycle."""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fit import FitConfig, fit
from .metrics import bicluster_scores, outcome_error
from .predict import predict, predict_outcome
from .selection import SearchSpace, is_empty, random_search, select_k
from .simulation import SimConfig, generate

__all__ = ["FitRun", "run_fit", "score_against", "SETTINGS", "Setting", "replicate",
           "reproduce", "SUMMARY_COLUMNS", "child_seeds", "default_lambda_grid"]

logger = logging.getLogger(__name__)


@dataclass
class FitRun:
    """A fit together with how its hyper-parameters were chosen."""

    config: FitConfig
    result: object
    k_selection: str
    ic_table: list = field(default_factory=list)
    k_table: list = field(default_factory=list)


def run_fit(views, outcome, config, space=None):
    """Fit with fixed hyper-parameters, a λ search, or a λ search per K."""
    if space is None:
        return FitRun(config, fit(views, outcome, config), "user")
    lo, hi = space.k_range
    if lo == hi:
        cfg, res, table = random_search(views, outcome, config.replace(K=lo), space)
        return FitRun(cfg, res, "user", table)
    sel = select_k(views, outcome, config, space)
    cfg, res = sel.results[sel.K_hat]
    k_table = [{"K": K, "lambdas": np.atleast_1d(c.lambdas).tolist(),
                "stop_reason": r.stop_reason, "empty": is_empty(r)}
               for K, (c, r) in sorted(sel.results.items())]
    return FitRun(cfg, res, "search", sel.searches.get(sel.K_hat, []), k_table)


def score_against(assignments, variable_members, truth, n, p_list):
    """Bicluster metrics of hard sample labels and variable sets against a Truth."""
    K = len(variable_members[0])
    est_samples = [np.flatnonzero(np.asarray(assignments) == k + 1) for k in range(K)]
    return bicluster_scores(est_samples, variable_members, truth.sample_members(),
                            truth.variables, n, p_list)


@dataclass(frozen=True)
class Setting:
    """Simulation scenario plus the fitting recipe used for it."""

    sim: dict
    lambda_grid: tuple
    fit: dict = field(default_factory=dict)


def default_lambda_grid(p):
    """Penalty candidates for views of ``p`` variables (step scaling makes λ shrink like 1/p)."""
    return tuple(v * 100.0 / p for v in (3e-4, 4e-4, 5e-4, 6e-4))


_FIT = {"K": 3, "alpha": 1.0, "rho": 0.95, "tol": 1e-6, "max_iter": 2000}

SETTINGS = {
    f"{fam[0]}{n}x{p}": Setting({"n": n, "p": p, "outcome_family": fam}, default_lambda_grid(p), _FIT)
    for fam in ("gaussian", "bernoulli") for n, p in ((150, 100), (150, 500), (500, 1000))
}

SUMMARY_COLUMNS = ("relevance", "recovery", "f_score", "false_positive", "false_negative",
                   "train_error", "test_relevance", "test_recovery", "test_f_score",
                   "test_false_positive", "test_false_negative", "test_error")


def child_seeds(seed, count):
    """Independent integer seeds derived from one top-level seed."""
    ss = np.random.SeedSequence(int(seed))
    return [int(c.generate_state(1)[0]) for c in ss.spawn(count)]


def replicate(setting, seed):
    """One simulate, fit (λ by BIC), predict and evaluate cycle; returns a metric dict."""
    if isinstance(setting, str):
        setting = SETTINGS[setting]
    sim_seed, fit_seed = child_seeds(seed, 2)
    sim = SimConfig(**setting.sim, seed=sim_seed)
    bundle = generate(sim)
    views, outcome = bundle.train_views, bundle.train_outcome
    cfg = FitConfig(**setting.fit, seed=fit_seed)
    space = SearchSpace.shared(setting.lambda_grid, sim.D, ic_form="neg2loglik",
                               k_range=(cfg.K, cfg.K))
    run = run_fit(views, outcome, cfg, space)
    res = run.result
    p_list = [v.p for v in views]
    fam = outcome.family
    row = dict(score_against(res.assignments, res.variable_members, bundle.truth, sim.n, p_list))
    row["train_error"] = outcome_error(outcome.y, predict_outcome(res, res.params.W)[1], fam)
    pred = predict(bundle.test_views, res)
    test = score_against(pred.assignments, res.variable_members, bundle.test_truth, sim.n,
                         p_list)
    row.update({f"test_{k}": v for k, v in test.items()})
    row["test_error"] = outcome_error(bundle.test_outcome.y, pred.y_hat, fam)
    row["lambda"] = float(np.atleast_1d(run.config.lambdas)[0])
    row["stop_reason"] = res.stop_reason
    row["seed"] = seed
    return row


def _replicate_star(args):
    return replicate(*args)


def reproduce(setting_name, reps, seed=0, threads=1):
    """Run ``reps`` replications; results are returned in replication order."""
    if setting_name not in SETTINGS:
        raise KeyError(setting_name)
    jobs = [(setting_name, s) for s in child_seeds(seed, reps)]
    if threads > 1 and reps > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_replicate_star, jobs))
    else:
        rows = [_replicate_star(j) for j in jobs]
    summary = {c: float(np.mean([r[c] for r in rows])) for c in SUMMARY_COLUMNS}
    sd = {c: float(np.std([r[c] for r in rows], ddof=1)) if reps > 1 else 0.0
          for c in SUMMARY_COLUMNS}
    return rows, summary, sd
