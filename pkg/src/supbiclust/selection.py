"""Information criteria, random search over penalties and choice of K."""

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import BiclusterError, ConfigError, SearchFailure, SelectionError
from .expfam import nll_entry
from .fit import fit
from .loss import forward, penalty
from .model import natural_param_outcome, natural_params_view

__all__ = ["SearchSpace", "information_loss", "count_selected", "bic", "ebic",
           "score", "random_search", "select_k", "is_empty", "KSelection", "LOG_GUARD"]

logger = logging.getLogger(__name__)

LOG_GUARD = 1e-300
_LOSSES = ("nll_sum", "smooth_l0", "total_L")
_FORMS = ("log_loss", "neg2loglik")


@dataclass(frozen=True)
class SearchSpace:
    """Candidate penalties and scoring rules.

    ``lambda_grid`` holds one list of candidates per view. With
    ``shared_lambda`` the same grid position is used in every view (one
    candidate per position); otherwise the Cartesian product over views is
    searched.

    ``ic_form`` selects how the loss enters the criterion: ``"log_loss"``
    is ``q log n - 2 log(L)`` with ``L`` guarded below by ``LOG_GUARD``,
    ``"neg2loglik"`` is ``q log n + 2 L`` with ``L`` a negative
    log-likelihood.
    """

    lambda_grid: tuple = ((0.0,),)
    shared_lambda: bool = True
    sigma_ebic: float = 0.0
    use_ebic: bool = False
    loss_for_ic: str = "nll_sum"
    ic_form: str = "log_loss"
    max_draws: int = 60
    k_range: tuple = (1, 6)

    def __post_init__(self):
        grid = tuple(tuple(float(v) for v in np.atleast_1d(g)) for g in self.lambda_grid)
        if not grid or any(len(g) == 0 for g in grid):
            raise ConfigError("lambda grids must be non-empty")
        if any(v < 0 or not math.isfinite(v) for g in grid for v in g):
            raise ConfigError("lambda candidates must be finite and non-negative")
        if self.shared_lambda and len({len(g) for g in grid}) != 1:
            raise ConfigError("shared_lambda needs grids of equal length in every view")
        object.__setattr__(self, "lambda_grid", grid)
        if not 0.0 <= self.sigma_ebic <= 1.0:
            raise ConfigError(f"sigma_ebic must lie in [0, 1], got {self.sigma_ebic}")
        if self.loss_for_ic not in _LOSSES:
            raise ConfigError(f"loss_for_ic must be one of {_LOSSES}")
        if self.ic_form not in _FORMS:
            raise ConfigError(f"ic_form must be one of {_FORMS}")
        if int(self.max_draws) != self.max_draws or self.max_draws < 1:
            raise ConfigError("max_draws must be a positive integer")
        lo, hi = (int(k) for k in self.k_range)
        if lo < 1 or hi < lo:
            raise ConfigError(f"invalid k_range {self.k_range}")
        object.__setattr__(self, "k_range", (lo, hi))

    @classmethod
    def shared(cls, values, n_views, **kw):
        """Same candidate list in each of ``n_views`` views."""
        return cls(lambda_grid=tuple(tuple(values) for _ in range(n_views)), **kw)

    def candidates(self):
        """All penalty settings, each a tuple with one λ per view."""
        if self.shared_lambda:
            return [tuple(g[i] for g in self.lambda_grid)
                    for i in range(len(self.lambda_grid[0]))]
        return list(itertools.product(*self.lambda_grid))


def count_selected(result):
    """Variables (rows of V) in any bicluster, summed over views."""
    return result.n_selected()


def information_loss(result, views, outcome=None, kind="nll_sum"):
    """Loss plugged into the information criteria.

    ``"nll_sum"`` is the unaveraged negative log-likelihood summed over all
    view entries and the outcome; ``"smooth_l0"`` the averaged smooth loss
    used for fitting and ``"total_L"`` that loss plus the L1 penalty.
    """
    params = result.params
    if kind == "nll_sum":
        total = 0.0
        for d, view in enumerate(views):
            total += float(np.sum(nll_entry(view.family, view.data,
                                            natural_params_view(params, d))))
        if outcome is not None:
            total += float(np.sum(nll_entry(outcome.family, outcome.y,
                                            natural_param_outcome(params, outcome))))
        return total
    cfg = result.extra.get("config")
    rho = cfg.rho if cfg is not None else 0.5
    l0 = forward(views, outcome, params, rho)[0]
    if kind == "smooth_l0":
        return l0
    if kind == "total_L":
        lam = cfg.lambdas if cfg is not None else 0.0
        return l0 + penalty(params, lam)
    raise ConfigError(f"unknown loss kind {kind!r}")


def _likelihood_term(loss, form):
    if form == "neg2loglik":
        return 2.0 * loss, False
    guarded = loss <= LOG_GUARD
    return -2.0 * math.log(max(loss, LOG_GUARD)), guarded


def bic(result, views, outcome=None, loss_for_ic="nll_sum", ic_form="log_loss",
        return_guard=False):
    """``q log n - 2 log(L)`` (or ``q log n + 2 L`` for ``ic_form="neg2loglik"``)."""
    return ebic(result, views, 0.0, outcome, loss_for_ic, ic_form, return_guard)


def ebic(result, views, sigma, outcome=None, loss_for_ic="nll_sum", ic_form="log_loss",
         return_guard=False):
    """Extended BIC: the BIC plus ``2 sigma sum_d q log p_d`` with the global ``q``."""
    if not 0.0 <= sigma <= 1.0:
        raise ConfigError(f"sigma must lie in [0, 1], got {sigma}")
    loss = information_loss(result, views, outcome, loss_for_ic)
    q = count_selected(result)
    n = views[0].n
    term, guarded = _likelihood_term(loss, ic_form)
    value = q * math.log(n) + term
    if sigma != 0.0:
        value = value + 2.0 * sigma * sum(q * math.log(v.p) for v in views)
    return (value, guarded) if return_guard else value


def score(result, views, outcome, space):
    """Criterion of ``space`` evaluated on a fit; returns ``(value, guarded)``."""
    sigma = space.sigma_ebic if space.use_ebic else 0.0
    return ebic(result, views, sigma, outcome, space.loss_for_ic, space.ic_form,
                return_guard=True)


@dataclass
class _Row:
    draw: int
    lambdas: tuple
    score: float = math.nan
    q: int = -1
    guarded: bool = False
    stop_reason: str = ""
    error: str = ""

    def as_dict(self):
        return {"draw": self.draw, "lambdas": list(self.lambdas), "score": self.score,
                "q": self.q, "guarded": self.guarded, "stop_reason": self.stop_reason,
                "error": self.error}


def random_search(views, outcome, config, space, rng=None):
    """Fit a random subset of the penalty grid and keep the lowest criterion.

    ``min(|grid|, space.max_draws)`` distinct candidates are drawn without
    replacement. Ties are broken by fewer selected variables, then by draw
    order.

    Returns
    -------
    best_config : FitConfig
    best_result : BiclusterResult
    table : list of dict
        One row per draw in draw order.
    """
    rng = np.random.default_rng(config.seed if rng is None else rng)
    cands = space.candidates()
    n_draws = min(len(cands), int(space.max_draws))
    order = rng.choice(len(cands), size=n_draws, replace=False)
    rows, results = [], []
    for i, idx in enumerate(order):
        lam = cands[int(idx)]
        row = _Row(draw=i, lambdas=lam)
        cfg = config.replace(lambdas=tuple(lam))
        try:
            res = fit(views, outcome, cfg)
            row.score, row.guarded = score(res, views, outcome, space)
            row.q = count_selected(res)
            row.stop_reason = res.stop_reason
            if not math.isfinite(row.score):
                raise ArithmeticError("non-finite criterion")
            results.append((cfg, res))
        except (BiclusterError, ArithmeticError) as exc:
            row.error = f"{type(exc).__name__}: {exc}"
            results.append(None)
            logger.info("candidate %s failed: %s", lam, exc)
        rows.append(row)
    ok = [i for i, r in enumerate(results) if r is not None]
    if not ok:
        raise SearchFailure("every candidate fit failed", [r.as_dict() for r in rows])
    best = min(ok, key=lambda i: (rows[i].score, rows[i].q, i))
    cfg, res = results[best]
    return cfg, res, [r.as_dict() for r in rows]


def is_empty(result):
    """A bicluster has no assigned sample, no loading at all, or the fit stopped on one."""
    if result.stop_reason == "empty-component":
        return True
    K = result.K
    if np.bincount(result.assignments - 1, minlength=K).min() == 0:
        return True
    zero_cols = np.ones(K, dtype=bool)
    for V in result.params.V:
        zero_cols &= np.all(V == 0, axis=0)
    return bool(zero_cols.any())


@dataclass
class KSelection:
    K_hat: int
    results: dict = field(default_factory=dict)
    searches: dict = field(default_factory=dict)
    mode: str = "search"


def select_k(views, outcome, config, space, search=True):
    """Largest K before the first one that yields an empty bicluster.

    For each K in ``space.k_range`` (ascending) a fit is produced (through
    :func:`random_search` when ``search`` is true, otherwise with
    ``config.lambdas``). A collapsed range returns the user's K unchanged.

    Returns
    -------
    KSelection
        ``results[K]`` is ``(config, result)`` for every K tried.
    """
    lo, hi = space.k_range
    out = KSelection(K_hat=lo, mode="user" if lo == hi else "search")
    p_total = sum(v.p for v in views)
    last_ok = None
    for K in range(lo, hi + 1):
        if K > min(views[0].n, p_total):
            break
        cfg = config.replace(K=K)
        if search:
            cfg, res, table = random_search(views, outcome, cfg, space)
            out.searches[K] = table
        else:
            res = fit(views, outcome, cfg)
        out.results[K] = (cfg, res)
        if lo == hi:
            last_ok = K
            break
        if is_empty(res):
            logger.info("K=%d produced an empty bicluster", K)
            break
        last_ok = K
    if last_ok is None:
        raise SelectionError(f"K={lo} already gives an empty bicluster; try smaller penalties")
    out.K_hat = last_ok
    return out

