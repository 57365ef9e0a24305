"""Alternating projected gradient descent for the supervised biclustering model."""

import logging
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from sklearn.utils.extmath import svd_flip

from .exceptions import ConfigError, InvalidFamilyError, NumericalError, ShapeError
from .expfam import get_family, init_transform, mean_link, variance_fn
from .loss import block_gradient, forward, lambda_matrix, penalty
from .model import (BiclusterResult, ModelParams, check_views, hard_assign, outcome_design,
                    variable_membership)
from .projections import project_simplex_rows, project_unit_columns, soft_threshold

__all__ = ["FitConfig", "initialize", "fit", "refit_beta", "curvature_step", "SeparationWarning"]

logger = logging.getLogger(__name__)

_REL_EPS = 1e-12


class SeparationWarning(UserWarning):
    """The outcome refit diverged towards infinite coefficients."""


@dataclass(frozen=True)
class FitConfig:
    """Hyper-parameters of a single fit.

    Attributes
    ----------
    K : int
        Number of biclusters.
    alpha : float
        Base gradient step size (see ``block_scaling``).
    tol : float
        Relative change of the total loss below which iterations stop.
    max_iter : int
        Maximum number of sweeps over the blocks.
    rho : float
        Weight of the view likelihood; ``1 - rho`` weights the outcome.
    lambdas : float, sequence or array
        L1 penalties on the loadings (scalar, per view or ``D x K``).
    non_overlapping : bool
        Report each variable in at most one bicluster.
    seed : int
        Seed for stochastic components built on top of the fit.
    outcome_weight_refit : bool
        Re-estimate beta by maximum likelihood once W has converged.
    predict_alpha : float or None
        Step size for prediction; ``None`` reuses ``alpha``.
    block_scaling : {"curvature", "none"}
        ``"curvature"`` divides ``alpha`` by an upper bound on each block's
        curvature: ``V_d`` steps by ``alpha * n * p_d``, ``mu_d`` by
        ``alpha * p_d`` and U, W, beta by ``alpha / L`` with L recomputed every
        sweep. ``"none"`` uses ``alpha`` for every block.
    """

    K: int = 3
    alpha: float = 1.0
    tol: float = 1e-5
    max_iter: int = 2000
    rho: float = 0.95
    lambdas: object = 0.0
    non_overlapping: bool = True
    seed: int = 0
    outcome_weight_refit: bool = True
    predict_alpha: float | None = None
    block_scaling: str = "curvature"

    def __post_init__(self):
        if self.block_scaling not in ("curvature", "none"):
            raise ConfigError(f"unknown block_scaling {self.block_scaling!r}")
        if int(self.K) != self.K or self.K < 1:
            raise ConfigError(f"K must be a positive integer, got {self.K}")
        if not self.alpha > 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ConfigError(f"max_iter must be a positive integer, got {self.max_iter}")
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigError(f"rho must lie in [0, 1], got {self.rho}")
        lam = np.asarray(self.lambdas, dtype=float)
        if np.any(~np.isfinite(lam)) or np.any(lam < 0):
            raise ConfigError("penalties must be finite and non-negative")
        if self.predict_alpha is not None and not self.predict_alpha > 0:
            raise ConfigError("predict_alpha must be positive")
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "max_iter", int(self.max_iter))

    def replace(self, **changes):
        return replace(self, **changes)

    def as_dict(self):
        out = asdict(self)
        lam = np.asarray(self.lambdas, dtype=float)
        out["lambdas"] = lam.tolist()
        return out


def _validate_inputs(views, outcome, K):
    views = check_views(views)
    for view in views:
        if not view.family.has_likelihood:
            raise InvalidFamilyError(
                f"view {view.name!r}: family {view.family} can only be used to "
                "initialise, not to fit")
    if outcome is not None and outcome.n != views[0].n:
        raise ShapeError(f"outcome has {outcome.n} entries for {views[0].n} samples")
    n = views[0].n
    p_total = sum(v.p for v in views)
    if K > min(n, p_total):
        raise ConfigError(f"K={K} exceeds min(n, total variables)={min(n, p_total)}")
    return views


def initialize(views, outcome, config):
    """Starting point of the alternating scheme.

    The h-transformed views are concatenated and decomposed by SVD: U takes
    the first K left singular vectors and the stacked loadings the first K
    columns of ``Q Sigma``. W starts as a matrix of ones, mu and beta as
    zeros.
    """
    K = config.K if isinstance(config, FitConfig) else int(config)
    views = _validate_inputs(views, outcome, K)
    psi = np.hstack([init_transform(v.family, v.data) for v in views])
    try:
        P, s, Qt = np.linalg.svd(psi, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD of the initial natural parameters failed: {exc}") from exc
    P, Qt = svd_flip(P, Qt)
    U = P[:, :K].copy()
    V_all = Qt[:K].T * s[:K]
    splits = np.cumsum([v.p for v in views])[:-1]
    V = [block.copy() for block in np.split(V_all, splits, axis=0)]
    n = psi.shape[0]
    n_cov = 0 if outcome is None else outcome.n_covariates
    return ModelParams(U=U, V=V, W=np.ones((n, K)), mu=[np.zeros(v.p) for v in views],
                       beta=np.zeros(K + n_cov))


def refit_beta(outcome, W_hat, max_iter=100, tol=1e-8):
    """Maximum-likelihood outcome coefficients given the fitted W.

    Fits the canonical GLM of ``y`` on ``[W | X_E]`` without intercept.
    Gaussian outcomes use the (ridge-jittered) normal equations, other
    families Newton-Raphson.

    Returns
    -------
    beta : ndarray
    separated : bool
        True when the iterations ran away (complete separation or an
        outcome with a single class).
    """
    A = outcome_design(np.asarray(W_hat, dtype=float), outcome.covariates)
    y = outcome.y
    q = A.shape[1]
    jitter = 1e-10 * np.eye(q)
    if outcome.family.name == "gaussian":
        return np.linalg.solve(A.T @ A + jitter, A.T @ y), False
    beta = np.zeros(q)
    converged = False
    for _ in range(max_iter):
        psi = A @ beta
        g = A.T @ (mean_link(outcome.family, psi) - y)
        if np.linalg.norm(g) < tol:
            converged = True
            break
        H = A.T @ (variance_fn(outcome.family, psi)[:, None] * A) + jitter
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)):
            break
        beta = beta - step
    separated = (not converged) or bool(np.max(np.abs(A @ beta), initial=0.0) > 20.0)
    if separated:
        warnings.warn("outcome refit did not settle; coefficients diverge "
                      "(possible separation)", SeparationWarning, stacklevel=2)
    return beta, separated


def block_steps(config, n, p_list):
    """Step sizes of the V and mu blocks, one per view."""
    if config.block_scaling == "none":
        return [config.alpha] * len(p_list), [config.alpha] * len(p_list)
    return [config.alpha * n * p for p in p_list], [config.alpha * p for p in p_list]


# bound on G''; poisson has none, 1 is a heuristic
_CURVATURE = {"gaussian": 1.0, "bernoulli": 0.25, "poisson": 1.0}


def _view_curvature(params, views):
    return sum(_CURVATURE.get(v.family.name, 1.0) * np.linalg.norm(V, 2) ** 2 / (params.n * v.p)
               for v, V in zip(views, params.V))


def curvature_step(block, alpha, params, views, outcome, rho):
    """Step ``alpha / L`` for block U, W or beta, L bounding its curvature."""
    n, K = params.n, params.K
    c_y = 0.0 if outcome is None else _CURVATURE.get(outcome.family.name, 1.0)
    if block == "U":
        L = rho * _view_curvature(params, views)
    elif block == "W":
        L = (rho * float(np.max(params.U ** 2)) * _view_curvature(params, views)
             + (1 - rho) * c_y * float(params.beta[:K] @ params.beta[:K]) / n)
    else:
        if outcome is None:
            return alpha
        A = outcome_design(params.W, outcome.covariates)
        L = (1 - rho) * c_y * np.linalg.norm(A, 2) ** 2 / n
    return alpha / L if L > 0 else alpha


def _stacked_zero_column(V):
    return bool(np.any(np.all(np.vstack(V) == 0, axis=0)))


def fit(views, outcome, config, init_params=None):
    """Estimate all parameters by alternating projected gradient descent.

    Blocks are updated in the order U, W, V, mu, beta and the loss is
    refreshed after every block. Iterations stop when the relative change of
    the total loss drops below ``config.tol`` or when a bicluster loses every
    loading in all views; in the latter case the iterate just before the
    offending V update is returned with ``stop_reason="empty-component"``.

    Parameters
    ----------
    views : list of ViewMatrix
    outcome : OutcomeSpec or None
    config : FitConfig
    init_params : ModelParams, optional
        Starting point; defaults to :func:`initialize`.

    Returns
    -------
    BiclusterResult
    """
    views = _validate_inputs(views, outcome, config.K)
    n_cov = 0 if outcome is None else outcome.n_covariates
    params = initialize(views, outcome, config) if init_params is None else init_params.copy()
    params.check(views, n_cov)
    lam = lambda_matrix(config.lambdas, len(views), config.K)
    alpha, rho = config.alpha, config.rho
    step_V, step_mu = block_steps(config, params.n, [v.p for v in views])
    xe = None if outcome is None else outcome.covariates

    def step(block):
        if config.block_scaling == "none":
            return alpha
        return curvature_step(block, alpha, params, views, outcome, rho)

    def evaluate(it, block, with_loss=False):
        try:
            l0, R, r = forward(views, outcome, params, rho, with_loss)
        except NumericalError as exc:
            raise NumericalError(f"{exc} at iteration {it} after updating {block}",
                                 iteration=it, block=block) from None
        return (l0 + penalty(params, lam) if with_loss else l0), R, r

    loss, R, r = evaluate(0, "init", True)
    trace = [loss]
    stop_reason = "max-iter"
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        g = block_gradient("U", params, R, r, xe)
        params.U = project_unit_columns(params.U - step("U") * g)
        _, R, r = evaluate(it, "U")

        g = block_gradient("W", params, R, r, xe)
        params.W = project_simplex_rows(params.W - step("W") * g)
        _, R, r = evaluate(it, "W")

        g = block_gradient("V", params, R, r, xe)
        new_V = [soft_threshold(V - step_V[d] * gV, step_V[d] * lam[d][None, :])
                 for d, (V, gV) in enumerate(zip(params.V, g))]
        if _stacked_zero_column(new_V):
            stop_reason = "empty-component"
            logger.debug("empty component at iteration %d", it)
            break
        params.V = new_V
        _, R, r = evaluate(it, "V")

        g = block_gradient("mu", params, R, r, xe)
        params.mu = [mu - step_mu[d] * gm for d, (mu, gm) in enumerate(zip(params.mu, g))]
        _, R, r = evaluate(it, "mu")

        g = block_gradient("beta", params, R, r, xe)
        params.beta = params.beta - step("beta") * g
        new_loss, R, r = evaluate(it, "beta", True)

        trace.append(new_loss)
        if abs(new_loss - loss) / (abs(loss) + _REL_EPS) < config.tol:
            stop_reason = "tolerance"
            converged = True
            break
        loss = new_loss

    return _finish(views, outcome, config, params, np.asarray(trace), converged, it,
                   stop_reason)


def _finish(views, outcome, config, params, trace, converged, iterations, stop_reason):
    members = variable_membership(params.V, config.non_overlapping)
    separated = False
    beta_hat = params.beta.copy()
    if outcome is not None and config.outcome_weight_refit:
        with warnings.catch_warnings(record=True):
            warnings.simplefilter("always")
            beta_hat, separated = refit_beta(outcome, params.W)
        params.beta = beta_hat.copy()
    return BiclusterResult(
        assignments=hard_assign(params.W),
        variable_members=members,
        params=params,
        beta_hat=beta_hat,
        loss_trace=trace,
        converged=converged,
        iterations=iterations,
        stop_reason=stop_reason,
        non_overlapping=config.non_overlapping,
        separation=separated,
        view_names=tuple(v.name for v in views),
        families=tuple(v.family for v in views),
        outcome_family=None if outcome is None else outcome.family,
        extra={"config": config},
    )
