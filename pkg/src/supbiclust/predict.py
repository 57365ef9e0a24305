"""Bicluster assignment and outcome prediction for new samples."""

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidDataError, NumericalError, ShapeError
from .expfam import init_transform, mean_link
from .fit import curvature_step
from .loss import block_gradient, forward
from .model import ModelParams, check_views, hard_assign, outcome_design
from .projections import project_simplex_rows, project_unit_columns

__all__ = ["PredictionResult", "predict", "predict_outcome", "align_by_beta"]

_RIDGE = 1e-8
_REL_EPS = 1e-12


@dataclass
class PredictionResult:
    W_new: np.ndarray
    U_new: np.ndarray
    assignments: np.ndarray
    psi_y_hat: np.ndarray
    y_hat: np.ndarray
    converged: bool
    iterations: int
    loss_trace: np.ndarray

    def classes(self, threshold=0.5):
        """Binary class calls for a bernoulli outcome."""
        return (self.y_hat >= threshold).astype(int)


def _check_new_views(new_views, fitted):
    new_views = check_views(new_views)
    params = fitted.params
    if len(new_views) != len(params.V):
        raise ShapeError(f"model has {len(params.V)} views, got {len(new_views)}")
    for d, view in enumerate(new_views):
        if view.p != params.V[d].shape[0]:
            raise ShapeError(f"view {d + 1} has {view.p} variables, model expects "
                             f"{params.V[d].shape[0]}")
        if fitted.families and view.family != fitted.families[d]:
            raise InvalidDataError(f"view {d + 1} family {view.family} differs from the "
                                   f"fitted {fitted.families[d]}")
    return new_views


def _initial_scores(new_views, params):
    """Ridge least-squares scores of the centred, h-transformed views on V."""
    psi = np.hstack([init_transform(v.family, v.data) - mu[None, :]
                     for v, mu in zip(new_views, params.mu)])
    V = np.vstack(params.V)
    K = V.shape[1]
    scores = np.linalg.solve(V.T @ V + _RIDGE * np.eye(K), V.T @ psi.T).T
    return project_unit_columns(scores)


def predict(new_views, fitted, alpha=None, tol=None, max_iter=None, covariates=None,
            init=None, config=None):
    """Estimate U and W for new samples with V and mu frozen, then predict y.

    Only the view likelihood enters the objective; the outcome of the new
    samples is never consulted.

    Parameters
    ----------
    new_views : list of ViewMatrix
        Same variables, order and families as the training views.
    fitted : BiclusterResult
    alpha, tol, max_iter : optional
        Optimiser settings; default to ``config`` (or the stored fit config).
    covariates : ndarray, optional
        Outcome covariates of the new samples, required when the model used
        them.
    init : tuple (U, W), optional
        Starting point instead of the least-squares warm start.
    config : FitConfig, optional
    """
    new_views = _check_new_views(new_views, fitted)
    cfg = config if config is not None else fitted.extra.get("config")
    if alpha is None:
        alpha = (cfg.predict_alpha or cfg.alpha) if cfg is not None else 1.0
    tol = tol if tol is not None else (cfg.tol if cfg is not None else 1e-6)
    max_iter = max_iter if max_iter is not None else (cfg.max_iter if cfg is not None else 2000)
    fparams = fitted.params
    K = fparams.K
    m = new_views[0].n
    n_cov = fparams.beta.shape[0] - K
    if n_cov and covariates is None:
        raise ShapeError(f"model uses {n_cov} covariates; supply them for the new samples")
    if covariates is not None:
        covariates = np.asarray(covariates, dtype=float)
        if covariates.ndim == 1:
            covariates = covariates[:, None]
        if covariates.shape != (m, n_cov):
            raise ShapeError(f"covariates must have shape {(m, n_cov)}")

    if init is None:
        U = _initial_scores(new_views, fparams)
        W = np.full((m, K), 1.0 / K)
    else:
        U, W = (np.array(a, dtype=float) for a in init)
        if U.shape != (m, K) or W.shape != (m, K):
            raise ShapeError(f"initial U and W must have shape {(m, K)}")
    params = ModelParams(U=U, V=[v.copy() for v in fparams.V], W=W,
                         mu=[mu.copy() for mu in fparams.mu], beta=fparams.beta.copy())

    scaled = cfg is None or cfg.block_scaling == "curvature"

    def step(block):
        return curvature_step(block, alpha, params, new_views, None, 1.0) if scaled else alpha

    def evaluate(it, block, with_loss=True):
        try:
            return forward(new_views, None, params, 1.0, with_loss)
        except NumericalError as exc:
            raise NumericalError(f"{exc} at prediction iteration {it} after {block}",
                                 iteration=it, block=block) from None

    loss, R, _ = evaluate(0, "init")
    trace = [loss]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        g = block_gradient("U", params, R, None)
        params.U = project_unit_columns(params.U - step("U") * g)
        _, R, _ = evaluate(it, "U", False)
        g = block_gradient("W", params, R, None)
        params.W = project_simplex_rows(params.W - step("W") * g)
        new_loss, R, _ = evaluate(it, "W")
        trace.append(new_loss)
        if abs(new_loss - loss) / (abs(loss) + _REL_EPS) < tol:
            converged = True
            break
        loss = new_loss

    psi_y, y_hat = predict_outcome(fitted, params.W, covariates)
    return PredictionResult(W_new=params.W, U_new=params.U, assignments=hard_assign(params.W),
                            psi_y_hat=psi_y, y_hat=y_hat, converged=converged,
                            iterations=it, loss_trace=np.asarray(trace))


def predict_outcome(fitted, W, covariates=None):
    """Natural parameter and mean-scale outcome prediction from soft weights."""
    psi_y = outcome_design(W, covariates) @ fitted.beta_hat
    family = fitted.outcome_family
    y_hat = psi_y.copy() if family is None else mean_link(family, psi_y)
    return psi_y, np.asarray(y_hat, dtype=float)


def align_by_beta(beta_ref, beta_other):
    """Greedy matching of biclusters across fits by closest outcome effect.

    Returns ``perm`` such that bicluster ``perm[k]`` of the other fit
    corresponds to bicluster ``k`` of the reference (0-based).
    """
    beta_ref = np.asarray(beta_ref, dtype=float)
    beta_other = np.asarray(beta_other, dtype=float)
    if beta_ref.shape != beta_other.shape:
        raise ShapeError("effect vectors must have equal length")
    K = beta_ref.shape[0]
    diff = np.abs(beta_ref[:, None] - beta_other[None, :])
    perm = np.full(K, -1)
    used_r, used_o = set(), set()
    for flat in np.argsort(diff, axis=None, kind="stable"):
        i, j = divmod(int(flat), K)
        if i in used_r or j in used_o:
            continue
        perm[i] = j
        used_r.add(i)
        used_o.add(j)
    return perm
