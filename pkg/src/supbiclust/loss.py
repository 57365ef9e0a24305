"""Total objective, its smooth part and block gradients.

With ``R_d = rho / (n p_d) * (G'(Psi_d) - X_d)`` and
``r = (1 - rho) / n * (G'(psi_y) - y)`` the gradients of the smooth part
are::

    dV_d  = R_d^T (U * W)
    dmu_d = column sums of R_d
    T     = sum_d R_d V_d
    dU    = T * W
    dW    = T * U + r beta[:K]^T
    dbeta = [W | X_E]^T r
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, NumericalError
from .expfam import cumulant, mean_link
from .model import natural_param_outcome, natural_params_view, outcome_design

__all__ = ["LossWeights", "lambda_matrix", "loss_total", "loss_smooth", "penalty",
           "grad", "BLOCKS"]

BLOCKS = ("U", "W", "V", "mu", "beta")


@dataclass(frozen=True)
class LossWeights:
    """Supervision weight ``rho`` and L1 penalties on the loadings.

    ``lambdas`` may be a scalar, one value per view, or a ``D x K`` array.
    """

    rho: float = 0.5
    lambdas: object = 0.0

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigError(f"rho must lie in [0, 1], got {self.rho}")
        lam = np.asarray(self.lambdas, dtype=float)
        if np.any(~np.isfinite(lam)) or np.any(lam < 0):
            raise ConfigError("penalties must be finite and non-negative")


def lambda_matrix(lambdas, D, K):
    """Broadcast penalties to a ``D x K`` array of ``lambda_kd``."""
    lam = np.asarray(lambdas, dtype=float)
    if lam.ndim == 0:
        return np.full((D, K), float(lam))
    if lam.ndim == 1:
        if lam.shape[0] != D:
            raise ConfigError(f"expected {D} per-view penalties, got {lam.shape[0]}")
        return np.repeat(lam[:, None], K, axis=1)
    if lam.shape != (D, K):
        raise ConfigError(f"penalty array must have shape {(D, K)}, got {lam.shape}")
    return lam.copy()


def _check_finite(value, what):
    if not np.all(np.isfinite(value)):
        raise NumericalError(f"non-finite {what}")


def forward(views, outcome, params, rho, with_loss=True):
    """Smooth loss together with the scaled residuals it induces.

    Returns ``(l0, R, r)`` where ``R`` is the list of per-view residual
    matrices and ``r`` the outcome residual (``None`` without outcome).
    With ``with_loss=False`` the loss is skipped (returned as NaN) and only
    the residuals are checked for finiteness.
    """
    if not with_loss:
        return _residuals(views, outcome, params, rho)
    n = params.n
    total = 0.0
    R = []
    with np.errstate(over="ignore", invalid="ignore"):
        for d, view in enumerate(views):
            psi = natural_params_view(params, d)
            scale = rho / (n * view.p)
            total += scale * float(np.sum(cumulant(view.family, psi) - view.data * psi))
            R.append(scale * (mean_link(view.family, psi) - view.data))
        r = None
        if outcome is not None:
            psi_y = natural_param_outcome(params, outcome)
            scale = (1.0 - rho) / n
            total += scale * float(np.sum(cumulant(outcome.family, psi_y) - outcome.y * psi_y))
            r = scale * (mean_link(outcome.family, psi_y) - outcome.y)
    if not np.isfinite(total):
        raise NumericalError("non-finite loss")
    return total, R, r


def _residuals(views, outcome, params, rho):
    n = params.n
    with np.errstate(over="ignore", invalid="ignore"):
        R = [rho / (n * view.p) * (mean_link(view.family, natural_params_view(params, d))
                                   - view.data) for d, view in enumerate(views)]
        r = None
        if outcome is not None:
            psi_y = natural_param_outcome(params, outcome)
            r = (1.0 - rho) / n * (mean_link(outcome.family, psi_y) - outcome.y)
    if not all(np.isfinite(Rd).all() for Rd in R) or (r is not None and not np.isfinite(r).all()):
        raise NumericalError("non-finite residuals")
    return np.nan, R, r


def penalty(params, lambdas):
    lam = lambda_matrix(lambdas, len(params.V), params.K)
    return float(sum(np.sum(lam[d] * np.abs(V).sum(axis=0)) for d, V in enumerate(params.V)))


def _weights(weights):
    if isinstance(weights, LossWeights):
        return weights
    if isinstance(weights, (int, float)):
        return LossWeights(rho=float(weights))
    raise TypeError("weights must be a LossWeights instance")


def loss_smooth(views, outcome, params, weights):
    """Differentiable part of the objective (averaged NLL of views and outcome)."""
    weights = _weights(weights)
    return forward(views, outcome, params, weights.rho)[0]


def loss_total(views, outcome, params, weights):
    """Smooth loss plus the L1 penalty on the loadings."""
    weights = _weights(weights)
    return loss_smooth(views, outcome, params, weights) + penalty(params, weights.lambdas)


def block_gradient(block, params, R, r, covariates=None):
    """Gradient of the smooth loss for ``block`` given precomputed residuals."""
    K = params.K
    if block == "V":
        UW = params.U * params.W
        return [Rd.T @ UW for Rd in R]
    if block == "mu":
        return [Rd.sum(axis=0) for Rd in R]
    if block == "beta":
        if r is None:
            return np.zeros_like(params.beta)
        return outcome_design(params.W, covariates).T @ r
    T = np.zeros_like(params.U)
    for Rd, Vd in zip(R, params.V):
        T += Rd @ Vd
    if block == "U":
        return T * params.W
    if block == "W":
        g = T * params.U
        if r is not None:
            g = g + np.outer(r, params.beta[:K])
        return g
    raise ValueError(f"unknown block {block!r}; expected one of {BLOCKS}")


def grad(views, outcome, params, weights, block):
    """Gradient of :func:`loss_smooth` with respect to one parameter block.

    ``block`` is one of ``"U"``, ``"V"``, ``"W"``, ``"mu"``, ``"beta"``. For
    ``V`` and ``mu`` a list with one array per view is returned.
    """
    weights = _weights(weights)
    _, R, r = forward(views, outcome, params, weights.rho)
    xe = None if outcome is None else outcome.covariates
    g = block_gradient(block, params, R, r, xe)
    _check_finite(np.concatenate([np.ravel(a) for a in g]) if isinstance(g, list) else g,
                  f"gradient for block {block}")
    return g
