"""Synthetic multi-view data with planted, outcome-associated biclusters.

Views are Gaussian with natural parameters
``1 mu^T + (U * W) S (V * Gamma)^T``; the outcome has natural parameter
``W beta``. The test split reuses ``mu``, ``V`` and ``Gamma`` and draws a
fresh pair ``(U, W)``.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError
from .expfam import BERNOULLI, GAUSSIAN, get_family
from .model import OutcomeSpec, ViewMatrix

__all__ = ["SimConfig", "Truth", "SimBundle", "assign_gamma", "generate",
           "default_beta"]

_MAX_REDRAWS = 1000


def default_beta(outcome_family):
    return (1.5, 0.0, -1.5) if get_family(outcome_family).name == "bernoulli" else (1.0, -1.0, -5.0)


@dataclass(frozen=True)
class SimConfig:
    n: int = 150
    p: int = 100
    D: int = 2
    K: int = 3
    S: tuple = (27.0, 15.0, 10.0)
    important_frac: float = 0.10
    sigma2_x: float = 1.0
    outcome_family: str = "gaussian"
    beta_true: tuple | None = None
    seed: int = 0
    min_group_size: int = 2
    sigma2_y: float = 1.0

    def __post_init__(self):
        for name in ("n", "p", "D", "K"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value}")
        fam = get_family(self.outcome_family)
        if fam not in (GAUSSIAN, BERNOULLI):
            raise ConfigError("simulated outcomes are gaussian or bernoulli")
        object.__setattr__(self, "outcome_family", fam.name)
        if len(self.S) != self.K:
            raise ConfigError(f"S needs {self.K} entries, got {len(self.S)}")
        beta = self.beta_true
        if beta is None:
            if self.K != 3:
                raise ConfigError("beta_true must be given when K != 3")
            beta = default_beta(fam)
        if len(beta) != self.K:
            raise ConfigError(f"beta_true needs {self.K} entries, got {len(beta)}")
        object.__setattr__(self, "beta_true", tuple(float(b) for b in beta))
        object.__setattr__(self, "S", tuple(float(s) for s in self.S))
        if not 0.0 < self.important_frac <= 1.0:
            raise ConfigError("important_frac must lie in (0, 1]")
        if self.l < 1:
            raise ConfigError("important_frac * p must give at least one variable")
        if self.K * self.l > self.p:
            raise ConfigError(f"K * l = {self.K * self.l} important variables exceed p = {self.p}")
        if self.sigma2_x < 0 or self.sigma2_y < 0:
            raise ConfigError("noise variances must be non-negative")
        if self.K * self.min_group_size > self.n:
            raise ConfigError("n too small for the minimum group size")

    @property
    def l(self):
        """Important variables per bicluster and view."""
        return int(np.floor(self.important_frac * self.p + 1e-9))


@dataclass
class Truth:
    """Ground-truth memberships: 1-based sample labels and variable sets."""

    labels: np.ndarray
    variables: list
    K: int

    def sample_members(self):
        return [np.flatnonzero(self.labels == k + 1) for k in range(self.K)]


@dataclass
class SimBundle:
    train_views: list
    train_outcome: OutcomeSpec
    truth: Truth
    test_views: list
    test_outcome: OutcomeSpec
    test_truth: Truth
    params: dict = field(default_factory=dict)


def assign_gamma(p, K, l, rng):
    """Binary ``p x K`` variable-cluster indicator with disjoint columns of ``l`` ones."""
    if K * l > p or l < 0:
        raise ConfigError(f"cannot place {K} disjoint groups of {l} among {p} variables")
    order = rng.permutation(p)
    gamma = np.zeros((p, K))
    for k in range(K):
        gamma[order[k * l:(k + 1) * l], k] = 1.0
    return gamma


def _draw_labels(rng, n, K, min_size):
    for _ in range(_MAX_REDRAWS):
        labels = rng.integers(0, K, size=n)
        if np.bincount(labels, minlength=K).min() >= min_size:
            return labels
    raise ConfigError("could not draw group labels with the requested minimum size")


def _draw_outcome(rng, cfg, labels):
    beta = np.asarray(cfg.beta_true)
    psi_y = beta[labels]
    if cfg.outcome_family == "gaussian":
        return psi_y + np.sqrt(cfg.sigma2_y) * rng.standard_normal(psi_y.shape[0])
    prob = 1.0 / (1.0 + np.exp(-psi_y))
    y = None
    for _ in range(_MAX_REDRAWS):
        y = (rng.random(psi_y.shape[0]) < prob).astype(float)
        balanced = all(0 < y[labels == k].sum() < np.sum(labels == k)
                       for k in range(cfg.K))
        if balanced:
            break
    return y


def _split(rng, cfg, mu, V, gamma, names):
    labels = _draw_labels(rng, cfg.n, cfg.K, cfg.min_group_size)
    W = np.eye(cfg.K)[labels]
    U = rng.uniform(0.5, 1.0, size=(cfg.n, cfg.K))
    UWS = (U * W) * np.asarray(cfg.S)[None, :]
    views = []
    for d in range(cfg.D):
        psi = mu[d][None, :] + UWS @ (V[d] * gamma[d]).T
        x = psi + np.sqrt(cfg.sigma2_x) * rng.standard_normal(psi.shape)
        views.append(ViewMatrix(x, GAUSSIAN, names[d]))
    y = _draw_outcome(rng, cfg, labels)
    truth = Truth(labels + 1, [[np.flatnonzero(g[:, k]) for k in range(cfg.K)]
                               for g in gamma], cfg.K)
    return views, OutcomeSpec(y, cfg.outcome_family), truth, U, W


def generate(config):
    """Draw a train/test pair of multi-view datasets with known biclusters."""
    cfg = config
    rng = np.random.default_rng(cfg.seed)
    names = [f"view{d + 1}" for d in range(cfg.D)]
    mu = [rng.standard_normal(cfg.p) for _ in range(cfg.D)]
    V = [rng.uniform(0.5, 1.0, size=(cfg.p, cfg.K)) for _ in range(cfg.D)]
    gamma = [assign_gamma(cfg.p, cfg.K, cfg.l, rng) for _ in range(cfg.D)]
    train_views, train_y, truth, U, W = _split(rng, cfg, mu, V, gamma, names)
    test_views, test_y, test_truth, U_t, W_t = _split(rng, cfg, mu, V, gamma, names)
    return SimBundle(train_views, train_y, truth, test_views, test_y, test_truth,
                     params={"mu": mu, "V": V, "gamma": gamma, "U": U, "W": W,
                             "U_test": U_t, "W_test": W_t})
