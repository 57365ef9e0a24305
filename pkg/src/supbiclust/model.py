"""Data containers and the maps from parameters to natural parameters."""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidDataError, ShapeError
from .expfam import Family, check_support, get_family

__all__ = [
    "ViewMatrix",
    "OutcomeSpec",
    "ModelParams",
    "BiclusterResult",
    "natural_params_view",
    "natural_param_outcome",
    "hard_assign",
    "variable_membership",
    "apply_non_overlapping",
    "check_views",
]


@dataclass(frozen=True)
class ViewMatrix:
    """One data view: ``n`` samples by ``p`` variables with a family tag."""

    data: np.ndarray
    family: Family
    name: str = "view"
    variable_names: tuple | None = None

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.ndim != 2 or data.shape[0] == 0 or data.shape[1] == 0:
            raise ShapeError(f"view {self.name!r} must be a non-empty 2-d matrix")
        family = get_family(self.family)
        check_support(family, data, what=f"view {self.name!r}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "family", family)
        if self.variable_names is not None:
            names = tuple(str(v) for v in self.variable_names)
            if len(names) != data.shape[1]:
                raise ShapeError(f"view {self.name!r}: {len(names)} variable names "
                                 f"for {data.shape[1]} columns")
            object.__setattr__(self, "variable_names", names)

    @property
    def n(self):
        return self.data.shape[0]

    @property
    def p(self):
        return self.data.shape[1]


@dataclass(frozen=True)
class OutcomeSpec:
    """Outcome vector ``y`` with its family and optional covariates ``X_E``."""

    y: np.ndarray
    family: Family
    covariates: np.ndarray | None = None

    def __post_init__(self):
        y = np.array(self.y, dtype=float).ravel()
        family = get_family(self.family)
        if not family.has_likelihood:
            raise InvalidDataError(f"outcome family {family} has no likelihood")
        check_support(family, y, what="outcome")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "family", family)
        if self.covariates is not None:
            xe = np.array(self.covariates, dtype=float)
            if xe.ndim == 1:
                xe = xe[:, None]
            if xe.ndim != 2 or xe.shape[0] != y.shape[0]:
                raise ShapeError("covariates must have one row per outcome entry")
            if not np.all(np.isfinite(xe)):
                raise InvalidDataError("covariates contain non-finite values")
            xe.setflags(write=False)
            object.__setattr__(self, "covariates", xe)

    @property
    def n(self):
        return self.y.shape[0]

    @property
    def n_covariates(self):
        return 0 if self.covariates is None else self.covariates.shape[1]


@dataclass
class ModelParams:
    """Parameter bundle (U, V per view, W, mu per view, beta).

    ``beta`` holds the K bicluster effects followed by any covariate
    effects.
    """

    U: np.ndarray
    V: list
    W: np.ndarray
    mu: list
    beta: np.ndarray

    @property
    def K(self):
        return self.U.shape[1]

    @property
    def n(self):
        return self.U.shape[0]

    def copy(self):
        return ModelParams(self.U.copy(), [v.copy() for v in self.V], self.W.copy(),
                           [m.copy() for m in self.mu], self.beta.copy())

    def check(self, views=None, n_covariates=0):
        n, K = self.U.shape
        if self.W.shape != (n, K):
            raise ShapeError(f"W has shape {self.W.shape}, expected {(n, K)}")
        if len(self.V) != len(self.mu):
            raise ShapeError("V and mu must have one entry per view")
        for d, (V, mu) in enumerate(zip(self.V, self.mu)):
            if V.ndim != 2 or V.shape[1] != K:
                raise ShapeError(f"V[{d}] must have {K} columns")
            if mu.shape != (V.shape[0],):
                raise ShapeError(f"mu[{d}] must have length {V.shape[0]}")
        if self.beta.shape != (K + n_covariates,):
            raise ShapeError(f"beta has length {self.beta.shape[0]}, "
                             f"expected {K + n_covariates}")
        if views is not None:
            if len(views) != len(self.V):
                raise ShapeError(f"{len(views)} views for {len(self.V)} loading matrices")
            for view, V in zip(views, self.V):
                if view.n != n or view.p != V.shape[0]:
                    raise ShapeError(f"view {view.name!r} has shape {view.data.shape}, "
                                     f"parameters imply {(n, V.shape[0])}")
        return self


@dataclass
class BiclusterResult:
    """Outcome of a single fit.

    ``assignments`` are 1-based bicluster labels; ``variable_members[d][k]``
    lists the (0-based) variable indices of view ``d`` in bicluster
    ``k + 1``.
    """

    assignments: np.ndarray
    variable_members: list
    params: ModelParams
    beta_hat: np.ndarray
    loss_trace: np.ndarray
    converged: bool
    iterations: int
    stop_reason: str
    non_overlapping: bool = True
    separation: bool = False
    view_names: tuple = ()
    families: tuple = ()
    outcome_family: Family | None = None
    extra: dict = field(default_factory=dict)

    @property
    def K(self):
        return self.params.K

    def empty_biclusters(self):
        """1-based labels of biclusters with no sample or no variable."""
        K = self.K
        counts = np.bincount(self.assignments - 1, minlength=K)
        no_vars = [all(len(members[k]) == 0 for members in self.variable_members)
                   for k in range(K)]
        return [k + 1 for k in range(K) if counts[k] == 0 or no_vars[k]]

    def reported_V(self):
        """Loadings as reported: only each variable's member entries survive.

        Under the non-overlapping reading every entry outside a row's
        largest-magnitude position is zeroed. The fitted ``params.V`` is left
        untouched because prediction needs the full loadings.
        """
        if self.non_overlapping:
            return apply_non_overlapping(self.params.V)
        return [V.copy() for V in self.params.V]

    def n_selected(self):
        """Number of variables (over all views) belonging to some bicluster."""
        return int(sum(len(np.unique(np.concatenate(members))) if members else 0
                       for members in self.variable_members))


def check_views(views):
    """Validate a list of ViewMatrix objects sharing the sample dimension."""
    views = list(views)
    if not views:
        raise ShapeError("at least one view is required")
    n = views[0].n
    for view in views:
        if view.n != n:
            raise ShapeError(f"view {view.name!r} has {view.n} samples, expected {n}")
    return views


def natural_params_view(params, d):
    """Natural parameters of view ``d``: ``1 mu^T + (U * W) V^T``."""
    U, W = params.U, params.W
    if U.shape != W.shape:
        raise ShapeError("U and W must share a shape")
    V, mu = params.V[d], params.mu[d]
    if V.shape[1] != U.shape[1] or mu.shape[0] != V.shape[0]:
        raise ShapeError(f"inconsistent parameter shapes for view {d}")
    return mu[None, :] + (U * W) @ V.T


def outcome_design(W, covariates=None):
    """Design matrix ``[W | X_E]`` for the outcome model."""
    if covariates is None:
        return W
    return np.hstack([W, covariates])


def natural_param_outcome(params, spec):
    """Outcome natural parameter ``W beta + X_E beta_E``."""
    xe = spec.covariates if isinstance(spec, OutcomeSpec) else spec
    A = outcome_design(params.W, xe)
    if A.shape[1] != params.beta.shape[0]:
        raise ShapeError(f"beta has length {params.beta.shape[0]}, "
                         f"design has {A.shape[1]} columns")
    if A.shape[0] != params.W.shape[0]:
        raise ShapeError("covariates and W disagree on the number of samples")
    return A @ params.beta


def hard_assign(W):
    """1-based argmax of each row of ``W``; ties go to the lowest column."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[1] == 0:
        raise ShapeError("W must be a 2-d matrix with at least one column")
    return np.argmax(W, axis=1) + 1


def variable_membership(V, non_overlapping):
    """Variable memberships read off the loading matrices.

    Parameters
    ----------
    V : list of ndarray
        One ``p_d x K`` loading matrix per view.
    non_overlapping : bool
        If True a variable joins only the bicluster of its largest absolute
        loading (lowest index on ties); otherwise every non-zero loading
        counts.

    Returns
    -------
    list of list of ndarray
        ``members[d][k]`` holds sorted 0-based variable indices.
    """
    members = []
    for Vd in V:
        Vd = np.asarray(Vd, dtype=float)
        K = Vd.shape[1]
        if non_overlapping:
            absV = np.abs(Vd)
            best = np.argmax(absV, axis=1)
            keep = absV[np.arange(Vd.shape[0]), best] > 0
            members.append([np.flatnonzero(keep & (best == k)) for k in range(K)])
        else:
            members.append([np.flatnonzero(Vd[:, k] != 0) for k in range(K)])
    return members


def apply_non_overlapping(V):
    """Zero every loading except each row's maximum-magnitude entry."""
    out = []
    for Vd in V:
        Vd = np.asarray(Vd, dtype=float)
        best = np.argmax(np.abs(Vd), axis=1)
        mask = np.zeros_like(Vd, dtype=bool)
        mask[np.arange(Vd.shape[0]), best] = True
        out.append(np.where(mask, Vd, 0.0))
    return out
