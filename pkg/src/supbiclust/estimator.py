"""scikit-learn style wrapper around fit, selection and prediction."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import ShapeError
from .expfam import get_family
from .fit import FitConfig
from .model import OutcomeSpec, ViewMatrix
from .predict import predict
from .selection import SearchSpace
from .workflow import run_fit

__all__ = ["SupervisedBiclustering"]


class SupervisedBiclustering(TransformerMixin, BaseEstimator):
    """Supervised multi-view biclustering.

    ``X`` is either a list of per-view arrays or one array whose columns
    are split according to ``view_sizes``. ``transform`` returns the soft
    bicluster weights of new samples and ``predict`` their mean-scale
    outcome.

    Parameters
    ----------
    n_biclusters : int or "auto"
        Number of biclusters; "auto" searches ``k_range`` with the
        empty-bicluster rule.
    view_sizes : sequence of int, optional
        Column counts of the views when ``X`` is a single array.
    view_families : str or sequence of str
    outcome_family : str
    lambdas : float or sequence
        L1 penalty per view, used when ``lambda_grid`` is None.
    lambda_grid : sequence of float, optional
        Shared candidate penalties scored by the information criterion.
    alpha, tol, max_iter, rho, non_overlapping, block_scaling
        See :class:`~supbiclust.fit.FitConfig`.
    k_range : (int, int)
    ic_form : {"neg2loglik", "log_loss"}
    random_state : int
    """

    def __init__(self, n_biclusters=3, view_sizes=None, view_families="gaussian",
                 outcome_family="gaussian", lambdas=0.0, lambda_grid=None, alpha=1.0,
                 tol=1e-5, max_iter=2000, rho=0.95, non_overlapping=True,
                 block_scaling="curvature", k_range=(1, 6), ic_form="neg2loglik",
                 random_state=0):
        self.n_biclusters = n_biclusters
        self.view_sizes = view_sizes
        self.view_families = view_families
        self.outcome_family = outcome_family
        self.lambdas = lambdas
        self.lambda_grid = lambda_grid
        self.alpha = alpha
        self.tol = tol
        self.max_iter = max_iter
        self.rho = rho
        self.non_overlapping = non_overlapping
        self.block_scaling = block_scaling
        self.k_range = k_range
        self.ic_form = ic_form
        self.random_state = random_state

    def _split(self, X, reset):
        if isinstance(X, (list, tuple)):
            blocks = [check_array(x, dtype=float) for x in X]
        else:
            X = check_array(X, dtype=float)
            sizes = [X.shape[1]] if self.view_sizes is None else list(self.view_sizes)
            if sum(sizes) != X.shape[1]:
                raise ShapeError(f"view_sizes sum to {sum(sizes)}, X has {X.shape[1]} columns")
            blocks = np.split(X, np.cumsum(sizes)[:-1], axis=1)
        fams = self.view_families
        fams = [fams] * len(blocks) if isinstance(fams, str) else list(fams)
        if len(fams) != len(blocks):
            raise ShapeError(f"{len(blocks)} views but {len(fams)} families")
        sizes = [b.shape[1] for b in blocks]
        if reset:
            self.view_sizes_ = sizes
            self.n_features_in_ = sum(sizes)
        elif sizes != self.view_sizes_:
            raise ShapeError(f"views have {sizes} columns, the model expects {self.view_sizes_}")
        return [ViewMatrix(b, get_family(f), f"view{d + 1}")
                for d, (b, f) in enumerate(zip(blocks, fams))]

    def fit(self, X, y=None, covariates=None):
        views = self._split(X, reset=True)
        outcome = None if y is None else OutcomeSpec(y, self.outcome_family, covariates)
        auto = isinstance(self.n_biclusters, str) and self.n_biclusters == "auto"
        config = FitConfig(K=1 if auto else self.n_biclusters, alpha=self.alpha, tol=self.tol,
                           max_iter=self.max_iter, rho=self.rho, lambdas=self.lambdas,
                           non_overlapping=self.non_overlapping, seed=self.random_state,
                           block_scaling=self.block_scaling)
        space = None
        if self.lambda_grid is not None or auto:
            grid = (self.lambda_grid if self.lambda_grid is not None
                    else [float(np.max(self.lambdas))])
            k_range = tuple(self.k_range) if auto else (config.K, config.K)
            space = SearchSpace.shared(grid, len(views), ic_form=self.ic_form,
                                       k_range=k_range)
        run = run_fit(views, outcome, config, space)
        self.run_ = run
        self.result_ = run.result
        self.n_biclusters_ = run.result.K
        self.labels_ = run.result.assignments
        self.weights_ = run.result.params.W
        self.coef_ = run.result.beta_hat
        self.components_ = run.result.reported_V()
        self.variable_members_ = run.result.variable_members
        return self

    def transform(self, X, covariates=None):
        """Soft bicluster weights of new samples."""
        return self._predict(X, covariates).W_new

    def predict(self, X, covariates=None):
        """Mean-scale outcome prediction for new samples."""
        check_is_fitted(self, "result_")
        if self.result_.outcome_family is None:
            raise ShapeError("the model was fitted without an outcome")
        return self._predict(X, covariates).y_hat

    def predict_labels(self, X):
        """1-based hard bicluster assignments of new samples."""
        return self._predict(X, None, need_cov=False).assignments

    def _predict(self, X, covariates, need_cov=True):
        check_is_fitted(self, "result_")
        views = self._split(X, reset=False)
        n_cov = self.coef_.shape[0] - self.n_biclusters_
        if n_cov and covariates is None and not need_cov:
            covariates = np.zeros((views[0].n, n_cov))
        return predict(views, self.result_, covariates=covariates)
