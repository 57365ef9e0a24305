import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from oracles import adjusted_partition_equal
from supbiclust import SupervisedBiclustering
from supbiclust.exceptions import ShapeError
from supbiclust.fit import FitConfig, fit
from supbiclust.predict import predict
from supbiclust.simulation import SimConfig, generate


@pytest.fixture(scope="module")
def data():
    return generate(SimConfig(seed=0, n=80, p=40, important_frac=0.25))


def _stack(views):
    return np.hstack([v.data for v in views])


def test_params_and_clone():
    est = SupervisedBiclustering(n_biclusters=2, lambdas=1e-3, view_sizes=(5, 5))
    params = est.get_params()
    assert params["n_biclusters"] == 2 and params["view_sizes"] == (5, 5)
    est.set_params(alpha=0.2)
    c = clone(est)
    assert c.get_params() == est.get_params() and c is not est


def test_not_fitted():
    with pytest.raises(NotFittedError):
        SupervisedBiclustering().transform(np.zeros((2, 2)))


def test_matches_functional_api(data):
    est = SupervisedBiclustering(n_biclusters=3, view_sizes=(40, 40), lambdas=1e-3,
                                 max_iter=300, random_state=4)
    est.fit(_stack(data.train_views), data.train_outcome.y)
    ref = fit(data.train_views, data.train_outcome, FitConfig(K=3, lambdas=1e-3, max_iter=300,
                                                              seed=4))
    assert np.array_equal(est.labels_, ref.assignments)
    assert np.array_equal(est.coef_, ref.beta_hat)
    assert est.n_features_in_ == 80 and est.view_sizes_ == [40, 40]
    # list input is equivalent to the stacked array
    est2 = clone(est).set_params(view_sizes=None).fit([v.data for v in data.train_views],
                                                      data.train_outcome.y)
    assert np.array_equal(est2.weights_, est.weights_)

    W = est.transform(_stack(data.test_views))
    assert np.array_equal(W, predict(data.test_views, ref).W_new)
    y = est.predict(_stack(data.test_views))
    assert y.shape == (80,)
    assert adjusted_partition_equal(est.predict_labels(_stack(data.test_views)), W.argmax(1) + 1)
    # reported loadings keep one bicluster per variable
    for V in est.components_:
        assert np.all(np.count_nonzero(V, axis=1) <= 1)


def test_shape_errors(data):
    est = SupervisedBiclustering(view_sizes=(40, 40), max_iter=20, lambdas=1e-3)
    with pytest.raises(ShapeError):
        est.fit(np.zeros((10, 79)))
    est.fit(_stack(data.train_views))
    with pytest.raises(ShapeError):
        est.transform([data.test_views[0].data])
    with pytest.raises(ShapeError):
        est.predict(_stack(data.test_views))


def test_auto_k(data):
    est = SupervisedBiclustering(n_biclusters="auto", view_sizes=(40, 40), lambdas=1e-3,
                                 k_range=(2, 5), tol=1e-6)
    est.fit(_stack(data.train_views), data.train_outcome.y)
    assert est.run_.k_selection == "search"
    assert est.n_biclusters_ == 3
