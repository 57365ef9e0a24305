import numpy as np
import pytest

from supbiclust.exceptions import InvalidDataError, ShapeError
from supbiclust.expfam import BERNOULLI
from supbiclust.fit import FitConfig, fit
from supbiclust.model import OutcomeSpec, ViewMatrix
from supbiclust.predict import align_by_beta, predict, predict_outcome
from supbiclust.simulation import SimConfig, generate


@pytest.fixture(scope="module")
def gauss():
    b = generate(SimConfig(seed=1))
    r = fit(b.train_views, b.train_outcome, FitConfig(K=3, lambdas=4e-4, tol=1e-6))
    return b, r


@pytest.fixture(scope="module")
def bern():
    b = generate(SimConfig(seed=2, outcome_family="bernoulli"))
    r = fit(b.train_views, b.train_outcome, FitConfig(K=3, lambdas=4e-4, max_iter=500))
    return b, r


def test_invariants_on_test_split(gauss):
    b, r = gauss
    out = predict(b.test_views, r)
    assert np.allclose(np.linalg.norm(out.U_new, axis=0), 1.0, atol=1e-8)
    assert np.all(out.W_new >= 0) and np.allclose(out.W_new.sum(axis=1), 1.0)
    assert out.assignments.shape == (150,) and set(out.assignments) <= {1, 2, 3}
    assert out.y_hat.shape == (150,)


def test_training_fixed_point(gauss):
    b, r = gauss
    out = predict(b.train_views, r, init=(r.params.U, r.params.W), max_iter=50)
    # the fit stops on a loss tolerance, so it is close to but not exactly stationary
    assert np.mean(out.assignments == r.assignments) >= 0.98
    assert np.max(np.abs(out.W_new - r.params.W)) < 0.1


def test_loss_non_increasing_small_step(gauss):
    b, r = gauss
    out = predict(b.test_views, r, alpha=1e-3, max_iter=100, tol=0.0)
    assert np.all(np.diff(out.loss_trace) <= 1e-9)


def test_bernoulli_probabilities(bern):
    b, r = bern
    out = predict(b.test_views, r)
    assert np.all((out.y_hat > 0) & (out.y_hat < 1))
    psi, y = predict_outcome(r, out.W_new)
    assert np.allclose(y, 1 / (1 + np.exp(-psi)))


def test_prediction_ignores_outcome(gauss):
    b, r = gauss
    a = predict(b.test_views, r)
    r2 = fit(b.train_views, None, FitConfig(K=3, lambdas=4e-4, tol=1e-6))
    # swap in an outcome-free fit's weights: new-sample scores depend only on the views
    r2.params.mu, r2.params.V = r.params.mu, r.params.V
    r2.beta_hat = r.beta_hat
    r2.outcome_family = r.outcome_family
    c = predict(b.test_views, r2)
    assert np.array_equal(a.W_new, c.W_new)


def test_shape_and_family_mismatch(gauss):
    b, r = gauss
    with pytest.raises(ShapeError):
        predict(b.test_views[:1], r)
    with pytest.raises(ShapeError):
        predict([b.test_views[0], ViewMatrix(b.test_views[1].data[:, :50], "gaussian")], r)
    binary = ViewMatrix((b.test_views[1].data > 0).astype(float), BERNOULLI)
    with pytest.raises(InvalidDataError):
        predict([b.test_views[0], binary], r)
    with pytest.raises(ShapeError):
        predict(b.test_views, r, init=(np.ones((3, 3)), np.ones((3, 3))))


def test_covariates_required_and_used():
    b = generate(SimConfig(seed=3, n=60, p=40, important_frac=0.25))
    rng = np.random.default_rng(0)
    xe = rng.normal(size=(60, 1))
    y = b.train_outcome.y + 2.0 * xe[:, 0]
    r = fit(b.train_views, OutcomeSpec(y, "gaussian", xe), FitConfig(K=3, lambdas=1e-3,
                                                                    max_iter=300))
    assert r.beta_hat.shape == (4,)
    # the refit is ordinary least squares on the final weights and covariate
    ref = np.linalg.lstsq(np.hstack([r.params.W, xe]), y, rcond=None)[0]
    assert np.allclose(r.beta_hat, ref, atol=1e-8)
    with pytest.raises(ShapeError):
        predict(b.test_views, r)
    out = predict(b.test_views, r, covariates=np.zeros((60, 1)))
    out2 = predict(b.test_views, r, covariates=np.ones((60, 1)))
    assert np.allclose(out2.y_hat - out.y_hat, r.beta_hat[3])


def test_align_by_beta():
    perm = align_by_beta([1.0, -1.0, -5.0], [-4.8, 0.9, -1.2])
    assert perm.tolist() == [1, 2, 0]
    with pytest.raises(ShapeError):
        align_by_beta([1.0], [1.0, 2.0])


def test_warm_start_recovers_training_assignments(gauss):
    b, r = gauss
    out = predict(b.train_views, r)
    assert out.converged
    assert np.array_equal(out.assignments, r.assignments)
