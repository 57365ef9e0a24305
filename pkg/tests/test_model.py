import numpy as np
import pytest

from conftest import random_instance
from supbiclust.exceptions import InvalidDataError, ShapeError
from supbiclust.expfam import BERNOULLI, GAUSSIAN, POISSON
from supbiclust.model import (ModelParams, OutcomeSpec, ViewMatrix, apply_non_overlapping,
                              check_views, hard_assign, natural_param_outcome,
                              variable_membership)


def test_view_validation_and_immutability():
    v = ViewMatrix([[1.0, 0.0], [0.0, 1.0]], "bernoulli", "b")
    assert v.family == BERNOULLI and v.n == 2 and v.p == 2
    with pytest.raises(ValueError):
        v.data[0, 0] = 5.0
    with pytest.raises(InvalidDataError):
        ViewMatrix([[0.5]], BERNOULLI)
    with pytest.raises(InvalidDataError):
        ViewMatrix([[-1.0]], POISSON)
    with pytest.raises(ShapeError):
        ViewMatrix(np.zeros((0, 3)), GAUSSIAN)
    with pytest.raises(ShapeError):
        ViewMatrix(np.zeros((2, 2)), GAUSSIAN, variable_names=("a",))


def test_outcome_validation():
    o = OutcomeSpec([0, 1, 1], "bernoulli", covariates=[1.0, 2.0, 3.0])
    assert o.n_covariates == 1 and o.covariates.shape == (3, 1)
    with pytest.raises(InvalidDataError):
        OutcomeSpec([0, 2], BERNOULLI)
    with pytest.raises(ShapeError):
        OutcomeSpec([0.0, 1.0], GAUSSIAN, covariates=np.zeros((3, 1)))
    with pytest.raises(InvalidDataError):
        OutcomeSpec([0.0], "negbin:3")


def test_check_views_sample_mismatch():
    with pytest.raises(ShapeError):
        check_views([ViewMatrix(np.zeros((2, 2)), GAUSSIAN), ViewMatrix(np.zeros((3, 2)), GAUSSIAN)])
    with pytest.raises(ShapeError):
        check_views([])


def test_params_check_shapes():
    views, outcome, params = random_instance(0, ("gaussian", "gaussian"), "gaussian")
    params.check(views, 0)
    bad = params.copy()
    bad.W = bad.W[:, :2]
    with pytest.raises(ShapeError):
        bad.check()
    bad = params.copy()
    bad.beta = np.zeros(5)
    with pytest.raises(ShapeError):
        bad.check(views, 0)


def test_outcome_natural_parameter_with_covariates():
    W = np.array([[1.0, 0.0], [0.5, 0.5]])
    p = ModelParams(U=np.ones((2, 2)), V=[np.ones((1, 2))], W=W, mu=[np.zeros(1)],
                    beta=np.array([1.0, -1.0, 2.0]))
    xe = np.array([[1.0], [3.0]])
    assert np.allclose(natural_param_outcome(p, xe), [3.0, 6.0])


def test_hard_assign_ties_go_to_lowest():
    W = np.array([[0.5, 0.5, 0.0], [0.1, 0.2, 0.7]])
    assert hard_assign(W).tolist() == [1, 3]


def test_membership_rules():
    V = [np.array([[0.0, 0.0], [1.0, -2.0], [3.0, 0.0]])]
    assert [m.tolist() for m in variable_membership(V, False)[0]] == [[1, 2], [1]]
    assert [m.tolist() for m in variable_membership(V, True)[0]] == [[2], [1]]
    zeroed = apply_non_overlapping(V)[0]
    assert np.array_equal(zeroed, [[0, 0], [0, -2], [3, 0]])


def test_non_overlapping_variables_appear_once():
    rng = np.random.default_rng(0)
    V = [rng.normal(size=(20, 4)) * (rng.random((20, 4)) < 0.5)]
    members = variable_membership(V, True)[0]
    flat = np.concatenate(members)
    assert len(flat) == len(set(flat.tolist()))
