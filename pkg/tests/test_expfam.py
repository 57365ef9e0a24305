import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from supbiclust.exceptions import InvalidDataError, InvalidFamilyError
from supbiclust.expfam import (BERNOULLI, GAUSSIAN, POISSON, Family, check_support, cumulant,
                               get_family, init_transform, mean_link, negbin_init, nll_entry,
                               variance_fn)

finite = st.floats(-30, 30, allow_nan=False)


def test_get_family_parsing():
    assert get_family("Gaussian") == GAUSSIAN
    assert get_family("binary") == BERNOULLI
    assert get_family("count") == POISSON
    assert get_family("negbin:5") == negbin_init(5)
    assert str(negbin_init(5)) == "negbin:5"
    with pytest.raises(InvalidFamilyError):
        get_family("gamma")
    with pytest.raises(InvalidFamilyError):
        get_family("negbin")
    with pytest.raises(InvalidFamilyError):
        get_family("gaussian:2")
    with pytest.raises(InvalidFamilyError):
        Family("negbin", 0)


def test_cumulant_known_values():
    assert cumulant(GAUSSIAN, 2.0) == 2.0
    assert cumulant(BERNOULLI, 0.0) == pytest.approx(math.log(2.0))
    assert cumulant(POISSON, 0.0) == 1.0


def test_bernoulli_cumulant_is_stable_for_large_arguments():
    # log(1 + e^t) ~ t for large t, ~ e^t for very negative t
    assert cumulant(BERNOULLI, 800.0) == pytest.approx(800.0)
    assert cumulant(BERNOULLI, -800.0) == pytest.approx(0.0, abs=1e-300)
    assert np.isfinite(mean_link(BERNOULLI, np.array([-800.0, 800.0]))).all()


@pytest.mark.parametrize("fam", [GAUSSIAN, BERNOULLI, POISSON])
@given(t=st.floats(-10, 10))
def test_mean_and_variance_are_cumulant_derivatives(fam, t):
    h = 1e-5
    d1 = (cumulant(fam, t + h) - cumulant(fam, t - h)) / (2 * h)
    d2 = (mean_link(fam, t + h) - mean_link(fam, t - h)) / (2 * h)
    assert mean_link(fam, t) == pytest.approx(d1, rel=1e-6, abs=1e-8)
    assert variance_fn(fam, t) == pytest.approx(d2, rel=1e-6, abs=1e-8)


@given(t=st.floats(-15, 15))
def test_bernoulli_nll_matches_scipy(t):
    # -x t + G(t) equals the log-likelihood with the canonical logit link
    p = 1.0 / (1.0 + math.exp(-t))
    for x in (0.0, 1.0):
        ref = -stats.bernoulli.logpmf(x, p)
        assert nll_entry(BERNOULLI, x, t) == pytest.approx(ref, rel=1e-6, abs=1e-9)


@given(t=st.floats(-5, 5), x=st.integers(0, 30))
def test_poisson_nll_matches_scipy_up_to_constant(t, x):
    ref = -stats.poisson.logpmf(x, math.exp(t)) - math.lgamma(x + 1)
    assert nll_entry(POISSON, float(x), t) == pytest.approx(ref, rel=1e-8, abs=1e-8)


@given(t=finite, x=finite)
def test_gaussian_nll_matches_squared_error_up_to_constant(t, x):
    assert nll_entry(GAUSSIAN, x, t) == pytest.approx(0.5 * (x - t) ** 2 - 0.5 * x * x,
                                                      rel=1e-9, abs=1e-9)


def test_init_transform_values():
    assert init_transform(BERNOULLI, 1.0) == pytest.approx(math.log(2.0))
    assert init_transform(BERNOULLI, 0.0) == pytest.approx(math.log(0.5))
    assert init_transform(POISSON, np.array([0.0, 3.0])) == pytest.approx([0.0, math.log(4.0)])
    r = 4
    assert init_transform(negbin_init(r), 2.0) == pytest.approx(
        math.log((3 / 8) / (1 - 3 / 8)))
    x = np.array([[1.5, -2.0]])
    assert np.array_equal(init_transform(GAUSSIAN, x), x)


def test_negbin_has_no_likelihood():
    with pytest.raises(InvalidFamilyError):
        cumulant(negbin_init(3), 0.0)
    with pytest.raises(InvalidFamilyError):
        nll_entry(negbin_init(3), 1.0, 0.0)


@pytest.mark.parametrize("fam,bad", [(BERNOULLI, 0.5), (BERNOULLI, 2.0), (POISSON, -1.0),
                                     (POISSON, 1.5), (GAUSSIAN, np.nan), (GAUSSIAN, np.inf)])
def test_support_violations(fam, bad):
    with pytest.raises(InvalidDataError):
        check_support(fam, np.array([0.0, bad]))


@given(st.lists(st.floats(-20, 20), min_size=1, max_size=10))
def test_cumulant_convex(ts):
    # midpoint convexity on random pairs
    ts = np.array(ts)
    for fam in (GAUSSIAN, BERNOULLI, POISSON):
        a, b = ts, ts[::-1]
        mid = cumulant(fam, (a + b) / 2)
        assert np.all(mid <= (cumulant(fam, a) + cumulant(fam, b)) / 2 + 1e-9 * (1 + np.abs(mid)))
