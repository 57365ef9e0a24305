import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from supbiclust.exceptions import ConfigError, SearchFailure, SelectionError
from supbiclust.fit import FitConfig, fit
from supbiclust.model import BiclusterResult, ModelParams, variable_membership
from supbiclust.selection import (LOG_GUARD, SearchSpace, bic, ebic, information_loss,
                                  is_empty, random_search, select_k)
from supbiclust.simulation import SimConfig, generate
from supbiclust.workflow import default_lambda_grid


@pytest.fixture(scope="module")
def bundle():
    return generate(SimConfig(seed=0))


@pytest.fixture(scope="module")
def base_fit(bundle):
    return fit(bundle.train_views, bundle.train_outcome, FitConfig(K=3, lambdas=4e-4,
                                                                  max_iter=300))


def _fake_result(V, n=150):
    K = V[0].shape[1]
    params = ModelParams(U=np.ones((n, K)), V=V, W=np.full((n, K), 1.0 / K),
                         mu=[np.zeros(v.shape[0]) for v in V], beta=np.zeros(K))
    return BiclusterResult(assignments=np.ones(n, int),
                           variable_members=variable_membership(V, True), params=params,
                           beta_hat=np.zeros(K), loss_trace=np.array([0.0]), converged=True,
                           iterations=1, stop_reason="tolerance")


def test_bic_plugin_arithmetic(monkeypatch, bundle):
    V = [np.zeros((100, 3)), np.zeros((100, 3))]
    V[0][:30, 0] = 1.0
    res = _fake_result(V)
    monkeypatch.setattr("supbiclust.selection.information_loss", lambda *a, **k: math.e)
    assert bic(res, bundle.train_views) == pytest.approx(30 * math.log(150) - 2)
    assert ebic(res, bundle.train_views[:1], 1.0) == pytest.approx(
        -2 + 30 * math.log(150) + 2 * 30 * math.log(100))
    res0 = _fake_result([np.zeros((100, 3)), np.zeros((100, 3))])
    assert bic(res0, bundle.train_views) == pytest.approx(-2.0)


def test_ebic_sigma_zero_is_bitwise_bic(base_fit, bundle):
    for form in ("log_loss", "neg2loglik"):
        for loss in ("nll_sum", "smooth_l0", "total_L"):
            a = bic(base_fit, bundle.train_views, bundle.train_outcome, loss, form)
            b = ebic(base_fit, bundle.train_views, 0.0, bundle.train_outcome, loss, form)
            assert a == b


def test_ebic_linear_in_sigma(base_fit, bundle):
    v = [ebic(base_fit, bundle.train_views, s, bundle.train_outcome, ic_form="neg2loglik")
         for s in (0.0, 0.5, 1.0)]
    assert v[1] == pytest.approx((v[0] + v[2]) / 2, rel=1e-12)
    assert v[0] <= v[1] <= v[2]
    with pytest.raises(ConfigError):
        ebic(base_fit, bundle.train_views, 1.5)


def test_log_guard_flags_non_positive_loss(base_fit, bundle):
    # the gaussian negative log-likelihood with constants dropped is negative here
    loss = information_loss(base_fit, bundle.train_views, bundle.train_outcome)
    assert loss < 0
    value, guarded = bic(base_fit, bundle.train_views, bundle.train_outcome, return_guard=True)
    assert guarded
    assert value == pytest.approx(base_fit.n_selected() * math.log(150) - 2 * math.log(LOG_GUARD))


def test_nll_sum_matches_direct_sum(base_fit, bundle):
    from supbiclust.model import natural_param_outcome, natural_params_view
    p = base_fit.params
    ref = 0.0
    for d, v in enumerate(bundle.train_views):
        psi = natural_params_view(p, d)
        ref += np.sum(psi ** 2 / 2 - v.data * psi)
    t = natural_param_outcome(p, bundle.train_outcome)
    ref += np.sum(t ** 2 / 2 - bundle.train_outcome.y * t)
    assert information_loss(base_fit, bundle.train_views, bundle.train_outcome) == pytest.approx(ref)


def test_sparse_candidate_beats_dense(bundle):
    # same likelihood, one fit selects only the true variables
    truth_V = [np.zeros((100, 3)) for _ in range(2)]
    for d in range(2):
        for k, idx in enumerate(bundle.truth.variables[d]):
            truth_V[d][idx, k] = 1.0
    dense_V = [V + 1e-9 for V in truth_V]
    sparse, dense = _fake_result(truth_V), _fake_result(dense_V)
    s = bic(sparse, bundle.train_views, ic_form="neg2loglik")
    d = bic(dense, bundle.train_views, ic_form="neg2loglik")
    assert s < d


def test_search_space_validation():
    with pytest.raises(ConfigError):
        SearchSpace(lambda_grid=((),))
    with pytest.raises(ConfigError):
        SearchSpace(sigma_ebic=2.0)
    with pytest.raises(ConfigError):
        SearchSpace(lambda_grid=((1.0, 2.0), (1.0,)))
    with pytest.raises(ConfigError):
        SearchSpace(k_range=(3, 2))
    with pytest.raises(ConfigError):
        SearchSpace(ic_form="aic")
    sp = SearchSpace(lambda_grid=((1.0, 2.0), (3.0,)), shared_lambda=False)
    assert sp.candidates() == [(1.0, 3.0), (2.0, 3.0)]


@given(st.integers(1, 12), st.integers(1, 8))
def test_candidate_count_ignores_draw_cap(size, max_draws):
    sp = SearchSpace.shared([float(i) for i in range(size)], 1, max_draws=max_draws)
    assert len(sp.candidates()) == size


def test_random_search_singleton_and_table(bundle):
    sp = SearchSpace.shared([4e-4], 2, ic_form="neg2loglik")
    cfg, res, table = random_search(bundle.train_views, bundle.train_outcome,
                                    FitConfig(K=3, max_iter=100), sp)
    assert len(table) == 1 and cfg.lambdas == (4e-4, 4e-4)


def test_random_search_huge_lambda_loses_and_is_deterministic(bundle):
    sp = SearchSpace.shared([1e6, 4e-4, 5e-4], 2, ic_form="neg2loglik", max_draws=2)
    base = FitConfig(K=3, max_iter=300, seed=7)
    c1, r1, t1 = random_search(bundle.train_views, bundle.train_outcome, base, sp)
    c2, r2, t2 = random_search(bundle.train_views, bundle.train_outcome, base, sp)
    assert len(t1) == 2
    assert t1 == t2 and c1 == c2
    assert min(row["score"] for row in t1) == pytest.approx(
        [row["score"] for row in t1 if tuple(row["lambdas"]) == tuple(c1.lambdas)][0])

    sp2 = SearchSpace.shared([1e6, 4e-4], 2, ic_form="neg2loglik")
    c3, _, t3 = random_search(bundle.train_views, bundle.train_outcome, base, sp2)
    assert c3.lambdas == (4e-4, 4e-4)
    big = [row for row in t3 if row["lambdas"][0] == 1e6][0]
    assert big["stop_reason"] == "empty-component"


def test_random_search_tie_break_prefers_fewer_variables(bundle, monkeypatch):
    # with the printed form every gaussian candidate hits the guard and ties
    sp = SearchSpace.shared([3e-4, 1e-2], 2, ic_form="log_loss")
    cfg, res, table = random_search(bundle.train_views, bundle.train_outcome,
                                    FitConfig(K=3, max_iter=50), sp)
    assert all(row["guarded"] for row in table)
    assert res.n_selected() == min(row["q"] for row in table)


def test_random_search_all_fail(bundle, monkeypatch):
    from supbiclust.exceptions import NumericalError

    def boom(*a, **k):
        raise NumericalError("boom")
    monkeypatch.setattr("supbiclust.selection.fit", boom)
    with pytest.raises(SearchFailure) as info:
        random_search(bundle.train_views, bundle.train_outcome, FitConfig(K=3),
                      SearchSpace.shared([1.0, 2.0], 2))
    assert len(info.value.diagnostics) == 2


def test_select_k_user_point_range(bundle):
    sp = SearchSpace.shared([4e-4], 2, k_range=(2, 2))
    sel = select_k(bundle.train_views, bundle.train_outcome, FitConfig(max_iter=50), sp,
                   search=False)
    assert sel.K_hat == 2 and sel.mode == "user" and list(sel.results) == [2]


def test_select_k_huge_lambda_errors(bundle):
    sp = SearchSpace.shared([1e6], 2, k_range=(1, 3))
    with pytest.raises(SelectionError):
        select_k(bundle.train_views, bundle.train_outcome, FitConfig(lambdas=1e6), sp)


def test_select_k_finds_three(bundle):
    grid = default_lambda_grid(100)
    sp = SearchSpace.shared(grid, 2, k_range=(2, 6), ic_form="neg2loglik")
    sel = select_k(bundle.train_views, bundle.train_outcome, FitConfig(tol=1e-6), sp)
    assert sel.K_hat == 3
    assert not is_empty(sel.results[3][1])
    assert is_empty(sel.results[4][1])
    assert max(sel.results) == 4
