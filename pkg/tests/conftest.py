import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

from supbiclust.model import ModelParams, OutcomeSpec, ViewMatrix  # noqa: E402


def draw_data(rng, family, shape):
    if family == "gaussian":
        return rng.normal(size=shape)
    if family == "bernoulli":
        return rng.integers(0, 2, size=shape).astype(float)
    return rng.poisson(1.5, size=shape).astype(float)


def random_instance(seed, view_fams=("gaussian",), yfam="gaussian", n=5, p=4, K=3,
                    n_cov=0):
    """Small random views, outcome and parameters."""
    rng = np.random.default_rng(seed)
    views = [ViewMatrix(draw_data(rng, f, (n, p)), f, f"v{d}") for d, f in enumerate(view_fams)]
    xe = rng.normal(size=(n, n_cov)) if n_cov else None
    outcome = None if yfam is None else OutcomeSpec(draw_data(rng, yfam, n), yfam, xe)
    params = ModelParams(
        U=rng.normal(scale=0.5, size=(n, K)),
        V=[rng.normal(scale=0.5, size=(p, K)) for _ in view_fams],
        W=rng.uniform(0.1, 1.0, size=(n, K)),
        mu=[rng.normal(scale=0.3, size=p) for _ in view_fams],
        beta=rng.normal(scale=0.5, size=K + n_cov),
    )
    return views, outcome, params


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
