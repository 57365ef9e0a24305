"""Single-parameter exponential-family primitives.

Every likelihood term in the model is written as ``-x * psi + G(psi)``
where ``G`` is the cumulant (log-partition) function of the family and
``psi`` the natural parameter. The normalising constant ``log p0(x)`` is
dropped throughout.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit

from .exceptions import InvalidDataError, InvalidFamilyError

__all__ = [
    "Family",
    "GAUSSIAN",
    "BERNOULLI",
    "POISSON",
    "negbin_init",
    "get_family",
    "cumulant",
    "mean_link",
    "variance_fn",
    "nll_entry",
    "init_transform",
    "check_support",
]

_LIKELIHOOD_FAMILIES = ("gaussian", "bernoulli", "poisson")


@dataclass(frozen=True)
class Family:
    """Distribution family tag.

    ``name`` is one of ``"gaussian"``, ``"bernoulli"``, ``"poisson"`` or
    ``"negbin"``. The negative binomial tag carries the number of failures
    ``r`` and is only usable by :func:`init_transform`.
    """

    name: str
    r: int | None = None

    def __post_init__(self):
        if self.name not in _LIKELIHOOD_FAMILIES + ("negbin",):
            raise InvalidFamilyError(f"unknown family {self.name!r}")
        if self.name == "negbin":
            if self.r is None or int(self.r) != self.r or self.r < 1:
                raise InvalidFamilyError("negbin requires an integer r >= 1")
        elif self.r is not None:
            raise InvalidFamilyError(f"{self.name} takes no r parameter")

    @property
    def has_likelihood(self):
        return self.name in _LIKELIHOOD_FAMILIES

    def __str__(self):
        return self.name if self.r is None else f"{self.name}:{self.r}"


GAUSSIAN = Family("gaussian")
BERNOULLI = Family("bernoulli")
POISSON = Family("poisson")


def negbin_init(r):
    """Negative-binomial tag used only for the initialisation transform."""
    return Family("negbin", int(r))


def get_family(spec):
    """Coerce a string such as ``"gaussian"`` or ``"negbin:5"`` to a Family."""
    if isinstance(spec, Family):
        return spec
    if not isinstance(spec, str):
        raise InvalidFamilyError(f"cannot interpret {spec!r} as a family")
    name, _, arg = spec.strip().lower().partition(":")
    aliases = {"normal": "gaussian", "binary": "bernoulli", "binomial": "bernoulli",
               "count": "poisson", "negative_binomial": "negbin", "nb": "negbin"}
    name = aliases.get(name, name)
    if name == "negbin":
        if not arg:
            raise InvalidFamilyError("negbin requires r, e.g. 'negbin:5'")
        try:
            return negbin_init(int(arg))
        except ValueError:
            raise InvalidFamilyError(f"invalid negbin r {arg!r}") from None
    if arg:
        raise InvalidFamilyError(f"{name} takes no parameter")
    return Family(name)


def _require_likelihood(family):
    family = get_family(family)
    if not family.has_likelihood:
        raise InvalidFamilyError(
            f"{family} has no cumulant function and cannot be used as a likelihood")
    return family


def cumulant(family, psi):
    """Cumulant function G(psi), elementwise."""
    family = _require_likelihood(family)
    psi = np.asarray(psi, dtype=float)
    if family.name == "gaussian":
        out = 0.5 * psi * psi
    elif family.name == "bernoulli":
        # log(1 + e^psi) without overflow
        out = np.maximum(psi, 0.0) + np.log1p(np.exp(-np.abs(psi)))
    else:
        out = np.exp(psi)
    return out if out.ndim else float(out)


def mean_link(family, psi):
    """Mean of the distribution, G'(psi), elementwise."""
    family = _require_likelihood(family)
    psi = np.asarray(psi, dtype=float)
    if family.name == "gaussian":
        out = psi.copy()
    elif family.name == "bernoulli":
        out = expit(psi)
    else:
        out = np.exp(psi)
    return out if out.ndim else float(out)


def variance_fn(family, psi):
    """Second derivative G''(psi), used by the Newton refit."""
    family = _require_likelihood(family)
    psi = np.asarray(psi, dtype=float)
    if family.name == "gaussian":
        out = np.ones_like(psi)
    elif family.name == "bernoulli":
        m = expit(psi)
        out = m * (1.0 - m)
    else:
        out = np.exp(psi)
    return out if out.ndim else float(out)


def check_support(family, x, what="data"):
    """Raise InvalidDataError unless every entry of ``x`` is in the support."""
    family = get_family(family)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidDataError(f"{what} contains non-finite values")
    if family.name == "bernoulli":
        if not np.all((x == 0) | (x == 1)):
            raise InvalidDataError(f"{what} must be 0/1 for the bernoulli family")
    elif family.name in ("poisson", "negbin"):
        if np.any(x < 0) or np.any(x != np.round(x)):
            raise InvalidDataError(
                f"{what} must hold non-negative integers for the {family.name} family")


def nll_entry(family, x, psi):
    """Per-entry negative log-likelihood ``-x * psi + G(psi)``."""
    family = _require_likelihood(family)
    check_support(family, x)
    x = np.asarray(x, dtype=float)
    out = -x * np.asarray(psi, dtype=float) + cumulant(family, psi)
    return out if np.ndim(out) else float(out)


def init_transform(family, x):
    """Map raw data to a starting natural parameter.

    gaussian: x; bernoulli: logit((x + 1) / 3);
    negbin: logit((x + 1) / (r + x + 2)); poisson: log(x + 1).
    """
    family = get_family(family)
    check_support(family, x)
    x = np.asarray(x, dtype=float)
    if family.name == "gaussian":
        out = x.copy()
    elif family.name == "bernoulli":
        out = logit((x + 1.0) / 3.0)
    elif family.name == "negbin":
        out = logit((x + 1.0) / (family.r + x + 2.0))
    else:
        out = np.log1p(x)
    return out if out.ndim else float(out)
