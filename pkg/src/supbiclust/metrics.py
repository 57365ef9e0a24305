"""Bicluster accuracy (Jaccard based) and outcome error metrics.

A bicluster of view ``d`` is the ``n x p_d`` indicator matrix of the outer
product between its sample set and its variable set. Estimated and true
biclusters are passed as ``(sample_sets, variable_sets)`` where
``sample_sets[k]`` indexes samples and ``variable_sets[d][k]`` indexes the
variables of view ``d``.
"""

import warnings

import numpy as np

from .exceptions import ShapeError
from .expfam import get_family

__all__ = [
    "membership_matrix",
    "membership_matrices",
    "jaccard",
    "jaccard_table",
    "relevance_recovery_f",
    "fp_fn",
    "outcome_error",
    "bicluster_scores",
]


def membership_matrix(samples, variables, n, p):
    """Binary ``n x p`` matrix with ones on ``samples x variables``."""
    M = np.zeros((n, p), dtype=bool)
    M[np.ix_(np.asarray(samples, dtype=int), np.asarray(variables, dtype=int))] = True
    return M


def membership_matrices(sample_sets, variable_sets, n, p_list):
    """``out[d][k]`` is the membership matrix of bicluster ``k`` in view ``d``."""
    if len(variable_sets) != len(p_list):
        raise ShapeError("one variable-set list per view is required")
    out = []
    for p, var_d in zip(p_list, variable_sets):
        if len(var_d) != len(sample_sets):
            raise ShapeError("sample and variable sets disagree on the number of biclusters")
        out.append([membership_matrix(s, v, n, p) for s, v in zip(sample_sets, var_d)])
    return out


def jaccard(A, B):
    """Jaccard index of two binary matrices; 0 when both are empty."""
    A = np.asarray(A, dtype=bool)
    B = np.asarray(B, dtype=bool)
    if A.shape != B.shape:
        raise ShapeError(f"shape mismatch {A.shape} vs {B.shape}")
    union = np.count_nonzero(A | B)
    if union == 0:
        return 0.0
    return np.count_nonzero(A & B) / union


def _stack(mats):
    return np.stack([np.asarray(m, dtype=bool).ravel() for m in mats]).astype(np.int64)


def jaccard_table(est, true):
    """``K x K*`` matrix of Jaccard indices between two bicluster lists."""
    E, T = _stack(est), _stack(true)
    inter = E @ T.T
    union = E.sum(axis=1)[:, None] + T.sum(axis=1)[None, :] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(union > 0, inter / np.maximum(union, 1), 0.0)


def relevance_recovery_f(estimated, truth):
    """Relevance, recovery and F-score averaged over views.

    ``estimated[d]`` and ``truth[d]`` are lists of membership matrices.
    Relevance averages, over estimated biclusters, the best Jaccard match
    among the true ones; recovery does the reverse.
    """
    if len(estimated) != len(truth):
        raise ShapeError("estimated and true biclusters must cover the same views")
    if any(len(e) == 0 for e in estimated) or len(estimated) == 0:
        warnings.warn("no estimated biclusters; scores set to zero", stacklevel=2)
        return 0.0, 0.0, 0.0
    rel = rec = 0.0
    for est_d, true_d in zip(estimated, truth):
        J = jaccard_table(est_d, true_d)
        rel += J.max(axis=1).mean()
        rec += J.max(axis=0).mean()
    rel /= len(estimated)
    rec /= len(estimated)
    f = 0.0 if rel + rec == 0 else 2.0 * rel * rec / (rel + rec)
    return float(rel), float(rec), float(f)


def fp_fn(estimated, truth):
    """False-positive and false-negative rates.

    For every (true, estimated) pair the fraction of cells selected only by
    the estimate (FP) or only by the truth (FN) is computed; each true
    bicluster keeps its minimum over estimates, and the minima are averaged
    over true biclusters and views.
    """
    if len(estimated) != len(truth):
        raise ShapeError("estimated and true biclusters must cover the same views")
    if any(len(e) == 0 for e in estimated) or len(estimated) == 0:
        warnings.warn("no estimated biclusters; rates set to zero", stacklevel=2)
        return 0.0, 0.0
    fp_views, fn_views = [], []
    for est_d, true_d in zip(estimated, truth):
        E, T = _stack(est_d), _stack(true_d)
        size = E.shape[1]
        inter = T @ E.T
        fp = (E.sum(axis=1)[None, :] - inter) / size
        fn = (T.sum(axis=1)[:, None] - inter) / size
        fp_views.append(fp.min(axis=1).mean())
        fn_views.append(fn.min(axis=1).mean())
    return float(np.mean(fp_views)), float(np.mean(fn_views))


def bicluster_scores(est_samples, est_variables, true_samples, true_variables, n, p_list):
    """All five bicluster metrics from membership index sets."""
    est = membership_matrices(est_samples, est_variables, n, p_list)
    true = membership_matrices(true_samples, true_variables, n, p_list)
    rel, rec, f = relevance_recovery_f(est, true)
    fp, fn = fp_fn(est, true)
    return {"relevance": rel, "recovery": rec, "f_score": f,
            "false_positive": fp, "false_negative": fn}


def outcome_error(y_true, y_pred, family):
    """Mean squared error (gaussian/poisson) or error rate at 0.5 (bernoulli)."""
    y_true = np.asarray(y_true, dtype=float).ravel()
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    if y_true.shape != y_pred.shape:
        raise ShapeError(f"length mismatch {y_true.shape[0]} vs {y_pred.shape[0]}")
    if get_family(family).name == "bernoulli":
        return float(np.mean((y_pred >= 0.5).astype(float) != y_true))
    return float(np.mean((y_true - y_pred) ** 2))
