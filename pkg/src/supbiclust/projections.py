"""Projection and proximal operators used by the block updates."""

import numpy as np

__all__ = [
    "project_unit_norm",
    "project_unit_columns",
    "project_simplex",
    "project_simplex_rows",
    "soft_threshold",
]

_DEGENERATE_NORM = 1e-12


def project_unit_norm(v):
    """Scale ``v`` to unit Euclidean norm.

    A (numerically) zero vector maps to the first standard basis vector so
    the result is always defined.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("project_unit_norm expects a non-empty 1-d vector")
    norm = np.linalg.norm(v)
    if norm < _DEGENERATE_NORM:
        out = np.zeros_like(v)
        out[0] = 1.0
        return out
    return v / norm


def project_unit_columns(A):
    """Apply :func:`project_unit_norm` to every column of ``A``."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] == 0:
        raise ValueError("project_unit_columns expects a non-empty 2-d array")
    norms = np.linalg.norm(A, axis=0)
    out = A / np.where(norms < _DEGENERATE_NORM, 1.0, norms)
    dead = norms < _DEGENERATE_NORM
    if np.any(dead):
        out[:, dead] = 0.0
        out[0, dead] = 1.0
    return out


def project_simplex_rows(A):
    """Euclidean projection of each row of ``A`` onto the probability simplex.

    Sort-based method of Wang & Carreira-Perpinan (2013): sort each row in
    decreasing order, find the largest index ``rho`` with
    ``u_rho + (1 - sum_{j<=rho} u_j) / rho > 0`` and shift by the resulting
    threshold before clipping at zero.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[1] == 0:
        raise ValueError("project_simplex_rows expects a 2-d array with >= 1 column")
    K = A.shape[1]
    u = -np.sort(-A, axis=1)
    css = np.cumsum(u, axis=1) - 1.0
    ind = np.arange(1, K + 1)
    cond = u - css / ind > 0
    # cond is true on a prefix; its length is the pivot
    rho = K - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(A.shape[0]), rho - 1] / rho
    return np.maximum(A - theta[:, None], 0.0)


def project_simplex(v):
    """Euclidean projection of a single vector onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("project_simplex expects a non-empty 1-d vector")
    return project_simplex_rows(v[None, :])[0]


def soft_threshold(z, lam):
    """Proximal map of ``lam * |.|``: shrink ``z`` towards zero by ``lam``.

    Works elementwise on arrays; ``lam`` may broadcast against ``z``.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("soft_threshold requires lam >= 0")
    z = np.asarray(z, dtype=float)
    out = np.where(z >= lam, z - lam, np.where(z < -lam, z + lam, 0.0))
    return out if out.ndim else float(out)
