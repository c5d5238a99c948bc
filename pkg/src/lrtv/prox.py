"""Singular value decomposition access and singular value shrinkage.

Both shrinkage operators return the result in factored form as well as
dense form (see :func:`shrink_factored`), because the solver needs the
exact singular values of each iterate and re-decomposing a low-rank
matrix only gives them up to rounding noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .errors import InvalidArgumentError, InvalidInputError


def as_image(X, name="matrix"):
    """Return ``X`` as a finite 2-D float64 array, or raise InvalidInputError."""
    A = np.asarray(X, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise InvalidInputError(f"{name} must be a non-empty 2-D array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"{name} contains NaN or Inf entries")
    return A


@dataclass(frozen=True)
class SingularTriple:
    """Thin SVD ``A = left @ diag(values) @ right.T``."""

    left: np.ndarray
    values: np.ndarray
    right: np.ndarray

    def reconstruct(self):
        return (self.left * self.values) @ self.right.T

    @property
    def shape(self):
        return (self.left.shape[0], self.right.shape[0])


def compute_svd(A):
    """Thin SVD with ``r = min(m, n)`` singular values, sorted non-increasing."""
    A = as_image(A)
    try:
        U, s, Vt = scipy.linalg.svd(A, full_matrices=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        # gesdd occasionally fails to converge where gesvd succeeds
        U, s, Vt = scipy.linalg.svd(A, full_matrices=False, lapack_driver="gesvd")
    return SingularTriple(U, s, Vt.T)


def truncated_svd(A, k, rng=None):
    """Leading ``k`` singular triples of ``A``.

    Falls back to the thin SVD when ``k`` is too close to ``min(m, n)``
    for ARPACK to be worthwhile.
    """
    A = as_image(A)
    r = min(A.shape)
    if k >= r - 1 or k < 1:
        return compute_svd(A)
    rng = np.random.default_rng(0) if rng is None else rng
    v0 = rng.standard_normal(r)
    U, s, Vt = scipy.sparse.linalg.svds(A, k=k, v0=v0, solver="arpack")
    order = np.argsort(s)[::-1]
    return SingularTriple(U[:, order], s[order], Vt[order].T)


def count_rank(values, relative_threshold):
    """Number of singular values strictly above ``relative_threshold * values[0]``."""
    values = np.asarray(values)
    if values.size == 0 or values[0] <= 0:
        return 0
    return int(np.count_nonzero(values > relative_threshold * values[0]))


def _check_weights(weights, r):
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.shape[0] != r:
        raise InvalidArgumentError(f"expected {r} weights, got shape {w.shape}")
    if np.any(np.isnan(w)) or np.any(w < 0):
        raise InvalidArgumentError("weights must be non-negative")
    finite = w[np.isfinite(w)]
    # inf entries must form a tail; finite ones must be sorted
    if np.any(np.diff(finite) < 0) or not np.all(np.isfinite(w[: finite.size])):
        raise InvalidArgumentError("weights must be non-decreasing")
    return w


def shrink_values(values, weights):
    """``(values - weights)_+`` with ``+inf`` weights mapped straight to zero."""
    out = np.zeros_like(values)
    finite = np.isfinite(weights)
    out[finite] = np.maximum(values[finite] - weights[finite], 0.0)
    return out


def shrink_factored(svd: SingularTriple, weights):
    """Weighted shrinkage of an already decomposed matrix.

    Returns a ``SingularTriple`` holding only the surviving components; its
    ``values`` are exact singular values of the shrunk matrix.
    """
    w = _check_weights(weights, svd.values.shape[0])
    s = shrink_values(svd.values, w)
    keep = s > 0
    return SingularTriple(svd.left[:, keep], s[keep], svd.right[:, keep])


def singular_value_shrink(Y, threshold):
    """Soft-threshold every singular value of ``Y`` by ``threshold``.

    This is the proximal operator of ``threshold * ||.||_*``.
    """
    threshold = float(threshold)
    if not threshold >= 0:
        raise InvalidArgumentError(f"threshold must be non-negative, got {threshold}")
    svd = compute_svd(Y)
    s = np.maximum(svd.values - threshold, 0.0)
    return (svd.left * s) @ svd.right.T


def weighted_singular_value_shrink(Y, weights):
    """Shrink the i-th singular value of ``Y`` by ``weights[i]``.

    For non-decreasing, non-negative weights this is a global minimizer of
    ``sum_i w_i sigma_i(X) + 0.5 * ||X - Y||_F^2``. Weights that violate the
    ordering are rejected rather than sorted, since the closed form is not
    optimal for them.
    """
    svd = compute_svd(Y)
    return shrink_factored(svd, weights).reconstruct()
