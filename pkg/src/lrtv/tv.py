"""Anisotropic total variation with dropped out-of-range differences."""

import numpy as np

from .prox import as_image


def _differences(X):
    # horizontal: X(i,j) - X(i,j+1); vertical: X(i+1,j) - X(i,j)
    return X[:, :-1] - X[:, 1:], X[1:, :] - X[:-1, :]


def difference_map(X):
    """Per-pixel sum of the absolute right and down neighbor differences.

    Terms that would reach past the last row or column are omitted, so the
    bottom-right pixel always maps to 0.
    """
    X = as_image(X)
    dh, dv = _differences(X)
    M = np.zeros_like(X)
    M[:, :-1] += np.abs(dh)
    M[:-1, :] += np.abs(dv)
    return M


def tv_norm(X):
    X = as_image(X)
    dh, dv = _differences(X)
    return float(np.abs(dh).sum() + np.abs(dv).sum())


def tv_subgradient(X):
    """Element of the subdifferential of :func:`tv_norm` at ``X``, with sign(0) = 0."""
    X = as_image(X)
    dh, dv = _differences(X)
    sh, sv = np.sign(dh), np.sign(dv)
    G = np.zeros_like(X)
    G[:, :-1] += sh
    G[:, 1:] -= sh
    G[1:, :] += sv
    G[:-1, :] -= sv
    return G
