"""Reconstruction quality measures."""

import math

import numpy as np

from .errors import InvalidArgumentError, InvalidInputError
from .prox import as_image, compute_svd

PEAK = 1.0


def mse(reference, candidate, mask=None):
    ref = as_image(reference, "reference")
    cand = as_image(candidate, "candidate")
    if ref.shape != cand.shape:
        raise InvalidInputError(f"shape mismatch: {ref.shape} vs {cand.shape}")
    diff = ref - cand
    if mask is None:
        return float(np.mean(diff**2))
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != ref.shape:
        raise InvalidInputError(f"mask shape {mask.shape} does not match {ref.shape}")
    if not mask.any():
        raise InvalidArgumentError("mask selects no entries")
    return float(np.mean(diff[mask] ** 2))


def psnr(reference, candidate, mask=None, peak=PEAK):
    """Peak signal-to-noise ratio in dB; ``inf`` when the inputs coincide.

    With ``mask`` given, the mean squared error is taken over the selected
    entries only.
    """
    err = mse(reference, candidate, mask)
    if err == 0:
        return math.inf
    return 10.0 * math.log10(peak**2 / err)


def numerical_rank(X, relative_threshold=1e-3):
    """Count of singular values at least ``relative_threshold`` times the largest."""
    if not 0 < relative_threshold < 1:
        raise InvalidArgumentError(f"relative_threshold must lie in (0, 1), got {relative_threshold}")
    s = compute_svd(X).values
    if s[0] == 0:
        return 0
    return int(np.count_nonzero(s >= relative_threshold * s[0]))
