"""Test problem generation: masks, projection, noise and phantom images."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, InvalidInputError
from .metrics import psnr
from .prox import as_image


def as_mask(mask, shape=None):
    m = np.asarray(mask)
    if m.dtype != bool:
        if not np.all((m == 0) | (m == 1)):
            raise InvalidInputError("mask entries must be boolean or 0/1")
        m = m.astype(bool)
    if m.ndim != 2:
        raise InvalidInputError(f"mask must be 2-D, got shape {m.shape}")
    if shape is not None and m.shape != tuple(shape):
        raise InvalidInputError(f"mask shape {m.shape} does not match {tuple(shape)}")
    return m


def project(X, mask):
    """Keep the observed entries of ``X`` and zero the rest."""
    X = as_image(X)
    mask = as_mask(mask, X.shape)
    return np.where(mask, X, 0.0)


def _round_half_up(x):
    return int(np.floor(x + 0.5))


def sample_mask(rows, cols, fraction, seed):
    """Uniformly chosen mask with exactly ``round(fraction * rows * cols)`` entries."""
    if not 0 < fraction <= 1:
        raise InvalidArgumentError(f"fraction must lie in (0, 1], got {fraction}")
    if rows < 1 or cols < 1:
        raise InvalidArgumentError(f"invalid mask shape {rows}x{cols}")
    total = rows * cols
    count = min(total, _round_half_up(fraction * total))
    rng = np.random.default_rng(seed)
    mask = np.zeros(total, dtype=bool)
    mask[rng.choice(total, size=count, replace=False)] = True
    return mask.reshape(rows, cols)


def erase_column_mask(rows, cols, column_index):
    if not 0 <= column_index < cols:
        raise InvalidArgumentError(f"column {column_index} out of range for {cols} columns")
    mask = np.ones((rows, cols), dtype=bool)
    mask[:, column_index] = False
    return mask


def erase_row_mask(rows, cols, row_index):
    if not 0 <= row_index < rows:
        raise InvalidArgumentError(f"row {row_index} out of range for {rows} rows")
    mask = np.ones((rows, cols), dtype=bool)
    mask[row_index, :] = False
    return mask


@dataclass(frozen=True)
class DegradedObservation:
    observed: np.ndarray
    mask: np.ndarray
    noise_sigma: float
    seed: int
    achieved_psnr: float = float("inf")


def add_noise_to_target_psnr(X, mask, target_psnr_db, seed, peak=1.0):
    """Gaussian noise on the observed entries, rescaled to hit ``target_psnr_db``.

    The realized noise is scaled so that its mean square over the mask is
    exactly ``peak**2 * 10**(-target/10)``; the PSNR measured on the
    observed entries then equals the target up to rounding.
    """
    X = as_image(X)
    mask = as_mask(mask, X.shape)
    if not target_psnr_db > 0:
        raise InvalidArgumentError(f"target PSNR must be positive, got {target_psnr_db}")
    count = int(mask.sum())
    if count == 0:
        raise InvalidArgumentError("mask has no observed entries")
    target_mse = peak**2 * 10.0 ** (-target_psnr_db / 10.0)
    draw_seed = seed
    while True:
        z = np.random.default_rng(draw_seed).standard_normal(count)
        norm = np.linalg.norm(z)
        if norm > 0:
            break
        draw_seed += 1
    z *= np.sqrt(target_mse * count) / norm
    noise = np.zeros_like(X)
    noise[mask] = z
    noisy = X + noise
    observed = np.where(mask, noisy, 0.0)
    return DegradedObservation(
        observed=observed,
        mask=mask,
        noise_sigma=float(np.linalg.norm(z) / np.sqrt(count)),
        seed=seed,
        achieved_psnr=psnr(X, noisy, mask, peak=peak),
    )


def degrade(X, fraction=1.0, seed=0, noise_psnr=None, erase_column=None, erase_row=None):
    """Sample a mask (optionally intersected with an erased row/column) and observe ``X``.

    Mask and noise draw from independent streams spawned from ``seed``.
    """
    X = as_image(X)
    m, n = X.shape
    mask_seed, noise_seed = np.random.SeedSequence(seed).generate_state(2)
    mask = sample_mask(m, n, fraction, int(mask_seed))
    if erase_column is not None:
        mask &= erase_column_mask(m, n, erase_column)
    if erase_row is not None:
        mask &= erase_row_mask(m, n, erase_row)
    if noise_psnr is None:
        return DegradedObservation(project(X, mask), mask, 0.0, seed)
    return add_noise_to_target_psnr(X, mask, noise_psnr, int(noise_seed))


# Modified Shepp-Logan (Toft): intensity, semi-axes a, b, centre x0, y0, rotation (deg)
_SHEPP_LOGAN = (
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
)

PHANTOM_KINDS = ("shepp_logan", "piecewise_blocks", "low_rank_product")


def shepp_logan(size):
    centres = (2.0 * np.arange(size) + 1.0) / size - 1.0
    x = centres[None, :]
    y = -centres[:, None]
    img = np.zeros((size, size))
    for value, a, b, x0, y0, deg in _SHEPP_LOGAN:
        phi = np.deg2rad(deg)
        c, s = np.cos(phi), np.sin(phi)
        xr = (x - x0) * c + (y - y0) * s
        yr = -(x - x0) * s + (y - y0) * c
        img += value * ((xr / a) ** 2 + (yr / b) ** 2 <= 1.0)
    return np.clip(img, 0.0, 1.0)


def piecewise_blocks(size, seed, n_blocks=6):
    """Random constant rectangles on a constant background, values on the 1/255 grid."""
    rng = np.random.default_rng(seed)
    img = np.full((size, size), rng.integers(0, 256) / 255.0)
    lo, hi = max(2, size // 8), max(3, size // 2)
    for _ in range(n_blocks):
        h, w = rng.integers(lo, hi + 1, size=2)
        top = rng.integers(0, size - h + 1)
        left = rng.integers(0, size - w + 1)
        img[top : top + h, left : left + w] = rng.integers(0, 256) / 255.0
    return img


def low_rank_product(size, seed):
    rank = min(5, size // 4)
    rng = np.random.default_rng(seed)
    A = rng.random((size, rank))
    B = rng.random((size, rank))
    P = A @ B.T
    # non-negative factors, so scaling by the max lands in [0, 1] without a rank-one shift
    return P / P.max()


def generate_phantom(kind, size, seed=0):
    if size < 8:
        raise InvalidArgumentError(f"phantom size must be at least 8, got {size}")
    if kind == "shepp_logan":
        return shepp_logan(size)
    if kind == "piecewise_blocks":
        return piecewise_blocks(size, seed)
    if kind == "low_rank_product":
        return low_rank_product(size, seed)
    raise InvalidArgumentError(f"unknown phantom {kind!r}; expected one of {PHANTOM_KINDS}")
