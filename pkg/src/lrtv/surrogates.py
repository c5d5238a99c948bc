"""Concave surrogates of the l0 penalty and their super-gradients.

Every surrogate ``g`` is concave and non-decreasing on ``[0, inf)`` with
``g(0) = 0``, so its super-gradient is non-negative and non-increasing.
That ordering is what makes the per-singular-value weights sorted the
right way for weighted singular value thresholding.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError


class Kind(str, enum.Enum):
    L1 = "L1"
    LP = "Lp"
    LOGARITHM = "Logarithm"
    MCP = "MCP"
    CAPPED_L1 = "CappedL1"
    ETP = "ETP"
    GEMAN = "Geman"
    LAPLACE = "Laplace"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        lowered = str(name).strip().lower()
        for kind in cls:
            if kind.value.lower() == lowered:
                return kind
        raise InvalidArgumentError(
            f"unknown surrogate {name!r}; expected one of {[k.value for k in cls]}"
        )


ALL_KINDS = tuple(Kind)


@dataclass(frozen=True)
class SurrogateSpec:
    kind: Kind = Kind.LP
    lam: float = 1.0
    gamma: float = 0.5
    p: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind.parse(self.kind))
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "p", float(self.p))
        if not self.lam > 0:
            raise InvalidArgumentError(f"surrogate lambda must be positive, got {self.lam}")
        if not self.gamma > 0:
            raise InvalidArgumentError(f"surrogate gamma must be positive, got {self.gamma}")
        if self.kind is Kind.LP and not 0 < self.p < 1:
            raise InvalidArgumentError(f"p must lie in (0, 1), got {self.p}")

    def value(self, x):
        return surrogate_value(self, x)

    def supergradient(self, x):
        return surrogate_supergradient(self, x)


def _check_x(x):
    x = np.asarray(x, dtype=np.float64)
    if np.any(np.isnan(x)) or np.any(x < 0):
        raise InvalidArgumentError("surrogates are defined for x >= 0 only")
    return x


def _unwrap(x, scalar):
    return float(x) if scalar else x


def surrogate_value(spec: SurrogateSpec, x):
    """Evaluate ``g(x)``; accepts a scalar or an array of non-negative reals."""
    scalar = np.ndim(x) == 0
    x = _check_x(x)
    lam, gam = spec.lam, spec.gamma
    k = spec.kind
    if k is Kind.L1:
        out = lam * x
    elif k is Kind.LP:
        out = lam * x**spec.p
    elif k is Kind.LOGARITHM:
        out = lam / math.log(gam + 1.0) * np.log1p(gam * x)
    elif k is Kind.MCP:
        out = np.where(x < lam * gam, lam * x - x**2 / (2.0 * gam), 0.5 * gam * lam**2)
    elif k is Kind.CAPPED_L1:
        out = np.where(x < gam, lam * x, lam * gam)
    elif k is Kind.ETP:
        out = lam / -math.expm1(-gam) * -np.expm1(-gam * x)
    elif k is Kind.GEMAN:
        out = lam * x / (x + gam)
    elif k is Kind.LAPLACE:
        out = lam * -np.expm1(-x / gam)
    else:  # pragma: no cover
        raise AssertionError(k)
    return _unwrap(out, scalar)


def surrogate_supergradient(spec: SurrogateSpec, x):
    """An element of the super-differential of ``g`` at ``x``.

    Smooth points give the derivative. At the MCP and capped-l1 kinks the
    right derivative (0) is selected, which keeps the result
    non-increasing in ``x``. ``Lp`` at 0 returns ``inf``.
    """
    scalar = np.ndim(x) == 0
    x = _check_x(x)
    lam, gam = spec.lam, spec.gamma
    k = spec.kind
    if k is Kind.L1:
        out = np.full_like(x, lam)
    elif k is Kind.LP:
        with np.errstate(divide="ignore"):
            out = np.where(x > 0, lam * spec.p * np.power(np.where(x > 0, x, 1.0), spec.p - 1.0), np.inf)
    elif k is Kind.LOGARITHM:
        out = lam * gam / (math.log(gam + 1.0) * (gam * x + 1.0))
    elif k is Kind.MCP:
        out = np.where(x < lam * gam, lam - x / gam, 0.0)
    elif k is Kind.CAPPED_L1:
        out = np.where(x < gam, lam, 0.0)
    elif k is Kind.ETP:
        out = lam * gam * np.exp(-gam * x) / -math.expm1(-gam)
    elif k is Kind.GEMAN:
        out = lam * gam / (x + gam) ** 2
    elif k is Kind.LAPLACE:
        out = lam / gam * np.exp(-x / gam)
    else:  # pragma: no cover
        raise AssertionError(k)
    return _unwrap(out, scalar)


def weights_from_singular_values(spec: SurrogateSpec, lambda1, sigma):
    """Per-singular-value shrinkage weights ``lambda1 * s_i``.

    ``sigma`` must be sorted non-increasing; the returned weights are then
    non-decreasing. Entries may be ``inf`` (Lp at a zero singular value).
    """
    sigma = _check_x(np.atleast_1d(sigma))
    if np.any(np.diff(sigma) > 0):
        raise InvalidArgumentError("singular values must be sorted non-increasing")
    s = surrogate_supergradient(spec, sigma)
    # inf * 0 would give nan; lambda1 == 0 means no rank penalty at all
    if lambda1 == 0:
        return np.zeros_like(sigma)
    return lambda1 * s


def surrogate_table(lam=1.0, gamma=0.5, p=0.5, xmax=2.0, steps=201):
    """Grid ``x`` and one column of ``g(x)`` per kind, for plotting."""
    if int(steps) < 2:
        raise InvalidArgumentError(f"steps must be at least 2, got {steps}")
    if not xmax > 0:
        raise InvalidArgumentError(f"xmax must be positive, got {xmax}")
    x = np.linspace(0.0, float(xmax), int(steps))
    columns = {}
    for kind in ALL_KINDS:
        spec = SurrogateSpec(kind, lam=lam, gamma=gamma, p=p)
        columns[kind.value] = surrogate_value(spec, x)
    return x, columns
