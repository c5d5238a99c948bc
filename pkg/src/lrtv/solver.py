"""Iteratively reweighted singular value thresholding with a total variation term.

The energy minimized is

    E(X) = lambda1 * sum_i g(sigma_i(X)) + lambda2 * TV(X) + ||P(X - M)||_F

where ``P`` keeps the observed entries. Each iteration linearizes the
surrogate at the current singular values (giving sorted weights) and the
TV + data part at the current iterate (giving a subgradient ``t``), then
takes one weighted singular value thresholding step on
``Y = X - t / mu``. ``mu`` is doubled until the energy does not increase; each search
starts one halving below the previously accepted ``mu``.
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigValueError, InvalidArgumentError, StepFailureError
from .problems import as_mask, project
from .prox import SingularTriple, as_image, compute_svd, count_rank, shrink_factored, truncated_svd
from .surrogates import Kind, SurrogateSpec, surrogate_value, weights_from_singular_values
from .tv import tv_norm, tv_subgradient

DESCENT_SLACK = 1e-12
TRACE_RANK_THRESHOLD = 1e-9
TERMINATION_REASONS = ("step_tolerance", "max_iterations", "residual_threshold")
BASELINES = ("nuclear_svt", "irnn_rank_only", "tv_only")


@dataclass(frozen=True)
class SolverConfig:
    """Solver parameters.

    ``lambda1``/``lambda2`` left as ``None`` are filled in from the data at
    solve time as ``lambda1_scale * ||P(M)||_F`` and
    ``lambda2_scale * ||P(M)||_F``.
    """

    surrogate: SurrogateSpec = field(default_factory=SurrogateSpec)
    lambda1: float | None = None
    lambda2: float | None = None
    lambda1_scale: float = 1.0
    lambda2_scale: float = 0.02
    mu: float = 1.0
    max_iterations: int = 1000
    step_tolerance: float = 1e-6
    residual_threshold: float | None = None
    backtracking_enabled: bool = True
    backtracking_factor: float = 2.0
    backtracking_max_doublings: int = 20
    alpha: float = 0.9
    alpha_tolerance: float = 1e-3
    truncated_svd_enabled: bool = False
    squared_data_term: bool = False

    def __post_init__(self):
        def bad(key, msg):
            raise ConfigValueError(key, msg)

        if self.lambda1 is not None and not self.lambda1 >= 0:
            bad("lambda1", f"must be non-negative, got {self.lambda1}")
        if self.lambda2 is not None and not self.lambda2 >= 0:
            bad("lambda2", f"must be non-negative, got {self.lambda2}")
        if not self.lambda1_scale >= 0:
            bad("lambda1_scale", f"must be non-negative, got {self.lambda1_scale}")
        if not self.lambda2_scale >= 0:
            bad("lambda2_scale", f"must be non-negative, got {self.lambda2_scale}")
        if not self.mu > 0:
            bad("mu", f"must be positive, got {self.mu}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            bad("max_iterations", f"must be a positive integer, got {self.max_iterations}")
        if not self.step_tolerance > 0:
            bad("step_tolerance", f"must be positive, got {self.step_tolerance}")
        if self.residual_threshold is not None and not self.residual_threshold >= 0:
            bad("residual_threshold", f"must be non-negative, got {self.residual_threshold}")
        if not self.backtracking_factor > 1:
            bad("backtracking_factor", f"must exceed 1, got {self.backtracking_factor}")
        if int(self.backtracking_max_doublings) != self.backtracking_max_doublings or self.backtracking_max_doublings < 1:
            bad("backtracking_max_doublings", f"must be a positive integer, got {self.backtracking_max_doublings}")
        if not 0 < self.alpha < 1:
            bad("alpha", f"must lie in (0, 1), got {self.alpha}")
        if not self.alpha_tolerance > 0:
            bad("alpha_tolerance", f"must be positive, got {self.alpha_tolerance}")

    def with_data_defaults(self, M, mask):
        """Copy with any unset regularization weight computed from the observations."""
        scale = float(np.linalg.norm(project(M, mask)))
        return dataclasses.replace(
            self,
            lambda1=self.lambda1_scale * scale if self.lambda1 is None else self.lambda1,
            lambda2=self.lambda2_scale * scale if self.lambda2 is None else self.lambda2,
        )


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    objective: float
    rank: int
    step_norm: float
    mu: float
    elapsed_ms: float


@dataclass
class IterationTrace:
    initial_objective: float = math.nan
    initial_rank: int = 0
    records: list[IterationRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def objectives(self):
        return np.array([r.objective for r in self.records])

    @property
    def ranks(self):
        return np.array([r.rank for r in self.records], dtype=int)

    @property
    def step_norms(self):
        return np.array([r.step_norm for r in self.records])

    @property
    def mus(self):
        return np.array([r.mu for r in self.records])


@dataclass(frozen=True)
class OuterRecord:
    """One continuation stage of :func:`solve_constrained`."""

    stage: int
    scale: float
    iterations: int
    residual: float
    termination_reason: str


@dataclass
class RecoverySolution:
    recovered: np.ndarray
    data_consistent: np.ndarray
    trace: IterationTrace
    converged: bool
    termination_reason: str
    lambda1: float
    lambda2: float
    stages: list[OuterRecord] = field(default_factory=list)


# -- energy pieces -----------------------------------------------------------


def _noise_floor(values, shape):
    # singular values below the SVD's own accuracy are indistinguishable from 0;
    # left in, Lp would charge sqrt(1e-16)-sized phantom terms for them
    values = values.copy()
    if values.size and values[0] > 0:
        values[values <= max(shape) * np.finfo(float).eps * values[0]] = 0.0
    return values


def _decompose(X):
    svd = compute_svd(X)
    return SingularTriple(svd.left, _noise_floor(svd.values, X.shape), svd.right)


def _data_term(residual, squared):
    if squared:
        return 0.5 * float(np.vdot(residual, residual))
    return float(np.linalg.norm(residual))


def _energy(sigma, X, M, mask, spec, lambda1, lambda2, squared):
    total = 0.0
    if lambda1:
        total += lambda1 * float(np.sum(surrogate_value(spec, sigma)))
    if lambda2:
        total += lambda2 * tv_norm(X)
    return total + _data_term(np.where(mask, X - M, 0.0), squared)


def _check_problem(X, M, mask):
    X = as_image(X, "X")
    M = as_image(M, "M")
    if X.shape != M.shape:
        raise InvalidArgumentError(f"shape mismatch: X {X.shape} vs M {M.shape}")
    return X, M, as_mask(mask, X.shape)


def objective(X, M, mask, spec: SurrogateSpec, lambda1, lambda2, squared=False):
    """Energy of ``X``; the data term is the plain (unsquared) Frobenius norm by default."""
    X, M, mask = _check_problem(X, M, mask)
    sigma = _decompose(X).values if lambda1 else None
    return _energy(sigma, X, M, mask, spec, lambda1, lambda2, squared)


def smooth_part_subgradient(X, M, mask, lambda2, squared=False):
    """Subgradient of ``lambda2 * TV(X) + ||P(X - M)||_F`` at ``X``.

    At zero residual the data part contributes the zero matrix.
    """
    X, M, mask = _check_problem(X, M, mask)
    r = np.where(mask, X - M, 0.0)
    if squared:
        g = r
    else:
        norm = np.linalg.norm(r)
        g = r / norm if norm > 0 else np.zeros_like(r)
    if lambda2:
        g = g + lambda2 * tv_subgradient(X)
    return g


# -- one iteration -----------------------------------------------------------


@dataclass
class _State:
    X: np.ndarray
    svd: SingularTriple | None  # exact factorization of X, None when lambda1 == 0
    sigma: np.ndarray | None  # all min(m, n) singular values, zero padded
    energy: float


def _padded(values, r):
    out = np.zeros(r)
    out[: values.size] = values
    return out


def _initial_state(X, M, mask, cfg):
    if cfg.lambda1:
        svd = _decompose(X)
        sigma = svd.values
    else:
        svd = sigma = None
    energy = _energy(sigma, X, M, mask, cfg.surrogate, cfg.lambda1, cfg.lambda2, cfg.squared_data_term)
    return _State(X, svd, sigma, energy)


def _shrink_step(Y, weights, rank_hint, cfg):
    if not cfg.truncated_svd_enabled:
        return shrink_factored(compute_svd(Y), weights)
    r = min(Y.shape)
    k = min(r, rank_hint + 10)
    while True:
        svd = truncated_svd(Y, k)
        k = svd.values.size
        # every discarded sigma <= sigma_k and every later weight >= w_k,
        # so they are all annihilated unless sigma_k itself survives
        if k == r or svd.values[-1] <= weights[k - 1]:
            return shrink_factored(svd, weights[:k])
        k = min(r, 2 * k)


def _step(state, M, mask, cfg, mu_start=None):
    X = state.X
    r = min(X.shape)
    t = smooth_part_subgradient(X, M, mask, cfg.lambda2, cfg.squared_data_term)
    if cfg.lambda1:
        weights = weights_from_singular_values(cfg.surrogate, cfg.lambda1, state.sigma)
        rank_hint = int(np.count_nonzero(state.sigma))
    mu = cfg.mu if mu_start is None else mu_start
    attempts = cfg.backtracking_max_doublings + 1 if cfg.backtracking_enabled else 1
    for attempt in range(attempts):
        if attempt:
            mu *= cfg.backtracking_factor
        Y = X - t / mu
        if cfg.lambda1:
            svd = _shrink_step(Y, weights / mu, rank_hint, cfg)
            X_next = svd.reconstruct()
            sigma = _padded(svd.values, r)
        else:
            svd = sigma = None
            X_next = Y
        energy = _energy(
            sigma, X_next, M, mask, cfg.surrogate, cfg.lambda1, cfg.lambda2, cfg.squared_data_term
        )
        if not cfg.backtracking_enabled or energy <= state.energy + DESCENT_SLACK:
            return _State(X_next, svd, sigma, energy), mu
    raise StepFailureError(state.energy, energy, mu)


def _resolved(cfg, M, mask):
    if cfg.lambda1 is None or cfg.lambda2 is None:
        cfg = cfg.with_data_defaults(M, mask)
    return cfg


def irnn_tv_step(X_k, M, mask, config: SolverConfig):
    """One reweighted thresholding step from ``X_k``; returns ``(X_next, mu_used)``."""
    X_k, M, mask = _check_problem(X_k, M, mask)
    M = project(M, mask)
    cfg = _resolved(config, M, mask)
    state, mu = _step(_initial_state(X_k, M, mask, cfg), M, mask, cfg)
    return state.X, mu


# -- solvers -----------------------------------------------------------------


def _rank_of(state):
    sigma = state.sigma if state.sigma is not None else compute_svd(state.X).values
    return count_rank(sigma, TRACE_RANK_THRESHOLD)


def _iterate(M, mask, X0, cfg, trace, iteration_offset=0):
    state = _initial_state(X0, M, mask, cfg)
    if not trace.records:
        trace.initial_objective = state.energy
        trace.initial_rank = _rank_of(state)
    reason = "max_iterations"
    start = time.perf_counter()
    mu = cfg.mu
    for k in range(1, cfg.max_iterations + 1):
        # near a kink of the energy the accepted mu can exceed what the doubling
        # budget reaches from scratch, so each search starts one halving below
        # the previous one
        mu_start = max(cfg.mu, mu / cfg.backtracking_factor)
        try:
            new, mu = _step(state, M, mask, cfg, mu_start)
        except StepFailureError as err:
            err.trace = trace
            err.last_iterate = state.X
            raise
        step = float(np.linalg.norm(new.X - state.X))
        rel_step = step / max(1.0, float(np.linalg.norm(state.X)))
        state = new
        trace.records.append(
            IterationRecord(
                iteration=iteration_offset + k,
                objective=state.energy,
                rank=_rank_of(state),
                step_norm=step,
                mu=mu,
                elapsed_ms=1e3 * (time.perf_counter() - start),
            )
        )
        if rel_step <= cfg.step_tolerance:
            reason = "step_tolerance"
            break
        if cfg.residual_threshold is not None:
            residual = float(np.linalg.norm(np.where(mask, state.X - M, 0.0)))
            if residual <= cfg.residual_threshold:
                reason = "residual_threshold"
                break
    return state.X, reason, k


def solve_irnn_tv(M, mask, X0=None, config: SolverConfig | None = None):
    """Run reweighted thresholding steps until the step or residual is small.

    ``X0`` defaults to the observed entries of ``M`` with zeros elsewhere.
    Unobserved entries of ``M`` are ignored.
    """
    config = SolverConfig() if config is None else config
    M = as_image(M, "M")
    mask = as_mask(mask, M.shape)
    if not mask.any():
        raise InvalidArgumentError("mask has no observed entries")
    M = project(M, mask)
    X0 = M.copy() if X0 is None else as_image(X0, "X0")
    _check_problem(X0, M, mask)
    cfg = _resolved(config, M, mask)
    trace = IterationTrace()
    X, reason, _ = _iterate(M, mask, X0, cfg, trace)
    return RecoverySolution(
        recovered=X,
        data_consistent=np.where(mask, M, X),
        trace=trace,
        converged=reason != "max_iterations",
        termination_reason=reason,
        lambda1=cfg.lambda1,
        lambda2=cfg.lambda2,
    )


def continuation_scales(alpha, alpha_tolerance):
    """Scales ``alpha**k`` for every continuation stage that runs."""
    scales = []
    k = 0
    while alpha**k > alpha_tolerance:
        scales.append(alpha**k)
        k += 1
    return scales


def solve_constrained(M, mask, config: SolverConfig | None = None, X0=None):
    """Approach the equality-constrained problem by shrinking both weights geometrically.

    Stage ``k`` solves the penalized problem with ``alpha**k`` times the
    base weights, warm-started from stage ``k - 1``. Stages run while
    ``alpha**k > alpha_tolerance``.
    """
    config = SolverConfig() if config is None else config
    M = as_image(M, "M")
    mask = as_mask(mask, M.shape)
    if not mask.any():
        raise InvalidArgumentError("mask has no observed entries")
    M = project(M, mask)
    X = M.copy() if X0 is None else as_image(X0, "X0")
    _check_problem(X, M, mask)
    base = _resolved(config, M, mask)
    trace = IterationTrace()
    stages = []
    reason = "max_iterations"
    offset = 0
    for stage, scale in enumerate(continuation_scales(base.alpha, base.alpha_tolerance)):
        cfg = dataclasses.replace(base, lambda1=scale * base.lambda1, lambda2=scale * base.lambda2)
        X, reason, iterations = _iterate(M, mask, X, cfg, trace, offset)
        offset += iterations
        residual = float(np.linalg.norm(np.where(mask, X - M, 0.0)))
        stages.append(OuterRecord(stage, scale, iterations, residual, reason))
    return RecoverySolution(
        recovered=X,
        data_consistent=np.where(mask, M, X),
        trace=trace,
        converged=reason != "max_iterations",
        termination_reason=reason,
        lambda1=base.lambda1,
        lambda2=base.lambda2,
        stages=stages,
    )


def baseline_config(kind, config: SolverConfig, M, mask):
    """Specialize ``config`` for one of the comparison methods."""
    cfg = _resolved(config, project(M, mask), as_mask(mask, np.shape(M)))
    if kind == "nuclear_svt":
        return dataclasses.replace(cfg, surrogate=SurrogateSpec(Kind.L1, lam=1.0), lambda2=0.0)
    if kind == "irnn_rank_only":
        return dataclasses.replace(cfg, lambda2=0.0)
    if kind == "tv_only":
        return dataclasses.replace(cfg, lambda1=0.0)
    raise InvalidArgumentError(f"unknown baseline {kind!r}; expected one of {BASELINES}")


def solve_baseline(M, mask, kind, config: SolverConfig | None = None, X0=None, constrained=False):
    """Nuclear-norm SVT, rank-only reweighting, or TV-only descent in the same loop."""
    config = SolverConfig() if config is None else config
    cfg = baseline_config(kind, config, as_image(M, "M"), mask)
    if constrained:
        return solve_constrained(M, mask, cfg, X0)
    return solve_irnn_tv(M, mask, X0, cfg)
