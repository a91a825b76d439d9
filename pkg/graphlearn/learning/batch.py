"""
Batch discriminative graph learning for one class by proximal gradient.

The composite cost over upper-triangular weights w is

    F(w) = 2 w^T z_c - gamma * sum_k 2 w^T z_k  +  indicator(w >= 0)      (non-smooth part h)
           - alpha * 1^T log(S w) + 2 beta ||w||^2                         (smooth part g)

g is 4*beta strongly convex and its gradient is eta-Lipschitz whenever all degrees stay above
d_min, with eta = 4 beta + 2 alpha (N - 1) / d_min^2. The prox of h is a non-negative
soft-threshold with thresholds 2 mu (z_c - gamma sum_k z_k).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Hashable, Mapping, Sequence
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Any

import numpy as np

from graphlearn.graph.core import degrees, degrees_adjoint
from graphlearn.models.config import LearnConfig
from graphlearn.models.graph import DistanceVector, EdgeVector, pair_count

logger = logging.getLogger(__name__)


class LearnerInputError(ValueError):
    pass


class DegenerateDegreeError(ArithmeticError):
    pass


def degree_floor(config: LearnConfig) -> float:
    return 1e-9 * max(1.0, config.d_min)


def lipschitz_constant(config: LearnConfig, n: int) -> float:
    if n < 2:
        raise LearnerInputError(f"n must be >= 2, got {n}")
    return config.lipschitz(n)


@dataclass(frozen=True)
class DiscriminativeProblem:
    own: DistanceVector
    others: tuple[DistanceVector, ...]
    config: LearnConfig
    n: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "others", tuple(self.others))
        sizes = {self.own.n, *(other.n for other in self.others)}
        if sizes != {self.n}:
            raise LearnerInputError(f"distance vectors must all have n={self.n}, got {sorted(sizes)}")
        limit = 2.0 / lipschitz_constant(self.config, self.n)
        if self.config.step is not None and self.config.step > limit:
            raise LearnerInputError(f"step {self.config.step} exceeds 2/eta = {limit}")

    @cached_property
    def threshold_base(self) -> np.ndarray:
        """z_c - gamma * sum_k z_k; entries may be negative."""
        base = np.array(self.own.z, dtype=float)
        if self.others:
            base = base - self.config.gamma * np.sum([other.z for other in self.others], axis=0)
        return base

    @property
    def step(self) -> float:
        return self.config.resolved_step(self.n)


def build_problem(
    distances: Mapping[Hashable, DistanceVector],
    label: Hashable,
    config: LearnConfig,
    *,
    counts: Mapping[Hashable, int] | None = None,
) -> DiscriminativeProblem:
    """Assemble class `label`'s problem against every other class's distances."""
    if label not in distances:
        raise LearnerInputError(f"unknown class label {label!r}")

    def prepared(key: Hashable) -> DistanceVector:
        dist = distances[key]
        if not config.normalize_distances:
            return dist
        if counts is None or counts.get(key, 0) <= 0:
            raise LearnerInputError("normalize_distances needs a positive signal count for every class")
        return dist.scaled(1.0 / counts[key])

    own = prepared(label)
    others = tuple(prepared(key) for key in distances if key != label)
    return DiscriminativeProblem(own=own, others=others, config=config, n=own.n)


def _as_vector(w: EdgeVector | np.ndarray, n: int | None = None) -> np.ndarray:
    arr = np.asarray(w.w if isinstance(w, EdgeVector) else w, dtype=float)
    if n is not None and arr.shape != (pair_count(n),):
        raise LearnerInputError(f"weight vector has shape {arr.shape}, expected ({pair_count(n)},)")
    return arr


def objective(w: EdgeVector | np.ndarray, prob: DiscriminativeProblem) -> float:
    weights = _as_vector(w, prob.n)
    if np.any(weights < 0):
        return math.inf
    deg = degrees(weights)
    if np.any(deg <= 0):
        return math.inf
    cfg = prob.config
    return float(
        2.0 * weights @ prob.threshold_base - cfg.alpha * np.sum(np.log(deg)) + 2.0 * cfg.beta * weights @ weights
    )


def objective_matrix_form(
    adjacency: np.ndarray,
    own: np.ndarray,
    others: Sequence[np.ndarray],
    config: LearnConfig,
) -> float:
    """||W o Z_c||_1 - alpha 1^T log(W 1) + beta ||W||_F^2 - gamma sum_k ||W o Z_k||_1."""
    adj = np.asarray(adjacency, dtype=float)
    if np.any(adj < 0):
        return math.inf
    deg = adj.sum(axis=1)
    if np.any(deg <= 0):
        return math.inf
    value = np.sum(np.abs(adj * own)) - config.alpha * np.sum(np.log(deg)) + config.beta * np.sum(adj * adj)
    for other in others:
        value -= config.gamma * np.sum(np.abs(adj * other))
    return float(value)


def clamped_gradient(weights: np.ndarray, config: LearnConfig, floor: float) -> tuple[np.ndarray, bool]:
    deg = degrees(weights)
    clamped = bool(np.any(deg <= floor))
    if clamped:
        deg = np.maximum(deg, floor)
    return 4.0 * config.beta * weights - config.alpha * degrees_adjoint(1.0 / deg), clamped


def grad_smooth(w: EdgeVector | np.ndarray, config: LearnConfig, *, clamp: bool = False) -> np.ndarray:
    """4 beta w - alpha S^T (1 / S w)."""
    weights = _as_vector(w)
    grad, clamped = clamped_gradient(weights, config, degree_floor(config))
    if clamped and not clamp:
        raise DegenerateDegreeError(f"a node degree fell below the floor {degree_floor(config):g}")
    return grad


def prox_nonsmooth(v: np.ndarray, thresholds: np.ndarray) -> EdgeVector:
    v = np.asarray(v, dtype=float)
    thresholds = np.asarray(thresholds, dtype=float)
    if v.shape != thresholds.shape:
        raise LearnerInputError(f"prox input {v.shape} and thresholds {thresholds.shape} differ")
    return EdgeVector.from_array(np.maximum(0.0, v - thresholds))


def stationarity_residual(w: EdgeVector | np.ndarray, prob: DiscriminativeProblem) -> np.ndarray:
    """Gradient of the smooth part plus the linear threshold direction 2 (z_c - gamma sum_k z_k)."""
    weights = _as_vector(w, prob.n)
    grad, _ = clamped_gradient(weights, prob.config, degree_floor(prob.config))
    return grad + 2.0 * prob.threshold_base


def initial_weights(n: int, config: LearnConfig) -> np.ndarray:
    """Uniform weights giving every node degree max(d_min, 1)."""
    return np.full(pair_count(n), max(config.d_min, 1.0) / (n - 1))


@dataclass
class BatchDiagnostics:
    iterations: int
    final_objective: float
    converged: bool
    clamping_activated: bool
    history: list[float] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data.pop("history")
        return data


def learn_batch(
    prob: DiscriminativeProblem,
    w0: EdgeVector | np.ndarray | None = None,
    *,
    record_history: bool = False,
) -> tuple[EdgeVector, BatchDiagnostics]:
    """
    Run proximal gradient (optionally with momentum and function-value restart) on `prob`.

    Stops when ||w_{k+1} - w_k|| / max(||w_k||, 1e-12) < tol or after max_iter iterations.
    The returned weights are not pruned; callers apply `edge_threshold` at their boundary.
    When the run does not converge the lowest-objective iterate is returned.
    """
    cfg = prob.config
    n = prob.n
    mu = prob.step
    thresholds = 2.0 * mu * prob.threshold_base
    floor = degree_floor(cfg)

    w = initial_weights(n, cfg) if w0 is None else _as_vector(w0, n).copy()
    if np.any(w < 0):
        raise LearnerInputError("initial weights must be nonnegative")
    f = objective(w, prob)
    best_w, best_f = w, f
    w_prev = w
    momentum = 1.0
    clamped_any = False
    converged = False
    history: list[float] = [f] if record_history else []

    iterations = 0
    for iterations in range(1, cfg.max_iter + 1):
        y = w
        next_momentum = 1.0
        if cfg.accelerated:
            next_momentum = (1.0 + math.sqrt(1.0 + 4.0 * momentum * momentum)) / 2.0
            y = w + ((momentum - 1.0) / next_momentum) * (w - w_prev)
            if np.min(degrees(y)) <= floor:
                y, next_momentum = w, 1.0

        grad, clamped = clamped_gradient(y, cfg, floor)
        w_next = np.maximum(0.0, y - mu * grad - thresholds)
        f_next = objective(w_next, prob)
        if cfg.accelerated and f_next > f and y is not w:
            # Function-value restart: drop the momentum and take a plain step from w.
            next_momentum = 1.0
            grad, clamped = clamped_gradient(w, cfg, floor)
            w_next = np.maximum(0.0, w - mu * grad - thresholds)
            f_next = objective(w_next, prob)
        clamped_any = clamped_any or clamped

        change = float(np.linalg.norm(w_next - w)) / max(float(np.linalg.norm(w)), 1e-12)
        w_prev, w, f, momentum = w, w_next, f_next, next_momentum
        if record_history:
            history.append(f)
        if f < best_f:
            best_w, best_f = w, f
        if change < cfg.tol:
            converged = True
            break

    if not converged:
        logger.warning("proximal gradient did not converge in %s iterations (n=%s)", cfg.max_iter, n)
        w, f = best_w, best_f
    if clamped_any:
        logger.info("degree clamping activated during the run (n=%s)", n)
    min_degree = float(np.min(degrees(w)))
    if min_degree < cfg.d_min:
        logger.warning(
            "final minimum degree %.3g is below d_min=%s: eta no longer bounds the curvature "
            "and step %.3g may oscillate",
            min_degree,
            cfg.d_min,
            mu,
        )

    diagnostics = BatchDiagnostics(
        iterations=iterations,
        final_objective=f,
        converged=converged,
        clamping_activated=clamped_any,
        history=history,
    )
    return EdgeVector(n=n, w=w), diagnostics
