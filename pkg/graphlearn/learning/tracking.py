"""
Tracking-error bounds for the online learner.

With per-slot contraction factors L_t = max(|1 - 4 mu_t beta|, |1 - mu_t eta_t|), i_t proximal
gradient steps per slot (Lambda_t = L_t ** i_t), optimum variations v_t = ||w*_{t+1} - w*_t|| and
initial distance e_0 = ||w_0 - w*_0||, the iterate after slot t satisfies

    ||w_t - w*_t|| <= B_t,   B_t = Lambda_t (B_{t-1} + v_{t-1}),   B_0 = e_0,

i.e. B_t = Ltilde_t (e_0 + sum_{tau<t} v_tau / Ltilde_tau) with Ltilde_t = prod Lambda_tau.
The recursion is evaluated directly so vanishing products never divide.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from graphlearn.graph.core import degrees
from graphlearn.models.config import LearnConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BoundSeries:
    exact: np.ndarray
    simplified: np.ndarray
    degenerate: bool


def certified_eta(config: LearnConfig, n: int, *weights: np.ndarray, floor_degree: float | None = None) -> float:
    """
    Lipschitz bound of the smooth gradient on the convex hull of `weights`.

    Degrees are linear in w, so the smallest degree on the hull is the smallest endpoint degree.
    """
    min_degree = min(float(np.min(degrees(w))) for w in weights)
    if floor_degree is not None:
        min_degree = min(min_degree, floor_degree)
    min_degree = max(min_degree, 1e-9 * max(1.0, config.d_min))
    return 4.0 * config.beta + 2.0 * config.alpha * (n - 1) / min_degree**2


def tracking_bound(
    contractions: Sequence[float],
    variations: Sequence[float],
    initial_distance: float,
    *,
    inner_iters: Sequence[int] | None = None,
) -> BoundSeries:
    """
    Per-slot bounds B_1..B_T and the simplified form (Lhat_t)^t e_0 + vhat_t / (1 - Lhat_t).

    `variations[t-1]` is the optimum shift entering slot t; both sequences have length T.
    """
    factors = np.asarray(contractions, dtype=float)
    shifts = np.asarray(variations, dtype=float)
    if factors.shape != shifts.shape:
        raise ValueError(f"contractions {factors.shape} and variations {shifts.shape} must align")
    if inner_iters is not None:
        with np.errstate(over="ignore"):
            factors = factors ** np.asarray(inner_iters, dtype=float)

    degenerate = bool(np.any(factors >= 1.0))
    if degenerate:
        logger.warning("contraction factor >= 1: the problem is badly conditioned (beta too small)")

    exact = np.empty_like(factors)
    bound = float(initial_distance)
    with np.errstate(over="ignore"):
        for t, (factor, shift) in enumerate(zip(factors, shifts, strict=True)):
            bound = factor * (bound + shift)
            exact[t] = bound

    horizon = np.arange(1, factors.shape[0] + 1, dtype=float)
    worst_factor = np.maximum.accumulate(factors) if factors.size else factors
    worst_shift = np.maximum.accumulate(shifts) if shifts.size else shifts
    contracting = worst_factor < 1.0
    simplified = np.full(factors.shape, np.inf)
    simplified[contracting] = (
        worst_factor[contracting] ** horizon[contracting] * float(initial_distance)
        + worst_shift[contracting] / (1.0 - worst_factor[contracting])
    )
    return BoundSeries(exact=exact, simplified=simplified, degenerate=degenerate)


@dataclass
class TrackingCheckpoint:
    time: int
    online_objective: float
    batch_objective: float
    distance: float
    bound: float
    simplified_bound: float
    eta: float
    f_measure_online: float | None = None
    f_measure_batch: float | None = None
    segment: int = 0
    settled: bool = True

    @property
    def objective_gap(self) -> float:
        return self.online_objective - self.batch_objective

    @property
    def relative_gap(self) -> float:
        return self.objective_gap / max(abs(self.batch_objective), 1.0)

    @property
    def objective_bound_holds(self) -> bool:
        return self.objective_gap <= 0.5 * self.eta * self.distance + 1e-9

    def to_row(self) -> dict[str, Any]:
        row = asdict(self)
        row["objective_gap"] = self.objective_gap
        row["relative_gap"] = self.relative_gap
        return row


@dataclass
class TrackingReport:
    checkpoints: list[TrackingCheckpoint] = field(default_factory=list)
    degenerate: bool = False

    def violations(self, slack: float = 1e-9) -> list[TrackingCheckpoint]:
        return [cp for cp in self.checkpoints if cp.distance > cp.bound + slack]

    def objective_violations(self) -> list[TrackingCheckpoint]:
        return [cp for cp in self.checkpoints if not cp.objective_bound_holds]

    def rows(self) -> list[dict[str, Any]]:
        return [cp.to_row() for cp in self.checkpoints]
