"""
Streaming discriminative graph tracking.

One shared `StreamState` owns every class's running distance statistic z_bar and edge
estimate w, so the discriminative threshold of class c can read the other classes' statistics
in the same slot. Exactly one labeled signal arrives per slot: `distance_update` folds it into
its class statistic and advances the clock, then `online_step` takes `inner_iters` proximal
gradient steps on that class with the adaptive step mu_t = step_scale / eta_t, where
eta_t = 4 beta + 2 alpha (N - 1) / min(S w)^2. Other classes keep their estimates for the slot.

All per-sample work and memory is O(N^2) and does not grow with t.
"""

from __future__ import annotations

import logging
from collections import deque
from collections.abc import Hashable, Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from graphlearn.graph.core import degrees, signal_distances
from graphlearn.learning.batch import DiscriminativeProblem, clamped_gradient, degree_floor, initial_weights, objective
from graphlearn.models.config import LearnConfig, MemoryMode
from graphlearn.models.graph import DistanceVector, EdgeVector, SignalMatrix, pair_count

logger = logging.getLogger(__name__)


class StreamError(ValueError):
    pass


class UnknownClassError(StreamError):
    pass


@dataclass(frozen=True)
class StepRecord:
    t: int
    label: Hashable
    step: float
    eta: float
    contraction: float
    inner_iters: int
    min_degree: float
    below_d_min: bool


@dataclass(frozen=True)
class StreamSnapshot:
    t: int
    z_bar: dict[Hashable, np.ndarray]
    w: dict[Hashable, np.ndarray]


@dataclass
class StreamState:
    """Single-writer streaming state; take `snapshot()` to hand data to other threads."""

    n: int
    classes: tuple[Hashable, ...]
    config: LearnConfig
    mode: MemoryMode
    inner_iters: int = 1
    step_scale: float = 1.0
    t: int = 0
    z_bar: dict[Hashable, np.ndarray] = field(default_factory=dict)
    w: dict[Hashable, np.ndarray] = field(default_factory=dict)
    counts: dict[Hashable, int] = field(default_factory=dict)
    windows: dict[Hashable, deque[np.ndarray]] = field(default_factory=dict, repr=False)
    window_sums: dict[Hashable, np.ndarray] = field(default_factory=dict, repr=False)
    last_record: StepRecord | None = None

    def __post_init__(self) -> None:
        self.classes = tuple(self.classes)
        if self.n < 2:
            raise StreamError(f"n must be >= 2, got {self.n}")
        if not self.classes:
            raise StreamError("at least one class label is required")
        if self.inner_iters < 1:
            raise StreamError("inner_iters must be >= 1")
        if not 0.0 < self.step_scale <= 2.0:
            raise StreamError("step_scale must lie in (0, 2]")
        size = pair_count(self.n)
        for label in self.classes:
            self.z_bar.setdefault(label, np.zeros(size))
            self.w.setdefault(label, initial_weights(self.n, self.config))
            self.counts.setdefault(label, 0)
            if self.mode.kind == "sliding":
                self.windows.setdefault(label, deque(maxlen=self.mode.window))
                self.window_sums.setdefault(label, np.zeros(size))

    def require(self, label: Hashable) -> None:
        if label not in self.z_bar:
            raise UnknownClassError(f"unknown class label {label!r}; known: {list(self.classes)}")

    def threshold_base(self, label: Hashable) -> np.ndarray:
        """z_bar_c - gamma * sum_k z_bar_k over the other classes."""
        self.require(label)
        base = self.z_bar[label]
        others = [self.z_bar[k] for k in self.classes if k != label]
        if others:
            base = base - self.config.gamma * np.sum(others, axis=0)
        return base

    def problem(self, label: Hashable) -> DiscriminativeProblem:
        """The instantaneous batch problem F_t for `label`, used by oracles and objective reports."""
        self.require(label)
        own = DistanceVector(n=self.n, z=self.z_bar[label])
        others = tuple(DistanceVector(n=self.n, z=self.z_bar[k]) for k in self.classes if k != label)
        config = self.config.model_copy(update={"step": None})
        return DiscriminativeProblem(own=own, others=others, config=config, n=self.n)

    def objective(self, label: Hashable) -> float:
        return objective(self.w[label], self.problem(label))

    def edge_vector(self, label: Hashable) -> EdgeVector:
        self.require(label)
        return EdgeVector(n=self.n, w=self.w[label])

    def snapshot(self) -> StreamSnapshot:
        return StreamSnapshot(
            t=self.t,
            z_bar={label: z.copy() for label, z in self.z_bar.items()},
            w={label: w.copy() for label, w in self.w.items()},
        )

    def footprint(self) -> int:
        """Bytes held in per-class arrays, used to check memory does not grow with t."""
        total = sum(z.nbytes for z in self.z_bar.values()) + sum(w.nbytes for w in self.w.values())
        total += sum(s.nbytes for s in self.window_sums.values())
        total += sum(item.nbytes for window in self.windows.values() for item in window)
        return total


def _signal_array(x: np.ndarray, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise StreamError(f"signal must have {n} entries, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise StreamError("signal contains non-finite values")
    return x


def _push_window(state: StreamState, label: Hashable, z: np.ndarray) -> None:
    window = state.windows[label]
    total = state.window_sums[label]
    if len(window) == window.maxlen:
        total -= window[0]
    window.append(z)
    # Re-sum once per window turnover to keep round-off from the running sum bounded.
    if state.counts[label] % len(window) == 0:
        total[:] = np.sum(window, axis=0)
    state.z_bar[label] = np.maximum(total / len(window), 0.0)


def warm_start(state: StreamState, label: Hashable, signals: SignalMatrix | Sequence[np.ndarray]) -> StreamState:
    """Initialize z_bar_{c,0} from pre-stream signals without advancing the clock."""
    state.require(label)
    columns = [signals.signal(i) for i in range(signals.p)] if isinstance(signals, SignalMatrix) else list(signals)
    if not columns:
        return state
    per_sample = [signal_distances(_signal_array(x, state.n)) for x in columns]
    state.z_bar[label] = np.mean(per_sample, axis=0)
    if state.mode.kind == "infinite":
        state.counts[label] = len(per_sample)
    elif state.mode.kind == "sliding":
        state.windows[label].clear()
        state.window_sums[label][:] = 0.0
        for z in per_sample:
            state.counts[label] += 1
            _push_window(state, label, z)
    logger.debug("warm start for class %s from %s signals", label, len(per_sample))
    return state


def distance_update(state: StreamState, label: Hashable, x: np.ndarray) -> StreamState:
    state.require(label)
    z = signal_distances(_signal_array(x, state.n))
    state.counts[label] += 1
    mode = state.mode
    if mode.kind == "ema":
        assert mode.theta is not None
        state.z_bar[label] = (1.0 - mode.theta) * state.z_bar[label] + mode.theta * z
    elif mode.kind == "infinite":
        count = state.counts[label]
        state.z_bar[label] = ((count - 1) / count) * state.z_bar[label] + z / count
    else:
        _push_window(state, label, z)
    state.t += 1
    return state


def step_size_for(w: np.ndarray, config: LearnConfig, n: int, *, scale: float = 1.0) -> tuple[float, float, float]:
    """(mu_t, eta_t, min degree) for the current weights, with degrees clamped at the floor."""
    min_degree = float(np.min(degrees(w)))
    clamped = max(min_degree, degree_floor(config))
    eta = 4.0 * config.beta + 2.0 * config.alpha * (n - 1) / clamped**2
    return scale / eta, eta, min_degree


def adaptive_step(state: StreamState, label: Hashable) -> float:
    state.require(label)
    mu, _, _ = step_size_for(state.w[label], state.config, state.n, scale=state.step_scale)
    return mu


def contraction_factor(step: float, beta: float, eta: float) -> float:
    return max(abs(1.0 - 4.0 * step * beta), abs(1.0 - step * eta))


def online_step(state: StreamState, label: Hashable) -> StreamState:
    state.require(label)
    cfg = state.config
    floor = degree_floor(cfg)
    w = state.w[label]
    mu, eta, min_degree = step_size_for(w, cfg, state.n, scale=state.step_scale)
    thresholds = 2.0 * mu * state.threshold_base(label)

    for _ in range(state.inner_iters):
        grad, _ = clamped_gradient(w, cfg, floor)
        w = np.maximum(0.0, w - mu * grad - thresholds)
        min_degree = min(min_degree, float(np.min(degrees(w))))
    state.w[label] = w

    below = min_degree < cfg.d_min
    if below:
        logger.debug("slot %s class %s: min degree %.3g below d_min", state.t, label, min_degree)
    state.last_record = StepRecord(
        t=state.t,
        label=label,
        step=mu,
        eta=eta,
        contraction=contraction_factor(mu, cfg.beta, eta),
        inner_iters=state.inner_iters,
        min_degree=min_degree,
        below_d_min=below,
    )
    return state


def ingest(state: StreamState, label: Hashable, x: np.ndarray) -> StepRecord:
    """One slot: fold `x` into its class statistic, then step that class's estimate."""
    distance_update(state, label, x)
    online_step(state, label)
    assert state.last_record is not None
    return state.last_record


def new_state(
    n: int,
    classes: Iterable[Hashable],
    config: LearnConfig,
    mode: MemoryMode,
    *,
    inner_iters: int = 1,
    step_scale: float = 1.0,
) -> StreamState:
    return StreamState(
        n=n,
        classes=tuple(classes),
        config=config,
        mode=mode,
        inner_iters=inner_iters,
        step_scale=step_scale,
    )
