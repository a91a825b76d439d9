"""
Validated run configurations, one per CLI subcommand.

Each model accepts the flat flag values plus an optional `--config` JSON document layered on top;
`resolve` merges the two and turns validation failures into `ExperimentConfigError`.
"""

from __future__ import annotations

from collections.abc import Mapping
from pathlib import Path
from typing import Any, Literal, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from graphlearn.models.config import GraphSpec, LearnConfig, MemoryMode, StreamSegment, StreamSpec

ModelT = TypeVar("ModelT", bound=BaseModel)


class ExperimentConfigError(RuntimeError):
    pass


def _deep_merge(base: dict[str, Any], override: Mapping[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = _deep_merge(dict(merged[key]), value)
        else:
            merged[key] = value
    return merged


def resolve(model: type[ModelT], flags: Mapping[str, Any], overrides: Mapping[str, Any] | None = None) -> ModelT:
    """Validate `flags` with `overrides` (the --config document) taking precedence key by key."""
    payload = {key: value for key, value in flags.items() if value is not None}
    if overrides:
        payload = _deep_merge(payload, overrides)
    try:
        return model.model_validate(payload)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(part) for part in error['loc']) or '<root>'}: {error['msg']}" for error in exc.errors()
        )
        raise ExperimentConfigError(f"invalid {model.__name__}: {problems}") from exc


def expand_grid(learn: LearnConfig, grid: list[dict[str, Any]]) -> list[LearnConfig]:
    """One LearnConfig per grid entry (entries override `learn` key by key); no grid means `[learn]`."""
    if not grid:
        return [learn]
    configs = []
    for index, entry in enumerate(grid):
        try:
            configs.append(LearnConfig.model_validate({**learn.model_dump(), **entry}))
        except ValidationError as exc:
            raise ExperimentConfigError(f"grid entry {index} is invalid: {exc.errors()[0]['msg']}") from exc
    return configs


class _RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


def _classification_learn() -> LearnConfig:
    return LearnConfig(
        alpha=2.0, beta=0.015, gamma=0.3, accelerated=True, tol=1e-7, max_iter=5000, normalize_distances=True
    )


def _classification_grid() -> list[dict[str, Any]]:
    # The support depends on alpha * beta only; learned degrees sit near alpha / z and must stay above d_min.
    return [{"beta": beta, "gamma": gamma} for gamma in (0.1, 0.3, 0.6) for beta in (0.005, 0.015, 0.05)]


def _tracking_learn() -> LearnConfig:
    return LearnConfig(beta=0.1, gamma=0.0, accelerated=True, tol=1e-10, max_iter=20000)


class SynthRun(_RunConfig):
    graph: str = "er:p=0.1"
    n: int = Field(30, ge=2)
    signals: int = Field(100, ge=1)
    sigma: float = Field(0.05, ge=0.0)
    seed: int = Field(0, ge=0)
    perturb: float | None = Field(None, ge=0.0, le=1.0)
    stream: bool = False
    switch_at: int | None = Field(None, ge=1)
    horizon: int | None = Field(None, ge=1)
    rewire: float = Field(0.4, ge=0.0, le=1.0)

    def stream_spec(self, spec: GraphSpec) -> StreamSpec:
        horizon = self.horizon or self.signals
        if self.switch_at is None or self.switch_at >= horizon:
            segments = [StreamSegment(duration=horizon, graph=spec)]
        else:
            segments = [
                StreamSegment(duration=self.switch_at, graph=spec),
                StreamSegment(duration=horizon - self.switch_at, rewire=self.rewire, rewire_seed=self.seed + 1),
            ]
        return StreamSpec(segments=segments, sigma_e=self.sigma, seed=self.seed)


class BatchRun(_RunConfig):
    signals: Path
    others: list[Path] = Field(default_factory=list)
    learn: LearnConfig = Field(default_factory=LearnConfig)


class ClassificationExperiment(_RunConfig):
    classes: list[str] = Field(default_factory=lambda: ["er:p=0.1", "ba:m=3"], min_length=2)
    data: list[Path] = Field(default_factory=list)
    n: int = Field(60, ge=2)
    signals: int = Field(100, ge=2, description="Signals per class.")
    sigmas: list[float] = Field(default_factory=lambda: [0.5], min_length=1)
    train_fraction: float = Field(0.8, gt=0.0, lt=1.0)
    trials: int = Field(10, ge=1)
    seed: int = Field(0, ge=0)
    bandwidth: int | None = Field(None, ge=1)
    normalize: bool = False
    rewire_per_signal: float | None = Field(None, ge=0.0, le=1.0)
    select_by: Literal["accuracy", "f_measure"] = "accuracy"
    learn: LearnConfig = Field(default_factory=_classification_learn)
    grid: list[dict[str, Any]] = Field(default_factory=_classification_grid)

    @field_validator("sigmas")
    @classmethod
    def _check_sigmas(cls, value: list[float]) -> list[float]:
        if any(sigma < 0 for sigma in value):
            raise ValueError("noise levels must be >= 0")
        if len(set(value)) != len(value):
            raise ValueError("noise levels must be distinct")
        return value

    @model_validator(mode="after")
    def _check_sources(self) -> ClassificationExperiment:
        if self.data and len(self.data) < 2:
            raise ValueError("file-based classification needs one signal file per class (at least 2)")
        if self.bandwidth is not None and self.bandwidth > self.n and not self.data:
            raise ValueError(f"bandwidth {self.bandwidth} exceeds n={self.n}")
        return self

    @property
    def synthetic(self) -> bool:
        return not self.data


class OnlineRun(_RunConfig):
    stream: Path
    memory: str = "ema:0.003"
    inner_iters: int = Field(1, ge=1)
    step_scale: float = Field(1.0, gt=0.0, le=2.0)
    warmup: int = Field(5, ge=0)
    snapshot_every: int = Field(500, ge=1)
    learn: LearnConfig = Field(default_factory=LearnConfig)

    @field_validator("memory")
    @classmethod
    def _check_memory(cls, value: str) -> str:
        MemoryMode.parse(value)
        return value

    def memory_mode(self) -> MemoryMode:
        return MemoryMode.parse(self.memory)


class TrackingExperiment(_RunConfig):
    n: int = Field(30, ge=2)
    p: float = Field(0.1, gt=0.0, le=1.0)
    switch_at: int = Field(2000, ge=1)
    horizon: int | None = Field(None, ge=2)
    rewire: float = Field(0.4, ge=0.0, le=1.0)
    sigma: float = Field(0.05, ge=0.0)
    theta: float = Field(0.003, gt=0.0, lt=1.0)
    memory: str | None = None
    inner_iters: int = Field(1, ge=1)
    step_scale: float = Field(1.0, gt=0.0, le=2.0)
    warmup_signals: int = Field(5, ge=0)
    settle: int = Field(500, ge=0, description="Samples after each segment start before checkpoints count.")
    checkpoint_every: int = Field(500, ge=1)
    oracle_tol: float = Field(1e-11, gt=0.0)
    oracle_max_iter: int = Field(50000, ge=1)
    seed: int = Field(0, ge=0)
    learn: LearnConfig = Field(default_factory=_tracking_learn)
    grid: list[dict[str, Any]] = Field(default_factory=list)

    @field_validator("memory")
    @classmethod
    def _check_memory(cls, value: str | None) -> str | None:
        if value is not None:
            MemoryMode.parse(value)
        return value

    @model_validator(mode="after")
    def _check_horizon(self) -> TrackingExperiment:
        if self.total_horizon <= self.switch_at:
            raise ValueError(f"horizon {self.total_horizon} must exceed switch_at={self.switch_at}")
        return self

    @property
    def total_horizon(self) -> int:
        return self.horizon if self.horizon is not None else 2 * self.switch_at

    def memory_mode(self) -> MemoryMode:
        return MemoryMode.parse(self.memory) if self.memory else MemoryMode.ema(self.theta)

    def stream_spec(self) -> StreamSpec:
        graph = GraphSpec(kind="er", n=self.n, p=self.p, seed=self.seed)
        remaining = self.total_horizon - self.switch_at
        return StreamSpec(
            segments=[
                StreamSegment(duration=self.switch_at, graph=graph),
                StreamSegment(duration=remaining, rewire=self.rewire, rewire_seed=self.seed + 1),
            ],
            sigma_e=self.sigma,
            seed=self.seed,
        )


class EvalRun(_RunConfig):
    estimate: Path
    truth: Path
    previous: Path | None = None
    threshold: float = Field(1e-3, ge=0.0)


class TransformRun(_RunConfig):
    prices: Path
    mode: Literal["log", "rdtv"] = "log"
