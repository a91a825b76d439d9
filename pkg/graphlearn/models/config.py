from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


class LearnConfig(BaseModel):
    """
    Regularization weights and solver controls for discriminative graph learning.

    Maps 1:1 onto the flat JSON config object
    {alpha, beta, gamma, d_min, step, tol, max_iter, accelerated, edge_threshold, normalize_distances}.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: float = Field(1.0, gt=0, description="Log-barrier weight on node degrees.")
    beta: float = Field(1.0, gt=0, description="Frobenius-norm weight.")
    gamma: float = Field(0.0, ge=0, description="Discriminative weight on other classes' smoothness.")
    d_min: float = Field(1.0, gt=0, description="Degree lower bound used in the Lipschitz constant.")
    step: float | None = Field(None, gt=0, description="Fixed step size; defaults to 2/eta.")
    tol: float = Field(1e-8, ge=0, description="Relative iterate-change tolerance.")
    max_iter: int = Field(10000, ge=1)
    accelerated: bool = False
    edge_threshold: float = Field(1e-3, ge=0, description="Post-hoc pruning level for learned graphs.")
    # Divide each class distance vector by that class's signal count (batch sums are raw otherwise).
    normalize_distances: bool = False

    def lipschitz(self, n: int) -> float:
        return 4.0 * self.beta + 2.0 * self.alpha * (n - 1) / self.d_min**2

    def resolved_step(self, n: int) -> float:
        return self.step if self.step is not None else 2.0 / self.lipschitz(n)


class MemoryMode(BaseModel):
    """How streaming distance statistics forget the past: ema(theta), sliding(window) or infinite."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["ema", "sliding", "infinite"] = "ema"
    theta: float | None = None
    window: int | None = None

    @model_validator(mode="after")
    def _check_parameters(self) -> MemoryMode:
        if self.kind == "ema":
            if self.theta is None or not 0.0 < self.theta < 1.0:
                raise ValueError("ema memory needs theta strictly inside (0, 1)")
        if self.kind == "sliding":
            if self.window is None or self.window < 1:
                raise ValueError("sliding memory needs window >= 1")
        return self

    @classmethod
    def ema(cls, theta: float) -> MemoryMode:
        return cls(kind="ema", theta=theta)

    @classmethod
    def sliding(cls, window: int) -> MemoryMode:
        return cls(kind="sliding", window=window)

    @classmethod
    def infinite(cls) -> MemoryMode:
        return cls(kind="infinite")

    @classmethod
    def parse(cls, text: str) -> MemoryMode:
        """Parse `ema:0.003`, `sliding:50` or `infinite`."""
        kind, _, value = text.strip().partition(":")
        kind = kind.strip().lower()
        if kind == "ema":
            return cls.ema(float(value))
        if kind == "sliding":
            return cls.sliding(int(value))
        if kind == "infinite":
            return cls.infinite()
        raise ValueError(f"Unknown memory mode: {text!r}")


class GraphSpec(BaseModel):
    """Random graph family: Erdos-Renyi er(p) or Barabasi-Albert ba(m)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["er", "ba"]
    n: int = Field(..., ge=2)
    p: float | None = None
    m: int | None = None
    seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _check_family(self) -> GraphSpec:
        if self.kind == "er" and (self.p is None or not 0.0 < self.p <= 1.0):
            raise ValueError("er graphs need an edge probability p in (0, 1]")
        if self.kind == "ba" and (self.m is None or not 1 <= self.m < self.n):
            raise ValueError("ba graphs need 1 <= m < n")
        return self

    def with_seed(self, seed: int) -> GraphSpec:
        return self.model_copy(update={"seed": seed})

    def label(self) -> str:
        return f"er:p={self.p:g}" if self.kind == "er" else f"ba:m={self.m}"


class StreamSegment(BaseModel):
    """One piecewise-constant stretch of a stream: a fresh graph, or a rewiring of the previous one."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    duration: int = Field(..., ge=1)
    graph: GraphSpec | None = None
    rewire: float | None = Field(None, ge=0.0, le=1.0)
    rewire_seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _check_source(self) -> StreamSegment:
        if (self.graph is None) == (self.rewire is None):
            raise ValueError("a segment needs exactly one of `graph` or `rewire`")
        return self


class StreamSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    segments: list[StreamSegment] = Field(..., min_length=1)
    sigma_e: float = Field(0.0, ge=0.0)
    seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _check_first_segment(self) -> StreamSpec:
        if self.segments[0].graph is None:
            raise ValueError("the first segment must define a graph")
        sizes = {segment.graph.n for segment in self.segments if segment.graph is not None}
        if len(sizes) > 1:
            raise ValueError(f"all segment graphs must share n, got {sorted(sizes)}")
        return self

    @property
    def horizon(self) -> int:
        return sum(segment.duration for segment in self.segments)

    @property
    def n(self) -> int:
        first = self.segments[0].graph
        assert first is not None
        return first.n
