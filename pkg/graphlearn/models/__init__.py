"""
Domain models shared across the library, experiments and scripts.
"""

from graphlearn.models.config import GraphSpec, LearnConfig, MemoryMode, StreamSegment, StreamSpec
from graphlearn.models.graph import DistanceVector, EdgeVector, GftBasis, SignalMatrix, pair_count

__all__ = [
    "DistanceVector",
    "EdgeVector",
    "GftBasis",
    "GraphSpec",
    "LearnConfig",
    "MemoryMode",
    "SignalMatrix",
    "StreamSegment",
    "StreamSpec",
    "pair_count",
]
