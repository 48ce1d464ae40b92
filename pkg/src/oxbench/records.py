"""Episode-level domain records produced by ingestion.

All records are immutable after construction and safe to share across
threads. Observation values are float vectors (tuples), ImageData, or
text; action values are float vectors only. Floats are always 64-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class ImageData:
    """Row-major, channel-interleaved raster."""

    width: int
    height: int
    channels: int
    data: bytes

    def __post_init__(self):
        if self.channels not in (1, 2, 3, 4):
            raise ValueError(f"channels must be in 1..4, got {self.channels}")
        expect = self.width * self.height * self.channels
        if len(self.data) != expect:
            raise ValueError(f"image data length {len(self.data)} != w*h*c = {expect}")


@dataclass(frozen=True)
class StepRecord:
    observation: dict[str, object] = field(default_factory=dict)
    action: dict[str, tuple[float, ...]] = field(default_factory=dict)
    is_terminal: bool = False

    def float_observations(self) -> dict[str, tuple[float, ...]]:
        return {k: v for k, v in self.observation.items() if isinstance(v, tuple)}

    def image_observations(self) -> dict[str, ImageData]:
        return {k: v for k, v in self.observation.items() if isinstance(v, ImageData)}


@dataclass(frozen=True)
class EpisodeRecord:
    episode_id: str
    steps: tuple[StepRecord, ...]
    instruction: str | None = None

    def __post_init__(self):
        if not self.steps:
            raise ValueError(f"episode {self.episode_id!r} has no steps")
