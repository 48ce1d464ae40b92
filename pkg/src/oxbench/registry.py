"""Dataset registry: descriptors, curation, and deterministic eval splits.

The registry file is a versioned JSON document. Curation implements the
duplicate rule (identical feature tuple on the same robot platform keeps
only the larger-episode-count dataset) plus explicit exclusions. Eval
splits are selected by keyed-hash ranking so membership is a pure function
of (seed, dataset, episode id) and survives machine and ordering changes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Iterable, Sequence

from .actionspace import ActionSpaceSpec, ActionStats, format_signature, parse_signature
from .errors import PredefinedSplitExists, UnknownDataset
from .ingest import KeyMapping
from .rng import fnv1a64

REGISTRY_VERSION = 1

GRIPPER_MODES = ("none", "binary", "ternary", "continuous", "torque_scale")
UNNORMALIZE_MODES = ("none", "percentile")


@dataclass(frozen=True)
class ConversionSpec:
    """Model-output conversions a dataset requires, declared as data."""

    gripper_mode: str = "none"
    strip_terminal: bool = False
    unnormalize: str = "none"

    def __post_init__(self):
        if self.gripper_mode not in GRIPPER_MODES:
            raise ValueError(f"unknown gripper_mode {self.gripper_mode!r}")
        if self.unnormalize not in UNNORMALIZE_MODES:
            raise ValueError(f"unknown unnormalize mode {self.unnormalize!r}")

    def to_dict(self) -> dict:
        return {
            "gripper_mode": self.gripper_mode,
            "strip_terminal": self.strip_terminal,
            "unnormalize": self.unnormalize,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConversionSpec":
        return cls(
            gripper_mode=d.get("gripper_mode", "none"),
            strip_terminal=bool(d.get("strip_terminal", False)),
            unnormalize=d.get("unnormalize", "none"),
        )


@dataclass(frozen=True)
class DatasetDescriptor:
    name: str
    registered_name: str
    robot_model: str
    gripper_spec: str
    action_space: ActionSpaceSpec
    rgb_cameras: int = 0
    depth_cameras: int = 0
    wrist_cameras: int = 0
    has_language: bool = False
    has_calibration: bool = False
    has_proprio: bool = False
    episode_count: int = 1
    key_mapping: KeyMapping = field(default_factory=KeyMapping)
    has_predefined_eval_split: bool = False
    task_description: str | None = None
    conversions: ConversionSpec = field(default_factory=ConversionSpec)
    dim_descriptions: tuple[str, ...] = ()
    official_stats: ActionStats | None = None

    def __post_init__(self):
        if self.episode_count < 1:
            raise ValueError(f"{self.registered_name}: episode_count must be >= 1")

    def to_dict(self) -> dict:
        d: dict = {
            "name": self.name,
            "registered_name": self.registered_name,
            "robot_model": self.robot_model,
            "gripper_spec": self.gripper_spec,
            "action_space": format_signature(self.action_space),
            "rgb_cameras": self.rgb_cameras,
            "depth_cameras": self.depth_cameras,
            "wrist_cameras": self.wrist_cameras,
            "has_language": self.has_language,
            "has_calibration": self.has_calibration,
            "has_proprio": self.has_proprio,
            "episode_count": self.episode_count,
            "key_mapping": self.key_mapping.to_dict(),
            "has_predefined_eval_split": self.has_predefined_eval_split,
            "conversions": self.conversions.to_dict(),
        }
        if self.task_description is not None:
            d["task_description"] = self.task_description
        if self.dim_descriptions:
            d["dim_descriptions"] = list(self.dim_descriptions)
        if self.official_stats is not None:
            d["official_stats"] = self.official_stats.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetDescriptor":
        return cls(
            name=d["name"],
            registered_name=d["registered_name"],
            robot_model=d["robot_model"],
            gripper_spec=d["gripper_spec"],
            action_space=parse_signature(d["action_space"]),
            rgb_cameras=int(d.get("rgb_cameras", 0)),
            depth_cameras=int(d.get("depth_cameras", 0)),
            wrist_cameras=int(d.get("wrist_cameras", 0)),
            has_language=bool(d.get("has_language", False)),
            has_calibration=bool(d.get("has_calibration", False)),
            has_proprio=bool(d.get("has_proprio", False)),
            episode_count=int(d.get("episode_count", 1)),
            key_mapping=KeyMapping.from_dict(d.get("key_mapping", {})),
            has_predefined_eval_split=bool(d.get("has_predefined_eval_split", False)),
            task_description=d.get("task_description"),
            conversions=ConversionSpec.from_dict(d.get("conversions", {})),
            dim_descriptions=tuple(d.get("dim_descriptions", ())),
            official_stats=(
                ActionStats.from_dict(d["official_stats"]) if d.get("official_stats") else None
            ),
        )


@dataclass(frozen=True)
class CurationDecision:
    kept: tuple[str, ...]
    dropped: tuple[tuple[str, str], ...]  # (registered_name, reason)

    def dropped_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.dropped)


@dataclass(frozen=True)
class EvalSplit:
    dataset: str
    episode_ids: tuple[str, ...]
    fraction: float
    seed: int


def feature_tuple(d: DatasetDescriptor) -> tuple:
    """The comparable curation tuple; excludes name and episode_count."""
    return (
        d.robot_model,
        d.gripper_spec,
        format_signature(d.action_space),
        d.rgb_cameras,
        d.depth_cameras,
        d.wrist_cameras,
        d.has_language,
        d.has_calibration,
        d.has_proprio,
    )


def dedupe_datasets(registry: Sequence[DatasetDescriptor]) -> CurationDecision:
    """Within each feature-tuple group keep only the descriptor with the
    most episodes; ties break to the lexicographically smaller name."""
    groups: dict[tuple, list[DatasetDescriptor]] = {}
    for d in registry:
        groups.setdefault(feature_tuple(d), []).append(d)
    kept: list[str] = []
    dropped: list[tuple[str, str]] = []
    for members in groups.values():
        winner = min(members, key=lambda d: (-d.episode_count, d.registered_name))
        kept.append(winner.registered_name)
        for d in members:
            if d is not winner:
                dropped.append((d.registered_name, f"duplicate-of:{winner.registered_name}"))
    order = {d.registered_name: i for i, d in enumerate(registry)}
    return CurationDecision(
        kept=tuple(sorted(kept, key=order.__getitem__)),
        dropped=tuple(sorted(dropped, key=lambda item: order[item[0]])),
    )


def exclude_datasets(
    registry: Sequence[DatasetDescriptor],
    exclusion_list: Sequence[tuple[str, str]],
) -> CurationDecision:
    by_name = {d.registered_name for d in registry}
    reasons = {}
    for name, reason in exclusion_list:
        if name not in by_name:
            raise UnknownDataset(name)
        reasons[name] = reason
    kept = tuple(d.registered_name for d in registry if d.registered_name not in reasons)
    dropped = tuple((d.registered_name, reasons[d.registered_name]) for d in registry if d.registered_name in reasons)
    return CurationDecision(kept=kept, dropped=dropped)


def split_rank_hash(seed: int, registered_name: str, episode_id: str) -> int:
    payload = (
        (seed & ((1 << 64) - 1)).to_bytes(8, "little")
        + registered_name.encode("utf-8")
        + b"\x00"
        + episode_id.encode("utf-8")
    )
    return fnv1a64(payload)


def make_eval_split(
    d: DatasetDescriptor,
    episode_ids: Sequence[str],
    fraction: float,
    seed: int,
) -> EvalSplit:
    """Select max(1, floor(fraction*N)) episode ids by ascending keyed hash.

    The selection depends only on (seed, registered_name, id set): stable
    across runs, platforms, and input-order permutations.
    """
    if d.has_predefined_eval_split:
        raise PredefinedSplitExists(d.registered_name)
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    if not episode_ids:
        raise ValueError("no episode ids to split")
    count = max(1, int(fraction * len(episode_ids)))
    ranked = sorted(episode_ids, key=lambda eid: (split_rank_hash(seed, d.registered_name, eid), eid))
    return EvalSplit(
        dataset=d.registered_name,
        episode_ids=tuple(ranked[:count]),
        fraction=fraction,
        seed=seed,
    )


# --- registry file I/O ---------------------------------------------------------


@dataclass(frozen=True)
class Registry:
    datasets: tuple[DatasetDescriptor, ...]
    version: int = REGISTRY_VERSION

    def __post_init__(self):
        names = [d.registered_name for d in self.datasets]
        if len(set(names)) != len(names):
            raise ValueError("registered_name values must be unique")

    def get(self, registered_name: str) -> DatasetDescriptor:
        for d in self.datasets:
            if d.registered_name == registered_name:
                return d
        raise UnknownDataset(registered_name)

    def names(self) -> tuple[str, ...]:
        return tuple(d.registered_name for d in self.datasets)

    def subset(self, names: Iterable[str]) -> "Registry":
        return Registry(datasets=tuple(self.get(n) for n in names), version=self.version)

    def with_dataset(self, descriptor: DatasetDescriptor) -> "Registry":
        return replace(self, datasets=self.datasets + (descriptor,))


def registry_to_json(registry: Registry) -> str:
    doc = {"version": registry.version, "datasets": [d.to_dict() for d in registry.datasets]}
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def registry_from_json(text: str) -> Registry:
    doc = json.loads(text)
    return Registry(
        version=int(doc.get("version", REGISTRY_VERSION)),
        datasets=tuple(DatasetDescriptor.from_dict(d) for d in doc.get("datasets", [])),
    )


def load_registry(path) -> Registry:
    with open(path, "r", encoding="utf-8") as f:
        return registry_from_json(f.read())


def save_registry(registry: Registry, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(registry_to_json(registry))


def load_bundled_registry() -> Registry:
    """The 20 evaluation datasets, keyed by their public registry names."""
    text = resources.files("oxbench.data").joinpath("openx_registry.json").read_text("utf-8")
    return registry_from_json(text)
