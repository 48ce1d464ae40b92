"""Episode assembly from framed feature maps and the JSON-lines fixture format.

Two ingestion paths produce identical EpisodeRecord semantics:

* TFRecord files hold feature-map records, grouped into episodes according
  to the dataset's key mapping (one record per step with boundary markers,
  or one record per episode with step groups sliced by a step count).
* JSON-lines fixtures hold one canonical episode object per line.

Both widen every float to 64-bit and reject non-finite values.
"""

from __future__ import annotations

import base64
import io
import json
import math
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Iterator

from . import example_proto as ep
from .errors import (
    ImageDecodeError,
    InvalidFeatureKind,
    MissingRequiredKey,
    NonFiniteValue,
    SchemaViolation,
)
from .records import EpisodeRecord, ImageData, StepRecord
from .tfrecord import parse_tfrecord_stream

PER_STEP = "per_step"
PER_EPISODE = "per_episode"

_PNG_MODES = {"L": 1, "LA": 2, "RGB": 3, "RGBA": 4}


@dataclass(frozen=True)
class ImageKeySpec:
    feature_key: str
    view: str
    encoding: str = "raw"  # raw | png
    width: int | None = None
    height: int | None = None
    channels: int | None = None


@dataclass(frozen=True)
class KeyMapping:
    """Per-dataset table naming which feature keys mean what.

    Key names vary wildly across datasets (`agentview_rgb`,
    `frontright_fisheye_image`, ...), so the mapping is data, not code.
    """

    layout: str = PER_STEP
    observation_keys: dict[str, str] = field(default_factory=dict)
    action_keys: tuple[str, ...] = ("action",)
    image_keys: tuple[ImageKeySpec, ...] = ()
    primary_view: str | None = None
    instruction_key: str | None = None
    terminal_key: str | None = None
    episode_id_key: str | None = None
    boundary_key: str | None = None  # per_step: int64 marker feature
    boundary_mode: str = "last"  # value!=0 marks last (or first) step of an episode
    step_count_key: str | None = None  # per_episode: int64 step count

    @classmethod
    def from_dict(cls, d: dict) -> "KeyMapping":
        images = tuple(
            ImageKeySpec(
                feature_key=i["feature_key"],
                view=i.get("view", i["feature_key"]),
                encoding=i.get("encoding", "raw"),
                width=i.get("width"),
                height=i.get("height"),
                channels=i.get("channels"),
            )
            for i in d.get("image_keys", ())
        )
        boundary = d.get("boundary") or {}
        return cls(
            layout=d.get("layout", PER_STEP),
            observation_keys=dict(d.get("observation_keys", {})),
            action_keys=tuple(d.get("action_keys", ("action",))),
            image_keys=images,
            primary_view=d.get("primary_view") or (images[0].view if images else None),
            instruction_key=d.get("instruction_key"),
            terminal_key=d.get("terminal_key"),
            episode_id_key=d.get("episode_id_key"),
            boundary_key=boundary.get("key"),
            boundary_mode=boundary.get("mode", "last"),
            step_count_key=d.get("step_count_key"),
        )

    def to_dict(self) -> dict:
        d: dict = {
            "layout": self.layout,
            "observation_keys": dict(self.observation_keys),
            "action_keys": list(self.action_keys),
            "image_keys": [
                {
                    k: v
                    for k, v in (
                        ("feature_key", i.feature_key),
                        ("view", i.view),
                        ("encoding", i.encoding),
                        ("width", i.width),
                        ("height", i.height),
                        ("channels", i.channels),
                    )
                    if v is not None
                }
                for i in self.image_keys
            ],
        }
        if self.primary_view:
            d["primary_view"] = self.primary_view
        for name in ("instruction_key", "terminal_key", "episode_id_key", "step_count_key"):
            if getattr(self, name) is not None:
                d[name] = getattr(self, name)
        if self.boundary_key:
            d["boundary"] = {"key": self.boundary_key, "mode": self.boundary_mode}
        return d


def _require_finite(values: Iterable[float], key: str, step_index: int) -> tuple[float, ...]:
    out = tuple(float(v) for v in values)
    for v in out:
        if not math.isfinite(v):
            raise NonFiniteValue(key, step_index)
    return out


def decode_image(data: bytes, spec: ImageKeySpec, step_index: int) -> ImageData:
    if spec.encoding == "raw":
        if spec.width is None or spec.height is None or spec.channels is None:
            raise ImageDecodeError(spec.feature_key, step_index, "raw encoding needs width/height/channels")
        expect = spec.width * spec.height * spec.channels
        if len(data) != expect:
            raise ImageDecodeError(spec.feature_key, step_index, f"raw length {len(data)} != {expect}")
        return ImageData(spec.width, spec.height, spec.channels, data)
    if spec.encoding == "png":
        from PIL import Image as PILImage

        try:
            img = PILImage.open(io.BytesIO(data))
            img.load()
        except Exception as exc:
            raise ImageDecodeError(spec.feature_key, step_index, str(exc)) from None
        if img.mode not in _PNG_MODES:
            raise ImageDecodeError(spec.feature_key, step_index, f"unsupported PNG mode {img.mode}")
        return ImageData(img.width, img.height, _PNG_MODES[img.mode], img.tobytes())
    raise ImageDecodeError(spec.feature_key, step_index, f"unknown encoding {spec.encoding!r}")


def _vector_from_feature(feat: ep.Feature, key: str, step_index: int) -> tuple[float, ...]:
    if feat.kind == ep.BYTES_KIND:
        raise InvalidFeatureKind(key, "bytes feature where a numeric vector was expected")
    return _require_finite(feat.values, key, step_index)


def _text_from_feature(feat: ep.Feature, key: str) -> str:
    if feat.kind != ep.BYTES_KIND or not feat.values:
        raise InvalidFeatureKind(key, "expected a non-empty bytes feature for text")
    try:
        return feat.values[0].decode("utf-8")
    except UnicodeDecodeError:
        raise InvalidFeatureKind(key, "text is not valid UTF-8") from None


def _step_from_features(fm: ep.FeatureMap, mapping: KeyMapping, step_index: int) -> StepRecord:
    observation: dict[str, object] = {}
    for fkey, canonical in sorted(mapping.observation_keys.items()):
        feat = fm.get(fkey)
        if feat is None:
            continue  # absent stays absent, never defaulted
        if feat.kind == ep.BYTES_KIND:
            observation[canonical] = _text_from_feature(feat, fkey)
        else:
            observation[canonical] = _vector_from_feature(feat, fkey, step_index)
    for spec in mapping.image_keys:
        feat = fm.get(spec.feature_key)
        if feat is None:
            continue
        if feat.kind != ep.BYTES_KIND or not feat.values:
            raise InvalidFeatureKind(spec.feature_key, "image feature must be a non-empty bytes list")
        observation[spec.view] = decode_image(feat.values[0], spec, step_index)
    action: dict[str, tuple[float, ...]] = {}
    for akey in mapping.action_keys:
        feat = fm.get(akey)
        if feat is None:
            raise MissingRequiredKey(akey)
        action[akey] = _vector_from_feature(feat, akey, step_index)
    is_terminal = False
    if mapping.terminal_key is not None:
        feat = fm.get(mapping.terminal_key)
        if feat is not None and feat.values:
            is_terminal = bool(feat.values[0])
    return StepRecord(observation=observation, action=action, is_terminal=is_terminal)


def _slice_per_episode(fm: ep.FeatureMap, mapping: KeyMapping) -> list[ep.FeatureMap]:
    if mapping.step_count_key is None:
        raise InvalidFeatureKind("step_count_key", "per_episode layout requires a step-count key")
    count_feat = fm.get(mapping.step_count_key)
    if count_feat is None:
        raise MissingRequiredKey(mapping.step_count_key)
    if count_feat.kind != ep.INT64_KIND or not count_feat.values:
        raise InvalidFeatureKind(mapping.step_count_key, "step count must be a single int64")
    n = int(count_feat.values[0])
    if n < 1:
        raise InvalidFeatureKind(mapping.step_count_key, f"step count must be >= 1, got {n}")
    per_step_keys = set(mapping.observation_keys) | set(mapping.action_keys)
    if mapping.terminal_key:
        per_step_keys.add(mapping.terminal_key)
    image_keys = {i.feature_key for i in mapping.image_keys}
    steps = [dict() for _ in range(n)]
    for key, feat in fm.entries.items():
        if key in image_keys:
            if len(feat.values) != n:
                raise InvalidFeatureKind(key, f"image list has {len(feat.values)} entries for {n} steps")
            for i in range(n):
                steps[i][key] = ep.Feature(feat.kind, (feat.values[i],))
        elif key in per_step_keys:
            if feat.kind == ep.BYTES_KIND:
                if len(feat.values) != n:
                    raise InvalidFeatureKind(key, f"text list has {len(feat.values)} entries for {n} steps")
                for i in range(n):
                    steps[i][key] = ep.Feature(feat.kind, (feat.values[i],))
            else:
                if len(feat.values) % n:
                    raise InvalidFeatureKind(key, f"list length {len(feat.values)} not divisible by {n} steps")
                width = len(feat.values) // n
                for i in range(n):
                    steps[i][key] = ep.Feature(feat.kind, feat.values[i * width : (i + 1) * width])
    return [ep.FeatureMap(entries=s) for s in steps]


def assemble_episode(
    features: Iterable[ep.FeatureMap],
    mapping: KeyMapping,
    default_episode_id: str,
) -> EpisodeRecord:
    """Build one EpisodeRecord from the feature maps of a single episode.

    For the per-step layout `features` holds one map per step; for the
    per-episode layout it holds exactly one map carrying step groups.
    """
    maps = list(features)
    if mapping.layout == PER_EPISODE:
        if len(maps) != 1:
            raise InvalidFeatureKind("<layout>", f"per_episode layout expects 1 record, got {len(maps)}")
        episode_fm = maps[0]
        step_maps = _slice_per_episode(episode_fm, mapping)
    else:
        episode_fm = maps[0] if maps else ep.FeatureMap()
        step_maps = maps
    if not step_maps:
        raise InvalidFeatureKind("<layout>", "episode has no steps")

    steps = tuple(_step_from_features(fm, mapping, i) for i, fm in enumerate(step_maps))

    instruction = None
    if mapping.instruction_key is not None:
        source = episode_fm if mapping.layout == PER_EPISODE else step_maps[0]
        feat = source.get(mapping.instruction_key)
        if feat is not None and feat.values:
            instruction = _text_from_feature(feat, mapping.instruction_key)

    episode_id = default_episode_id
    if mapping.episode_id_key is not None:
        source = episode_fm if mapping.layout == PER_EPISODE else step_maps[0]
        feat = source.get(mapping.episode_id_key)
        if feat is not None and feat.values:
            episode_id = _text_from_feature(feat, mapping.episode_id_key)

    return EpisodeRecord(episode_id=episode_id, steps=steps, instruction=instruction)


def iter_tfrecord_episodes(source: BinaryIO, mapping: KeyMapping) -> Iterator[EpisodeRecord]:
    """Stream episodes out of a TFRecord stream; memory stays bounded by
    one episode (per-step layout) or one record (per-episode layout)."""
    seen: set[str] = set()
    index = 0

    def emit(maps: list[ep.FeatureMap]) -> EpisodeRecord:
        nonlocal index
        episode = assemble_episode(maps, mapping, default_episode_id=f"ep-{index:06d}")
        index += 1
        if episode.episode_id in seen:
            raise InvalidFeatureKind(
                mapping.episode_id_key or "<episode_id>", f"duplicate episode id {episode.episode_id!r}"
            )
        seen.add(episode.episode_id)
        return episode

    if mapping.layout == PER_EPISODE:
        for record in parse_tfrecord_stream(source):
            yield emit([ep.decode_example(record)])
        return

    pending: list[ep.FeatureMap] = []
    for record in parse_tfrecord_stream(source):
        fm = ep.decode_example(record)
        marker = False
        if mapping.boundary_key is not None:
            feat = fm.get(mapping.boundary_key)
            marker = bool(feat.values[0]) if feat is not None and feat.values else False
        if mapping.boundary_mode == "first" and marker and pending:
            yield emit(pending)
            pending = []
        pending.append(fm)
        if mapping.boundary_mode == "last" and marker:
            yield emit(pending)
            pending = []
    if pending:  # stream end closes the final episode
        yield emit(pending)


def load_tfrecord_episodes(path, mapping: KeyMapping) -> Iterator[EpisodeRecord]:
    with open(path, "rb") as f:
        yield from iter_tfrecord_episodes(f, mapping)


# --- JSON-lines fixture path --------------------------------------------------


def _reject_constant(name: str):
    raise ValueError(f"non-finite JSON constant {name}")


def _jsonl_vector(value, line: int, where: str) -> tuple[float, ...]:
    if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise SchemaViolation(line, f"{where} must be a list of numbers")
    out = tuple(float(v) for v in value)
    if any(not math.isfinite(v) for v in out):
        raise SchemaViolation(line, f"{where} contains a non-finite value")
    return out


def _jsonl_image(obj: dict, line: int, where: str) -> ImageData:
    for fieldname in ("w", "h", "c", "b64"):
        if fieldname not in obj:
            raise SchemaViolation(line, f"{where} image missing {fieldname!r}")
    try:
        data = base64.b64decode(obj["b64"], validate=True)
    except Exception:
        raise SchemaViolation(line, f"{where} image has invalid base64") from None
    try:
        return ImageData(int(obj["w"]), int(obj["h"]), int(obj["c"]), data)
    except ValueError as exc:
        raise SchemaViolation(line, f"{where}: {exc}") from None


def _episode_from_json(obj, line: int, seen: set[str]) -> EpisodeRecord:
    if not isinstance(obj, dict):
        raise SchemaViolation(line, "episode must be a JSON object")
    if "episode_id" not in obj or not isinstance(obj["episode_id"], str):
        raise SchemaViolation(line, "missing or non-string 'episode_id'")
    episode_id = obj["episode_id"]
    if episode_id in seen:
        raise SchemaViolation(line, f"duplicate episode_id {episode_id!r}")
    seen.add(episode_id)
    instruction = obj.get("instruction")
    if instruction is not None and not isinstance(instruction, str):
        raise SchemaViolation(line, "'instruction' must be a string or null")
    if "steps" not in obj or not isinstance(obj["steps"], list) or not obj["steps"]:
        raise SchemaViolation(line, "missing or empty 'steps'")
    steps = []
    for i, step in enumerate(obj["steps"]):
        if not isinstance(step, dict):
            raise SchemaViolation(line, f"step {i} must be an object")
        obs_in = step.get("observation", {})
        act_in = step.get("action")
        if not isinstance(obs_in, dict):
            raise SchemaViolation(line, f"step {i} observation must be an object")
        if not isinstance(act_in, dict) or not act_in:
            raise SchemaViolation(line, f"step {i} missing 'action'")
        observation: dict[str, object] = {}
        for key, value in obs_in.items():
            where = f"step {i} observation {key!r}"
            if isinstance(value, str):
                observation[key] = value
            elif isinstance(value, dict):
                if "image" not in value or not isinstance(value["image"], dict):
                    raise SchemaViolation(line, f"{where} object must hold an 'image'")
                observation[key] = _jsonl_image(value["image"], line, where)
            else:
                observation[key] = _jsonl_vector(value, line, where)
        action = {
            key: _jsonl_vector(value, line, f"step {i} action {key!r}") for key, value in act_in.items()
        }
        is_terminal = step.get("is_terminal", False)
        if not isinstance(is_terminal, bool):
            raise SchemaViolation(line, f"step {i} 'is_terminal' must be a boolean")
        steps.append(StepRecord(observation=observation, action=action, is_terminal=is_terminal))
    return EpisodeRecord(episode_id=episode_id, steps=tuple(steps), instruction=instruction)


def load_jsonl_episodes(path) -> Iterator[EpisodeRecord]:
    """Parse a JSON-lines episode fixture. Raises SchemaViolation with the
    1-based line number on any malformed line."""
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line, parse_constant=_reject_constant)
            except ValueError as exc:
                raise SchemaViolation(line_number, f"invalid JSON: {exc}") from None
            yield _episode_from_json(obj, line_number, seen)
