"""End-to-end evaluation runs.

Per dataset: ingest the eval split, build zero-shot per-step requests,
drive one adapter session, apply the dataset's declared model-output
conversions, and aggregate metrics. Dataset failures are isolated; the
manifest records them alongside the successful reports.

Fallback randomness is seeded per dataset (derived from the run seed and
the dataset name), so adding, removing, or failing one dataset never
changes any other dataset's numbers.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import PROTOCOL_VERSION, __version__
from . import actionspace as asp
from .adapter import ALL_VIEWS, PRIMARY_ONLY, AdapterRequest, to_four_channel, select_images
from .errors import ConfigError, LengthMismatch, NoImageAvailable, OxbenchError
from .ingest import load_jsonl_episodes, load_tfrecord_episodes
from .metrics import (
    MetricReport,
    StepPair,
    aggregate_report,
    flatten_action,
    trajectory_result,
)
from .records import EpisodeRecord
from .registry import DatasetDescriptor, Registry, load_registry, make_eval_split
from .rng import Xoshiro256StarStar, derive_seed
from .session import MODE_EVAL, MODE_VERIFY, open_endpoint, run_adapter_session

DEFAULT_SPLIT_FRACTION = 0.05  # harness default, overridable per run
DEFAULT_EPSILON = 1e-2


@dataclass(frozen=True)
class RunConfig:
    registry_path: str
    data_dir: str
    output_dir: str
    adapter: str | tuple[str, ...]
    datasets: tuple[str, ...] = ()
    image_policy: str = PRIMARY_ONLY
    split_fraction: float = DEFAULT_SPLIT_FRACTION
    split_seed: int = 0
    completion_epsilon: float = DEFAULT_EPSILON
    fallback_seed: int = 0
    mode: str = MODE_EVAL
    timeout: float = 60.0
    workers: int = 1
    four_channel_images: bool = False

    def __post_init__(self):
        if self.mode not in (MODE_EVAL, MODE_VERIFY):
            raise ConfigError(f"mode must be eval or verify, got {self.mode!r}")
        if self.image_policy not in (PRIMARY_ONLY, ALL_VIEWS):
            raise ConfigError(f"unknown image policy {self.image_policy!r}")
        if not 0.0 < self.split_fraction < 1.0:
            raise ConfigError("split_fraction must be in (0, 1)")
        if self.completion_epsilon < 0:
            raise ConfigError("completion_epsilon must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def to_dict(self) -> dict:
        d = {
            "registry_path": self.registry_path,
            "data_dir": self.data_dir,
            "output_dir": self.output_dir,
            "adapter": list(self.adapter) if not isinstance(self.adapter, str) else self.adapter,
            "datasets": list(self.datasets),
            "image_policy": self.image_policy,
            "split_fraction": self.split_fraction,
            "split_seed": self.split_seed,
            "completion_epsilon": self.completion_epsilon,
            "fallback_seed": self.fallback_seed,
            "mode": self.mode,
            "timeout": self.timeout,
            "workers": self.workers,
            "four_channel_images": self.four_channel_images,
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {
            "registry_path",
            "data_dir",
            "output_dir",
            "adapter",
            "datasets",
            "image_policy",
            "split_fraction",
            "split_seed",
            "completion_epsilon",
            "fallback_seed",
            "mode",
            "timeout",
            "workers",
            "four_channel_images",
        }
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        for required in ("registry_path", "data_dir", "output_dir", "adapter"):
            if required not in d:
                raise ConfigError(f"config missing required field {required!r}")
        adapter = d["adapter"]
        if isinstance(adapter, list):
            adapter = tuple(adapter)
        return cls(
            registry_path=d["registry_path"],
            data_dir=d["data_dir"],
            output_dir=d["output_dir"],
            adapter=adapter,
            datasets=tuple(d.get("datasets", ())),
            image_policy=d.get("image_policy", PRIMARY_ONLY),
            split_fraction=float(d.get("split_fraction", DEFAULT_SPLIT_FRACTION)),
            split_seed=int(d.get("split_seed", 0)),
            completion_epsilon=float(d.get("completion_epsilon", DEFAULT_EPSILON)),
            fallback_seed=int(d.get("fallback_seed", 0)),
            mode=d.get("mode", MODE_EVAL),
            timeout=float(d.get("timeout", 60.0)),
            workers=int(d.get("workers", 1)),
            four_channel_images=bool(d.get("four_channel_images", False)),
        )


@dataclass
class DatasetOutcome:
    name: str
    report: MetricReport | None = None
    error: str | None = None
    seconds: float = 0.0


@dataclass
class RunManifest:
    config: dict
    reports: list[MetricReport]
    failures: dict[str, str]
    timings: dict[str, float]
    harness_version: str
    content_hash: str
    adapter_name: str

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "reports": [r.to_dict() for r in self.reports],
            "failures": dict(self.failures),
            "timings": dict(self.timings),
            "harness_version": self.harness_version,
            "content_hash": self.content_hash,
            "adapter_name": self.adapter_name,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        return cls(
            config=dict(d["config"]),
            reports=[MetricReport.from_dict(r) for r in d.get("reports", [])],
            failures=dict(d.get("failures", {})),
            timings=dict(d.get("timings", {})),
            harness_version=d.get("harness_version", ""),
            content_hash=d.get("content_hash", ""),
            adapter_name=d.get("adapter_name", ""),
        )


def data_file_for(config_data_dir: str, registered_name: str) -> Path:
    base = Path(config_data_dir)
    for suffix in (".jsonl", ".tfrecord"):
        candidate = base / f"{registered_name}{suffix}"
        if candidate.exists():
            return candidate
    raise ConfigError(f"no data file for {registered_name!r} under {config_data_dir}")


def load_episodes(path: Path, descriptor: DatasetDescriptor) -> list[EpisodeRecord]:
    if path.suffix == ".jsonl":
        return list(load_jsonl_episodes(path))
    return list(load_tfrecord_episodes(path, descriptor.key_mapping))


def _select_split(episodes: list[EpisodeRecord], d: DatasetDescriptor, config: RunConfig) -> list[EpisodeRecord]:
    if d.has_predefined_eval_split:
        return episodes  # the file is the eval split
    split = make_eval_split(d, [e.episode_id for e in episodes], config.split_fraction, config.split_seed)
    by_id = {e.episode_id: e for e in episodes}
    return [by_id[eid] for eid in split.episode_ids]


@dataclass
class ConversionCounters:
    range_violations: int = 0
    degenerate_dims: int = 0
    images_missing: int = 0


def _clamp_unit(value: float, counters: ConversionCounters) -> float:
    if value < 0.0 or value > 1.0:
        counters.range_violations += 1
        return min(1.0, max(0.0, value))
    return value


def apply_conversions(
    predicted: Sequence[float],
    descriptor: DatasetDescriptor,
    spec: asp.ActionSpaceSpec,
    stats: asp.ActionStats,
    counters: ConversionCounters,
) -> tuple[float, ...]:
    """Map a raw model output into the dataset's action space.

    Gripper modes touch only gripper/torque dimensions; percentile
    unnormalization touches every dimension. Raw values heading into a
    [0, 1]-domain conversion are clamped and counted, never propagated.
    """
    conv = descriptor.conversions
    out = list(float(v) for v in predicted)
    if conv.unnormalize == "percentile":
        for d in range(len(out)):
            lo, hi = stats.q01[d], stats.q99[d]
            if hi > lo:
                value = out[d]
                if value < -1.0 or value > 1.0:
                    counters.range_violations += 1
                    value = min(1.0, max(-1.0, value))
                out[d] = asp.unnormalize_percentile(value, lo, hi)
            else:
                counters.degenerate_dims += 1
    if conv.gripper_mode != "none":
        for d, dim in enumerate(spec.dims):
            if conv.gripper_mode == "torque_scale":
                if dim.kind not in (asp.GRIPPER, asp.TORQUE):
                    continue
                lo, hi = stats.minimum[d], stats.maximum[d]
                if hi > lo:
                    out[d] = _clamp_unit(out[d], counters) * (hi - lo) + lo
                else:
                    counters.degenerate_dims += 1
                continue
            if dim.kind != asp.GRIPPER:
                continue
            value = _clamp_unit(out[d], counters)
            if conv.gripper_mode == "binary":
                out[d] = float(asp.gripper_binary(value))
            elif conv.gripper_mode == "ternary":
                out[d] = float(asp.gripper_ternary(value))
            elif conv.gripper_mode == "continuous":
                out[d] = asp.normalize_continuous(value, 0.0, 1.0)
    return tuple(out)


def _strip_descriptions(descriptions: Sequence[str], full: asp.ActionSpaceSpec) -> tuple[str, ...]:
    if len(descriptions) != len(full.dims):
        return tuple(descriptions)
    return tuple(t for t, dim in zip(descriptions, full.dims) if dim.kind != asp.TERMINAL)


def build_requests(
    episodes: Sequence[EpisodeRecord],
    descriptor: DatasetDescriptor,
    spec: asp.ActionSpaceSpec,
    stats: asp.ActionStats,
    config: RunConfig,
    counters: ConversionCounters,
) -> tuple[list[AdapterRequest], list[list[tuple[str, tuple[float, ...]]]]]:
    """Zero-shot requests plus the per-episode ground-truth layout."""
    strip = descriptor.conversions.strip_terminal
    descriptions = (
        _strip_descriptions(descriptor.dim_descriptions, descriptor.action_space)
        if strip
        else descriptor.dim_descriptions
    )
    requests: list[AdapterRequest] = []
    truth: list[list[tuple[str, tuple[float, ...]]]] = []
    for episode in episodes:
        episode_truth: list[tuple[str, tuple[float, ...]]] = []
        for step_index, step in enumerate(episode.steps):
            gt = flatten_action(step.action)
            if len(gt) != len(descriptor.action_space.dims):
                raise LengthMismatch(
                    f"{descriptor.registered_name}/{episode.episode_id}: action has {len(gt)} dims, "
                    f"registry declares {len(descriptor.action_space.dims)}"
                )
            if strip:
                gt = asp.strip_terminal(gt, descriptor.action_space)
            try:
                images = select_images(step, config.image_policy, descriptor.key_mapping)
            except NoImageAvailable:
                counters.images_missing += 1
                images = []
            if config.four_channel_images:
                images = [(view, to_four_channel(img)) for view, img in images]
            requests.append(
                AdapterRequest(
                    request_id=f"{descriptor.registered_name}/{episode.episode_id}/{step_index}",
                    dataset=descriptor.registered_name,
                    step_index=step_index,
                    observation_vector=asp.flatten_observation(step.observation),
                    images=tuple(images),
                    instruction=episode.instruction,
                    action_space=spec,
                    action_stats=stats,
                    task_description=descriptor.task_description,
                    verification_ground_truth=gt if config.mode == MODE_VERIFY else None,
                    dim_descriptions=descriptions,
                )
            )
            episode_truth.append((episode.episode_id, gt))
        truth.append(episode_truth)
    return requests, truth


def evaluate_dataset(descriptor: DatasetDescriptor, config: RunConfig) -> MetricReport:
    path = data_file_for(config.data_dir, descriptor.registered_name)
    episodes = load_episodes(path, descriptor)
    if not episodes:
        raise ConfigError(f"{descriptor.registered_name}: data file holds no episodes")
    selected = _select_split(episodes, descriptor, config)

    spec = (
        descriptor.action_space.without_terminal()
        if descriptor.conversions.strip_terminal
        else descriptor.action_space
    )
    counters = ConversionCounters()
    stripped_actions = []
    for episode in selected:
        for step in episode.steps:
            gt = flatten_action(step.action)
            if descriptor.conversions.strip_terminal:
                gt = asp.strip_terminal(gt, descriptor.action_space)
            stripped_actions.append(gt)
    stats = descriptor.official_stats or asp.compute_action_stats(stripped_actions, len(spec.dims))

    requests, truth = build_requests(selected, descriptor, spec, stats, config, counters)
    rng = Xoshiro256StarStar(derive_seed(config.fallback_seed, descriptor.registered_name))
    endpoint = open_endpoint(config.adapter)
    outcomes, session_stats = run_adapter_session(
        endpoint, requests, rng, mode=config.mode, timeout=config.timeout
    )

    trajectories: list[list[StepPair]] = []
    results = []
    cursor = 0
    for episode_truth in truth:
        pairs = []
        for episode_id, gt in episode_truth:
            outcome = outcomes[cursor]
            cursor += 1
            predicted = apply_conversions(outcome.action, descriptor, spec, stats, counters)
            pairs.append(StepPair(predicted=predicted, ground_truth=gt, used_fallback=outcome.used_fallback))
        trajectories.append(pairs)
        results.append(trajectory_result(episode_truth[0][0], pairs))

    run_metadata = {
        "seed": config.fallback_seed,
        "dataset_seed": derive_seed(config.fallback_seed, descriptor.registered_name),
        "protocol_version": PROTOCOL_VERSION,
        "adapter": session_stats.adapter_name,
        "range_violations": counters.range_violations,
        "degenerate_conversion_dims": counters.degenerate_dims,
        "images_missing": counters.images_missing,
        "images_dropped": session_stats.images_dropped,
        "fallback_counts": dict(sorted(session_stats.fallback_counts.items())),
        "mode": config.mode,
        "split_fraction": None if descriptor.has_predefined_eval_split else config.split_fraction,
        "split_seed": None if descriptor.has_predefined_eval_split else config.split_seed,
        "n_steps": sum(len(pairs) for pairs in trajectories),
    }
    return aggregate_report(
        descriptor.registered_name,
        trajectories,
        results,
        epsilon=config.completion_epsilon,
        run_metadata=run_metadata,
    )


def _content_hash(config: RunConfig, registry: Registry) -> str:
    h = hashlib.sha256()
    h.update(json.dumps(config.to_dict(), sort_keys=True).encode("utf-8"))
    h.update(Path(config.registry_path).read_bytes())
    for name in sorted(_dataset_filter(config, registry)):
        try:
            h.update(name.encode("utf-8"))
            h.update(data_file_for(config.data_dir, name).read_bytes())
        except ConfigError:
            h.update(b"<missing>")
    return h.hexdigest()


def _dataset_filter(config: RunConfig, registry: Registry) -> tuple[str, ...]:
    return config.datasets if config.datasets else registry.names()


def run_eval(config: RunConfig) -> RunManifest:
    registry = load_registry(config.registry_path)
    names = _dataset_filter(config, registry)
    known = set(registry.names())
    unknown = [n for n in names if n not in known]
    if unknown:
        raise ConfigError(f"datasets not in registry: {unknown}")
    descriptors = [registry.get(n) for n in names]

    def one(d: DatasetDescriptor) -> DatasetOutcome:
        started = time.monotonic()
        try:
            report = evaluate_dataset(d, config)
            return DatasetOutcome(d.registered_name, report=report, seconds=time.monotonic() - started)
        except OxbenchError as exc:
            return DatasetOutcome(
                d.registered_name,
                error=f"{type(exc).__name__}: {exc}",
                seconds=time.monotonic() - started,
            )

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(one, descriptors))
    else:
        outcomes = [one(d) for d in descriptors]

    reports = [o.report for o in outcomes if o.report is not None]
    failures = {o.name: o.error for o in outcomes if o.error is not None}
    adapter_names = {r.run_metadata.get("adapter", "") for r in reports}
    manifest = RunManifest(
        config=config.to_dict(),
        reports=reports,
        failures=failures,
        timings={o.name: o.seconds for o in outcomes},
        harness_version=__version__,
        content_hash=_content_hash(config, registry),
        adapter_name=adapter_names.pop() if len(adapter_names) == 1 else "mixed",
    )
    write_run_outputs(manifest, Path(config.output_dir))
    return manifest


def write_run_outputs(manifest: RunManifest, out_dir: Path) -> None:
    from .reporting import reports_to_csv, reports_to_json, reports_to_markdown

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "reports.csv").write_text(reports_to_csv(manifest.reports), encoding="utf-8")
    (out_dir / "reports.json").write_text(reports_to_json(manifest.reports), encoding="utf-8")
    (out_dir / "reports.md").write_text(
        reports_to_markdown(manifest.reports, manifest.adapter_name), encoding="utf-8"
    )
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
