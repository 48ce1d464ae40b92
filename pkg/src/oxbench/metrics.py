"""Per-step, per-trajectory, and per-dataset metrics.

step MSE -> per-trajectory mean -> unweighted mean across trajectories
(the dataset AMSE). NAMSE recomputes AMSE after mapping both series
through the model's own per-dimension prediction range; dimensions whose
predictions are constant are excluded and counted instead of divided by
zero. All reductions use exact summation so results are identical across
platforms and scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import EmptyInput, LengthMismatch


@dataclass(frozen=True)
class StepPair:
    predicted: tuple[float, ...]
    ground_truth: tuple[float, ...]
    used_fallback: bool = False

    def __post_init__(self):
        if len(self.predicted) != len(self.ground_truth):
            raise LengthMismatch(
                f"predicted has {len(self.predicted)} dims, ground truth {len(self.ground_truth)}"
            )


@dataclass(frozen=True)
class TrajectoryResult:
    episode_id: str
    step_mses: tuple[float, ...]
    trajectory_mse: float
    final_step: StepPair


@dataclass(frozen=True)
class MetricReport:
    dataset: str
    amse: float
    namse: float
    completion_rate: float
    fallback_rate: float
    n_trajectories: int
    run_metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "amse": self.amse,
            "namse": self.namse,
            "completion_rate": self.completion_rate,
            "fallback_rate": self.fallback_rate,
            "n_trajectories": self.n_trajectories,
            "run_metadata": self.run_metadata,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        return cls(
            dataset=d["dataset"],
            amse=float(d["amse"]),
            namse=float(d["namse"]),
            completion_rate=float(d["completion_rate"]),
            fallback_rate=float(d["fallback_rate"]),
            n_trajectories=int(d["n_trajectories"]),
            run_metadata=dict(d.get("run_metadata", {})),
        )


def flatten_action(action: Mapping[str, Sequence[float]]) -> tuple[float, ...]:
    """Ground-truth flattening: concatenate in lexicographic key order."""
    out: list[float] = []
    for key in sorted(action):
        out.extend(float(v) for v in action[key])
    return tuple(out)


def step_mse(pair: StepPair) -> float:
    n = len(pair.ground_truth)
    if n == 0:
        raise LengthMismatch("empty action vectors")
    return math.fsum((y - p) ** 2 for y, p in zip(pair.ground_truth, pair.predicted)) / n


def trajectory_result(episode_id: str, pairs: Sequence[StepPair]) -> TrajectoryResult:
    if not pairs:
        raise EmptyInput(f"trajectory {episode_id!r} has no step pairs")
    mses = tuple(step_mse(p) for p in pairs)
    return TrajectoryResult(
        episode_id=episode_id,
        step_mses=mses,
        trajectory_mse=math.fsum(mses) / len(mses),
        final_step=pairs[-1],
    )


def amse(results: Sequence[TrajectoryResult]) -> float:
    """Unweighted mean of per-trajectory MSEs."""
    if not results:
        raise EmptyInput("no trajectories")
    return math.fsum(r.trajectory_mse for r in results) / len(results)


def amse_flat(trajectories: Sequence[Sequence[StepPair]]) -> float:
    """The flat variant: every step weighted equally across the dataset."""
    mses = [step_mse(p) for pairs in trajectories for p in pairs]
    if not mses:
        raise EmptyInput("no step pairs")
    return math.fsum(mses) / len(mses)


@dataclass(frozen=True)
class NamseResult:
    value: float
    excluded_dims: tuple[int, ...]  # degenerate prediction range, left out


def namse_detail(
    trajectories: Sequence[Sequence[StepPair]],
    normalize_ground_truth: bool = True,
) -> NamseResult:
    """AMSE after mapping values through the prediction range per dimension.

    Pass 1 finds min/max of the *predicted* values over the whole dataset;
    pass 2 maps u -> (u - min_d) / (max_d - min_d) and recomputes AMSE.
    By default the ground truth goes through the same map so both series
    share one coordinate system; `normalize_ground_truth=False` gives the
    other reading of the definition.
    """
    all_pairs = [p for pairs in trajectories for p in pairs]
    if not all_pairs:
        raise EmptyInput("no step pairs")
    n_dims = len(all_pairs[0].predicted)
    lo = [math.inf] * n_dims
    hi = [-math.inf] * n_dims
    for pair in all_pairs:
        if len(pair.predicted) != n_dims:
            raise LengthMismatch("inconsistent dimension count across step pairs")
        for d, v in enumerate(pair.predicted):
            if v < lo[d]:
                lo[d] = v
            if v > hi[d]:
                hi[d] = v
    kept = [d for d in range(n_dims) if hi[d] > lo[d]]
    excluded = tuple(d for d in range(n_dims) if d not in kept)
    if not kept:
        return NamseResult(value=0.0, excluded_dims=excluded)

    def transform(vec: tuple[float, ...], raw: bool) -> tuple[float, ...]:
        if raw:
            return tuple(vec[d] for d in kept)
        return tuple((vec[d] - lo[d]) / (hi[d] - lo[d]) for d in kept)

    per_traj: list[float] = []
    for pairs in trajectories:
        if not pairs:
            raise EmptyInput("empty trajectory")
        mses = [
            step_mse(
                StepPair(
                    predicted=transform(p.predicted, raw=False),
                    ground_truth=transform(p.ground_truth, raw=not normalize_ground_truth),
                )
            )
            for p in pairs
        ]
        per_traj.append(math.fsum(mses) / len(mses))
    return NamseResult(value=math.fsum(per_traj) / len(per_traj), excluded_dims=excluded)


def namse(trajectories: Sequence[Sequence[StepPair]], normalize_ground_truth: bool = True) -> float:
    return namse_detail(trajectories, normalize_ground_truth).value


def completion(results: Sequence[TrajectoryResult], epsilon: float) -> float:
    """Fraction of trajectories whose final action matches ground truth to
    within epsilon in max-abs difference."""
    if not results:
        raise EmptyInput("no trajectories")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    hits = 0
    for r in results:
        diff = max(
            (abs(p - y) for p, y in zip(r.final_step.predicted, r.final_step.ground_truth)),
            default=0.0,
        )
        if diff <= epsilon:
            hits += 1
    return hits / len(results)


def aggregate_report(
    dataset: str,
    trajectories: Sequence[Sequence[StepPair]],
    results: Sequence[TrajectoryResult],
    epsilon: float,
    run_metadata: dict | None = None,
) -> MetricReport:
    if not results:
        raise EmptyInput("no trajectories")
    total_steps = sum(len(pairs) for pairs in trajectories)
    fallback_steps = sum(1 for pairs in trajectories for p in pairs if p.used_fallback)
    detail = namse_detail(trajectories)
    metadata = dict(run_metadata or {})
    metadata.setdefault("completion_epsilon", epsilon)
    metadata["amse_flat"] = amse_flat(trajectories)
    metadata["namse_excluded_dims"] = list(detail.excluded_dims)
    return MetricReport(
        dataset=dataset,
        amse=amse(results),
        namse=detail.value,
        completion_rate=completion(results, epsilon),
        fallback_rate=(fallback_steps / total_steps) if total_steps else 0.0,
        n_trajectories=len(results),
        run_metadata=metadata,
    )
