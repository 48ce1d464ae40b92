"""Action/observation vector algebra.

Flattening, gripper-command discretization, continuous normalization,
percentile unnormalization, per-dimension statistics, and terminal-dimension
stripping. Everything here is a pure function; statistics use exact
summation so results are identical across platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import (
    DegenerateRange,
    DomainError,
    EmptyInput,
    LengthMismatch,
    SignatureParseError,
)

POSITION = "position"
ANGULAR = "angular"
GRIPPER = "gripper"
TERMINAL = "terminal"
VELOCITY = "velocity"
ANGULAR_VELOCITY = "angular_velocity"
TORQUE = "torque"
GAIN = "gain"
DAMPING = "damping"
POSE = "pose"
QUATERNION = "quaternion"

KINDS = (
    POSITION,
    ANGULAR,
    GRIPPER,
    TERMINAL,
    VELOCITY,
    ANGULAR_VELOCITY,
    TORQUE,
    GAIN,
    DAMPING,
    POSE,
    QUATERNION,
)

# Signature tokens as printed in registry files; longest match wins so
# "ang vel" and "grip torque" are not split into their head tokens.
_PHRASE_TO_KIND = {
    "pos": POSITION,
    "ang": ANGULAR,
    "orient": ANGULAR,
    "grip": GRIPPER,
    "term": TERMINAL,
    "vel": VELOCITY,
    "ang vel": ANGULAR_VELOCITY,
    "grip torque": TORQUE,
    "torque": TORQUE,
    "gain coeff": GAIN,
    "damping ratio coeff": DAMPING,
    "pose": POSE,
    "quat": QUATERNION,
}

GRIPPER_BOUNDARY = 0.5  # x == 0.5 discretizes to 1 (open)
TERNARY_LOW = 0.05
TERNARY_HIGH = 0.95
_DOMAIN_TOL = 1e-9
DUMMY_OBSERVATION = (0.0,)  # stands in when a step has no float observations


@dataclass(frozen=True)
class DimSpec:
    name: str
    kind: str
    low: float | None = None
    high: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown dimension kind {self.kind!r}")
        if self.low is not None and self.high is not None and not self.low < self.high:
            raise ValueError(f"dimension {self.name!r}: low must be < high")


@dataclass(frozen=True)
class ActionSpaceSpec:
    dims: tuple[DimSpec, ...]
    unit_note: str | None = None

    def __post_init__(self):
        if not self.dims:
            raise ValueError("action space needs at least one dimension")
        names = [d.name for d in self.dims]
        if len(set(names)) != len(names):
            raise ValueError("dimension names must be unique")

    def __len__(self) -> int:
        return len(self.dims)

    def kinds(self) -> tuple[str, ...]:
        return tuple(d.kind for d in self.dims)

    def without_terminal(self) -> "ActionSpaceSpec":
        kept = tuple(d for d in self.dims if d.kind != TERMINAL)
        return ActionSpaceSpec(dims=kept, unit_note=self.unit_note) if kept else self


def parse_signature(text: str) -> ActionSpaceSpec:
    """Parse an action-space signature like "8D (1 grip, 3 ang, 3 pos, 1 term)".

    The declared total must equal the sum of the group counts. Dimension
    names are generated as <token>_<i> per group, with the token phrase
    preserved so printing round-trips exactly.
    """
    text = text.strip()
    head, _, rest = text.partition("(")
    head = head.strip()
    if not head.endswith("D") or not rest.endswith(")"):
        raise SignatureParseError(f"cannot parse signature {text!r}")
    try:
        total = int(head[:-1])
    except ValueError:
        raise SignatureParseError(f"bad dimension count in {text!r}") from None
    groups = []
    for part in rest[:-1].split(","):
        part = part.strip()
        if not part:
            raise SignatureParseError(f"empty group in {text!r}")
        count_str, _, phrase = part.partition(" ")
        try:
            count = int(count_str)
        except ValueError:
            raise SignatureParseError(f"bad group count in {part!r}") from None
        phrase = " ".join(phrase.split())
        # strip a trailing "for <qualifier>" (e.g. "2 pos for base")
        base_phrase = phrase
        qualifier = ""
        if " for " in phrase:
            base_phrase, _, qualifier = phrase.partition(" for ")
        kind = _PHRASE_TO_KIND.get(base_phrase)
        if kind is None:
            raise SignatureParseError(f"unknown dimension token {phrase!r} in {text!r}")
        groups.append((count, phrase, qualifier, kind))
    if sum(g[0] for g in groups) != total:
        raise SignatureParseError(
            f"signature {text!r}: declared {total} dims but groups sum to {sum(g[0] for g in groups)}"
        )
    dims = []
    for count, phrase, qualifier, kind in groups:
        stem = phrase.replace(" ", "_")
        for i in range(count):
            dims.append(DimSpec(name=f"{stem}_{i}" if count > 1 else stem, kind=kind))
    spec = ActionSpaceSpec(dims=tuple(dims))
    object.__setattr__(spec, "_signature_groups", tuple((c, p) for c, p, _, _ in groups))
    return spec


def format_signature(spec: ActionSpaceSpec) -> str:
    groups: Sequence[tuple[int, str]] | None = getattr(spec, "_signature_groups", None)
    if groups is None:
        # regroup consecutive dims of equal kind, printing canonical tokens
        canonical = {v: k for k, v in reversed(_PHRASE_TO_KIND.items())}
        groups = []
        for dim in spec.dims:
            token = canonical[dim.kind]
            if groups and groups[-1][1] == token:
                groups[-1] = (groups[-1][0] + 1, token)
            else:
                groups.append((1, token))
    body = ", ".join(f"{count} {phrase}" for count, phrase in groups)
    return f"{len(spec.dims)}D ({body})"


@dataclass(frozen=True)
class ActionStats:
    minimum: tuple[float, ...]
    maximum: tuple[float, ...]
    mean: tuple[float, ...]
    q01: tuple[float, ...]
    q99: tuple[float, ...]
    sample_count: int

    def __post_init__(self):
        n = len(self.minimum)
        if not all(len(v) == n for v in (self.maximum, self.mean, self.q01, self.q99)):
            raise ValueError("per-dimension stats must have equal lengths")
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        for lo, q1, q9, hi in zip(self.minimum, self.q01, self.q99, self.maximum):
            if not (lo <= q1 <= q9 <= hi):
                raise ValueError("stat ordering violated: need min <= q01 <= q99 <= max")

    def to_dict(self) -> dict:
        return {
            "min": list(self.minimum),
            "max": list(self.maximum),
            "mean": list(self.mean),
            "q01": list(self.q01),
            "q99": list(self.q99),
            "sample_count": self.sample_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ActionStats":
        return cls(
            minimum=tuple(d["min"]),
            maximum=tuple(d["max"]),
            mean=tuple(d["mean"]),
            q01=tuple(d["q01"]),
            q99=tuple(d["q99"]),
            sample_count=int(d["sample_count"]),
        )


def flatten_map(
    values: Mapping[str, Sequence[float]],
    order: Sequence[str] | None = None,
) -> tuple[float, ...]:
    """Concatenate float vectors in lexicographic key order (or the given
    canonical order). An empty map yields the zero-filled dummy vector."""
    keys = sorted(values) if order is None else list(order)
    if not keys:
        return DUMMY_OBSERVATION
    out: list[float] = []
    for key in keys:
        out.extend(float(v) for v in values[key])
    return tuple(out) if out else DUMMY_OBSERVATION


def flatten_observation(observation: Mapping[str, object]) -> tuple[float, ...]:
    """Flatten a step observation, excluding images and text entries."""
    floats = {k: v for k, v in observation.items() if isinstance(v, tuple)}
    return flatten_map(floats)


def _check_unit_domain(x: float) -> float:
    if x < -_DOMAIN_TOL or x > 1.0 + _DOMAIN_TOL:
        raise DomainError(f"gripper command {x!r} outside [0, 1]")
    return min(1.0, max(0.0, x))


def gripper_binary(x: float) -> int:
    x = _check_unit_domain(x)
    return 1 if x >= GRIPPER_BOUNDARY else 0


def gripper_ternary(x: float) -> int:
    x = _check_unit_domain(x)
    if x < TERNARY_LOW:
        return -1
    if x > TERNARY_HIGH:
        return 1
    return 0


def normalize_continuous(x: float, low: float, high: float) -> float:
    """Map [low, high] to [-1, 1]; out-of-range inputs are clamped first."""
    if not high > low:
        raise DegenerateRange(f"need low < high, got [{low}, {high}]")
    x = min(high, max(low, x))
    return 2.0 * (x - low) / (high - low) - 1.0


def unnormalize_percentile(n: float, q01: float, q99: float) -> float:
    if not q01 < q99:
        raise DegenerateRange(f"need q01 < q99, got [{q01}, {q99}]")
    return 0.5 * (n + 1.0) * (q99 - q01) + q01


def nearest_rank(sorted_values: Sequence[float], p: float) -> float:
    """ceil(p*N)-th order statistic (1-indexed) of an ascending sequence."""
    n = len(sorted_values)
    if n == 0:
        raise EmptyInput("no samples")
    rank = max(1, math.ceil(p * n))
    return sorted_values[min(rank, n) - 1]


def compute_action_stats(action_vectors: Iterable[Sequence[float]], n_dims: int) -> ActionStats:
    """Exact per-dimension min/max/mean plus nearest-rank q01/q99.

    Accepts any iterable of equal-length vectors (typically every action of
    every step in a dataset split). Means use exact summation.
    """
    columns: list[list[float]] = [[] for _ in range(n_dims)]
    count = 0
    for vec in action_vectors:
        if len(vec) != n_dims:
            raise LengthMismatch(f"action has {len(vec)} dims, spec has {n_dims}")
        for d in range(n_dims):
            columns[d].append(float(vec[d]))
        count += 1
    if count == 0:
        raise EmptyInput("no action samples")
    for col in columns:
        col.sort()
    return ActionStats(
        minimum=tuple(col[0] for col in columns),
        maximum=tuple(col[-1] for col in columns),
        mean=tuple(math.fsum(col) / count for col in columns),
        q01=tuple(nearest_rank(col, 0.01) for col in columns),
        q99=tuple(nearest_rank(col, 0.99) for col in columns),
        sample_count=count,
    )


def stats_for_episodes(episodes, spec: ActionSpaceSpec) -> ActionStats:
    from .metrics import flatten_action  # local import to avoid a cycle

    vectors = (flatten_action(step.action) for episode in episodes for step in episode.steps)
    return compute_action_stats(vectors, len(spec.dims))


def strip_terminal(vector: Sequence[float], spec: ActionSpaceSpec) -> tuple[float, ...]:
    if len(vector) != len(spec.dims):
        raise LengthMismatch(f"vector has {len(vector)} dims, spec has {len(spec.dims)}")
    return tuple(v for v, d in zip(vector, spec.dims) if d.kind != TERMINAL)


def scale_by_stats(vector: Sequence[float], stats: ActionStats, mode: str = "to_torque_range") -> tuple[float, ...]:
    """Affine map of each component from [0, 1] to [min_d, max_d]."""
    if mode != "to_torque_range":
        raise ValueError(f"unknown scaling mode {mode!r}")
    if len(vector) != len(stats.minimum):
        raise LengthMismatch(f"vector has {len(vector)} dims, stats have {len(stats.minimum)}")
    out = []
    for d, v in enumerate(vector):
        lo, hi = stats.minimum[d], stats.maximum[d]
        if not hi > lo:
            raise DegenerateRange(f"dimension {d}: stats range [{lo}, {hi}] is degenerate")
        out.append(v * (hi - lo) + lo)
    return tuple(out)
