"""Adapter bridge: request construction, image policies, prompt payloads,
and output coercion.

Requests are strictly zero-shot: every field derives from the current step
and dataset-level context, never from neighbouring steps or earlier
predictions. Coercion is total: whatever an adapter sends back, the
harness always ends up with a numeric vector of the expected length.
"""

from __future__ import annotations

import base64
import json
import math
import re
from dataclasses import dataclass, field

from .actionspace import ActionSpaceSpec, ActionStats, format_signature
from .errors import NoImageAvailable, UnsupportedChannels
from .ingest import KeyMapping
from .records import ImageData, StepRecord
from .rng import Xoshiro256StarStar

PRIMARY_ONLY = "primary_only"
ALL_VIEWS = "all_views"

WRONG_LENGTH = "wrong_length"
NON_NUMERIC = "non_numeric"
MIXED_TEXT = "mixed_text"
NON_SCALAR_ELEMENT = "non_scalar_element"
ADAPTER_ERROR = "adapter_error"

FALLBACK_REASONS = (WRONG_LENGTH, NON_NUMERIC, MIXED_TEXT, NON_SCALAR_ELEMENT, ADAPTER_ERROR)


@dataclass(frozen=True)
class AdapterRequest:
    request_id: str
    dataset: str
    step_index: int
    observation_vector: tuple[float, ...]
    images: tuple[tuple[str, ImageData], ...] = ()
    instruction: str | None = None
    action_space: ActionSpaceSpec | None = None
    action_stats: ActionStats | None = None
    task_description: str | None = None
    verification_ground_truth: tuple[float, ...] | None = None
    dim_descriptions: tuple[str, ...] = ()

    @property
    def expected_dim(self) -> int:
        return len(self.action_space.dims)


@dataclass(frozen=True)
class AdapterResponse:
    request_id: str
    action: tuple[float, ...] | None = None
    raw_text: str | None = None
    error: str | None = None


@dataclass(frozen=True)
class CoercionOutcome:
    action: tuple[float, ...]
    used_fallback: bool = False
    reason: str | None = None

    def __post_init__(self):
        if self.used_fallback != (self.reason is not None):
            raise ValueError("used_fallback must match reason presence")
        if self.reason is not None and self.reason not in FALLBACK_REASONS:
            raise ValueError(f"unknown fallback reason {self.reason!r}")


# --- image preprocessing --------------------------------------------------------


def to_four_channel(img: ImageData) -> ImageData:
    """Widen to 4 channels: RGB gains a copy of red as alpha, 2-channel
    duplicates both channels, 1-channel replicates, 4-channel is identity."""
    if img.channels == 4:
        return img
    n = img.width * img.height
    src = img.data
    out = bytearray(n * 4)
    if img.channels == 3:
        for i in range(n):
            r = src[3 * i]
            out[4 * i] = r
            out[4 * i + 1] = src[3 * i + 1]
            out[4 * i + 2] = src[3 * i + 2]
            out[4 * i + 3] = r
    elif img.channels == 2:
        for i in range(n):
            a, b = src[2 * i], src[2 * i + 1]
            out[4 * i] = a
            out[4 * i + 1] = b
            out[4 * i + 2] = a
            out[4 * i + 3] = b
    elif img.channels == 1:
        for i in range(n):
            out[4 * i] = out[4 * i + 1] = out[4 * i + 2] = out[4 * i + 3] = src[i]
    else:
        raise UnsupportedChannels(img.channels)
    return ImageData(img.width, img.height, 4, bytes(out))


def select_images(
    step: StepRecord,
    policy: str,
    key_mapping: KeyMapping,
) -> list[tuple[str, ImageData]]:
    """Pick image views per policy. Raises NoImageAvailable when the step
    carries none of the mapped views; callers record that and proceed."""
    available = step.image_observations()
    views = [spec.view for spec in key_mapping.image_keys]
    if policy == PRIMARY_ONLY:
        primary = key_mapping.primary_view or (views[0] if views else None)
        if primary is None or primary not in available:
            raise NoImageAvailable(f"no primary view {primary!r} in step")
        return [(primary, available[primary])]
    if policy == ALL_VIEWS:
        selected = [(v, available[v]) for v in views if v in available]
        if not selected:
            raise NoImageAvailable("no mapped image views in step")
        return selected
    raise ValueError(f"unknown image policy {policy!r}")


# --- prompt payload -------------------------------------------------------------

STATE_MARKER = "## STATE"
INSTRUCTION_MARKER = "## INSTRUCTION"
DIMENSIONS_MARKER = "## ACTION DIMENSIONS"
STATISTICS_MARKER = "## ACTION STATISTICS"
TASK_MARKER = "## TASK"
OUTPUT_MARKER = "## OUTPUT FORMAT"


def build_prompt_payload(req: AdapterRequest) -> str:
    """Deterministic structured text for prompt-driven adapters.

    Sections, in order: state, instruction, per-dimension descriptions,
    per-dimension statistics, task description, output directive. Optional
    sections are omitted entirely when their source field is absent.
    """
    spec = req.action_space
    stats = req.action_stats
    lines: list[str] = [STATE_MARKER]
    lines.append("observation_vector: [" + ", ".join(repr(v) for v in req.observation_vector) + "]")
    if req.images:
        lines.append("images: " + ", ".join(name for name, _ in req.images))
    if req.instruction is not None:
        lines.append("")
        lines.append(INSTRUCTION_MARKER)
        lines.append(req.instruction)
    lines.append("")
    lines.append(DIMENSIONS_MARKER)
    lines.append(f"signature: {format_signature(spec)}")
    for i, dim in enumerate(spec.dims):
        described = req.dim_descriptions[i] if i < len(req.dim_descriptions) else f"{dim.name}: {dim.kind}"
        lines.append(f"{i}: {described}")
    lines.append("")
    lines.append(STATISTICS_MARKER)
    for i, dim in enumerate(spec.dims):
        lines.append(
            f"{dim.name}: min={stats.minimum[i]!r} max={stats.maximum[i]!r} mean={stats.mean[i]!r}"
        )
    if req.task_description is not None:
        lines.append("")
        lines.append(TASK_MARKER)
        lines.append(req.task_description)
    lines.append("")
    lines.append(OUTPUT_MARKER)
    lines.append(
        f"Reply with exactly {len(spec.dims)} decimal numbers separated by commas, "
        "optionally in square brackets. No other text."
    )
    return "\n".join(lines)


# --- response coercion ----------------------------------------------------------

_NUMBER_LIST_RE = re.compile(
    r"""^\s*\[?\s*
        [+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?
        (?:[\s,]+[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)*
        \s*\]?\s*$""",
    re.VERBOSE,
)


def parse_raw_text(text: str) -> list[float] | None:
    """Parse a bare numeric vector: one bracketed or comma/whitespace
    separated list of decimal floats; anything with extra prose fails."""
    if not _NUMBER_LIST_RE.match(text):
        return None
    cleaned = text.strip().strip("[]")
    parts = [p for p in re.split(r"[\s,]+", cleaned) if p]
    try:
        return [float(p) for p in parts]
    except ValueError:
        return None


def _fallback(expected_dim: int, rng: Xoshiro256StarStar, reason: str) -> CoercionOutcome:
    return CoercionOutcome(
        action=tuple(rng.uniform() for _ in range(expected_dim)),
        used_fallback=True,
        reason=reason,
    )


def coerce_response(
    resp: AdapterResponse,
    expected_dim: int,
    rng: Xoshiro256StarStar,
) -> CoercionOutcome:
    """Validate an adapter response or substitute a uniform-random action.

    Never raises: wrong sizes, strings, mixed text, non-scalar elements
    and adapter errors all map to a seeded fallback vector in [0, 1)^n
    labeled with the defect.
    """
    if resp.error is not None:
        return _fallback(expected_dim, rng, ADAPTER_ERROR)
    values = resp.action
    if values is None:
        if resp.raw_text is None:
            return _fallback(expected_dim, rng, ADAPTER_ERROR)
        parsed = parse_raw_text(resp.raw_text)
        if parsed is None:
            return _fallback(expected_dim, rng, MIXED_TEXT)
        values = tuple(parsed)
    out: list[float] = []
    for v in values:
        if isinstance(v, (list, tuple, dict)):
            return _fallback(expected_dim, rng, NON_SCALAR_ELEMENT)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            return _fallback(expected_dim, rng, NON_NUMERIC)
        v = float(v)
        if not math.isfinite(v):
            return _fallback(expected_dim, rng, NON_NUMERIC)
        out.append(v)
    if len(out) != expected_dim:
        return _fallback(expected_dim, rng, WRONG_LENGTH)
    return CoercionOutcome(action=tuple(out))


# --- wire serialization ---------------------------------------------------------


def image_to_wire(view: str, img: ImageData) -> dict:
    return {
        "view": view,
        "width": img.width,
        "height": img.height,
        "channels": img.channels,
        "encoding": "raw",
        "b64": base64.b64encode(img.data).decode("ascii"),
    }


def request_to_wire(req: AdapterRequest) -> dict:
    """The predict message; canonical JSON of this dict is byte-stable."""
    msg: dict = {
        "type": "predict",
        "request_id": req.request_id,
        "dataset": req.dataset,
        "step_index": req.step_index,
        "observation_vector": list(req.observation_vector),
        "images": [image_to_wire(view, img) for view, img in req.images],
        "instruction": req.instruction,
        "action_space": {
            "signature": format_signature(req.action_space),
            "dims": [
                {"name": d.name, "kind": d.kind, "low": d.low, "high": d.high}
                for d in req.action_space.dims
            ],
        },
        "action_stats": req.action_stats.to_dict(),
        "task_description": req.task_description,
        "prompt_payload": build_prompt_payload(req),
    }
    if req.verification_ground_truth is not None:
        msg["verification_ground_truth"] = list(req.verification_ground_truth)
    return msg


def wire_to_response(msg: dict) -> AdapterResponse:
    """Lenient mapping of a reply object; malformed shapes surface as
    errors so coercion can classify them."""
    if not isinstance(msg, dict):
        return AdapterResponse(request_id="", error="non-object reply")
    rid = msg.get("request_id")
    rid = rid if isinstance(rid, str) else ""
    mtype = msg.get("type")
    if mtype == "error":
        return AdapterResponse(request_id=rid, error=str(msg.get("message", "unspecified")))
    if mtype != "result":
        return AdapterResponse(request_id=rid, error=f"unexpected message type {mtype!r}")
    if "action" in msg:
        action = msg["action"]
        if isinstance(action, list):
            return AdapterResponse(request_id=rid, action=tuple(action))
        return AdapterResponse(request_id=rid, action=(action,))
    if "raw_text" in msg:
        return AdapterResponse(request_id=rid, raw_text=str(msg["raw_text"]))
    return AdapterResponse(request_id=rid, error="result carries neither action nor raw_text")


def canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True).encode("ascii")
