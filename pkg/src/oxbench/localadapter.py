"""Harness-internal adapter endpoints.

These answer the wire protocol in process, without spawning anything:
`replay` echoes the verification ground truth (the ideal predictor),
`random_uniform` draws seeded uniforms in [0, 1), `constant` repeats a
fixed vector, and `mean_action` returns the per-dimension mean from the
request's statistics. They exist for verification runs and hermetic tests;
real models live behind external adapters.
"""

from __future__ import annotations

import queue

from . import PROTOCOL_VERSION
from .rng import Xoshiro256StarStar
from .session import Endpoint


class LocalPolicyEndpoint(Endpoint):
    def __init__(self, name: str, seed: int = 0, constant: tuple[float, ...] = ()):
        self.name = name
        self.seed = seed
        self.constant = constant
        self._rng = Xoshiro256StarStar(seed)
        self._queue: queue.Queue = queue.Queue()
        self._mode = "eval"

    def send(self, msg: dict) -> None:
        self._queue.put(self._handle(msg))

    def recv(self, timeout: float) -> dict:
        msg = self._queue.get(timeout=timeout)
        if msg is None:
            raise TimeoutError("no reply")
        return msg

    def _handle(self, msg: dict) -> dict | None:
        mtype = msg.get("type")
        if mtype == "hello":
            if msg.get("protocol_version") != PROTOCOL_VERSION:
                return {"type": "error", "message": "unsupported protocol version"}
            self._mode = msg.get("mode", "eval")
            return {
                "type": "ready",
                "name": f"builtin-{self.name}",
                "max_image_bytes": 64 * 1024 * 1024,
                "supports_verify": True,
            }
        if mtype == "bye":
            return None
        if mtype != "predict":
            return {"type": "error", "message": f"unexpected message type {mtype!r}"}
        rid = msg.get("request_id", "")
        dims = len(msg.get("action_space", {}).get("dims", []))
        if self.name == "replay":
            truth = msg.get("verification_ground_truth")
            if self._mode != "verify" or truth is None:
                return {"type": "error", "request_id": rid, "message": "replay requires verify mode"}
            return {"type": "result", "request_id": rid, "action": list(truth)}
        if self.name == "random_uniform":
            return {"type": "result", "request_id": rid, "action": [self._rng.uniform() for _ in range(dims)]}
        if self.name == "constant":
            return {"type": "result", "request_id": rid, "action": list(self.constant)}
        if self.name == "mean_action":
            mean = msg.get("action_stats", {}).get("mean", [])
            return {"type": "result", "request_id": rid, "action": list(mean)}
        return {"type": "error", "request_id": rid, "message": f"unknown builtin policy {self.name!r}"}


def make_builtin_endpoint(spec: str) -> LocalPolicyEndpoint:
    """Parse "policy[:arg]" — e.g. "replay", "random_uniform:42",
    "constant:0.5,0.25"."""
    policy, _, arg = spec.partition(":")
    if policy == "random_uniform":
        return LocalPolicyEndpoint(policy, seed=int(arg) if arg else 0)
    if policy == "constant":
        vector = tuple(float(v) for v in arg.split(",")) if arg else (0.0,)
        return LocalPolicyEndpoint(policy, constant=vector)
    if policy in ("replay", "mean_action"):
        return LocalPolicyEndpoint(policy)
    raise ValueError(f"unknown builtin policy {policy!r}")
