"""Adapter sessions: newline-delimited JSON over stdio, TCP, or HTTP.

One request is in flight at a time (strict request/response alternation).
Per-request timeouts, transport drops, and mismatched reply ids never abort
an evaluation: the affected requests fall back to seeded random actions
with reason `adapter_error` and the session keeps going where possible.
"""

from __future__ import annotations

import json
import queue
import socket
import subprocess
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import PROTOCOL_VERSION
from .adapter import (
    ADAPTER_ERROR,
    AdapterRequest,
    CoercionOutcome,
    canonical_json,
    coerce_response,
    request_to_wire,
    wire_to_response,
)
from .errors import HandshakeFailure, TransportClosed
from .rng import Xoshiro256StarStar

DEFAULT_TIMEOUT = 60.0

MODE_EVAL = "eval"
MODE_VERIFY = "verify"


class Endpoint:
    """Message transport. Subclasses provide send/recv of JSON objects."""

    def send(self, msg: dict) -> None:
        raise NotImplementedError

    def recv(self, timeout: float) -> dict:
        """Return the next message; raise TransportClosed or TimeoutError."""
        raise NotImplementedError

    def set_timeout(self, timeout: float) -> None:
        """Transports whose send() blocks (HTTP) honor the session timeout."""

    def close(self) -> None:
        pass


class _ReaderThreadEndpoint(Endpoint):
    """Shared machinery: a reader thread feeding a queue of parsed lines."""

    def __init__(self):
        self._queue: queue.Queue = queue.Queue()
        self._closed = False

    def _start_reader(self, stream):
        def pump():
            try:
                for line in stream:
                    line = line.strip()
                    if line:
                        try:
                            self._queue.put(json.loads(line))
                        except ValueError:
                            self._queue.put({"type": "error", "message": "unparseable reply line"})
            except Exception:
                pass
            self._queue.put(None)  # EOF sentinel

        t = threading.Thread(target=pump, daemon=True)
        t.start()

    def recv(self, timeout: float) -> dict:
        if self._closed:
            raise TransportClosed("transport already closed")
        try:
            msg = self._queue.get(timeout=timeout)
        except queue.Empty:
            raise TimeoutError(f"no reply within {timeout}s") from None
        if msg is None:
            self._closed = True
            raise TransportClosed("adapter closed the stream")
        return msg


class ProcessEndpoint(_ReaderThreadEndpoint):
    """Spawned adapter process speaking NDJSON on stdio."""

    def __init__(self, command: Sequence[str]):
        super().__init__()
        self._proc = subprocess.Popen(
            list(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._start_reader(self._proc.stdout)

    def send(self, msg: dict) -> None:
        if self._closed or self._proc.stdin.closed:
            raise TransportClosed("process stdin closed")
        try:
            self._proc.stdin.write(canonical_json(msg).decode("ascii") + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError, ValueError):
            self._closed = True
            raise TransportClosed("process stdin closed") from None

    def close(self) -> None:
        try:
            if self._proc.stdin and not self._proc.stdin.closed:
                self._proc.stdin.close()
        except OSError:
            pass
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait(timeout=5)
        self._closed = True


class TcpEndpoint(_ReaderThreadEndpoint):
    """NDJSON over a TCP socket."""

    def __init__(self, host: str, port: int, connect_timeout: float = 10.0):
        super().__init__()
        try:
            self._sock = socket.create_connection((host, port), timeout=connect_timeout)
        except OSError as exc:
            raise TransportClosed(f"cannot connect to {host}:{port}: {exc}") from None
        self._sock.settimeout(None)
        self._start_reader(self._sock.makefile("r", encoding="utf-8"))

    def send(self, msg: dict) -> None:
        if self._closed:
            raise TransportClosed("socket closed")
        try:
            self._sock.sendall(canonical_json(msg) + b"\n")
        except OSError:
            self._closed = True
            raise TransportClosed("socket closed") from None

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass
        self._closed = True


class HttpEndpoint(Endpoint):
    """Request/response over HTTP POST, one protocol message per request."""

    def __init__(self, url: str):
        self._url = url
        self._pending: dict | None = None
        self._timeout = DEFAULT_TIMEOUT

    def set_timeout(self, timeout: float) -> None:
        self._timeout = timeout

    def send(self, msg: dict) -> None:
        body = canonical_json(msg)
        req = urllib.request.Request(
            self._url, data=body, headers={"Content-Type": "application/json"}, method="POST"
        )
        try:
            with urllib.request.urlopen(req, timeout=self._timeout) as resp:
                payload = resp.read()
        except TimeoutError:
            raise TimeoutError(f"no HTTP reply within {self._timeout}s") from None
        except urllib.error.URLError as exc:
            if isinstance(exc.reason, TimeoutError):
                raise TimeoutError(f"no HTTP reply within {self._timeout}s") from None
            raise TransportClosed(f"HTTP endpoint failed: {exc}") from None
        except OSError as exc:
            raise TransportClosed(f"HTTP endpoint failed: {exc}") from None
        if not payload.strip():
            self._pending = None
            return
        try:
            self._pending = json.loads(payload)
        except ValueError:
            self._pending = {"type": "error", "message": "unparseable HTTP reply"}

    def recv(self, timeout: float) -> dict:
        if self._pending is None:
            raise TimeoutError("no pending HTTP reply")
        msg, self._pending = self._pending, None
        return msg


@dataclass
class SessionStats:
    adapter_name: str = ""
    max_image_bytes: int | None = None
    requests: int = 0
    fallback_counts: dict[str, int] = field(default_factory=dict)
    images_dropped: int = 0
    total_latency: float = 0.0
    max_latency: float = 0.0
    handshake_ok: bool = False

    def record_fallback(self, reason: str) -> None:
        self.fallback_counts[reason] = self.fallback_counts.get(reason, 0) + 1

    @property
    def fallbacks(self) -> int:
        return sum(self.fallback_counts.values())


def handshake(endpoint: Endpoint, mode: str, timeout: float = DEFAULT_TIMEOUT) -> SessionStats:
    hello = {"type": "hello", "protocol_version": PROTOCOL_VERSION, "mode": mode}
    try:
        endpoint.send(hello)
        reply = endpoint.recv(timeout)
    except (TransportClosed, TimeoutError) as exc:
        raise HandshakeFailure(f"handshake failed: {exc}") from None
    if not isinstance(reply, dict) or reply.get("type") != "ready":
        raise HandshakeFailure(f"expected ready, got {reply!r}")
    name = reply.get("name")
    max_image_bytes = reply.get("max_image_bytes")
    if not isinstance(name, str) or not isinstance(max_image_bytes, int):
        raise HandshakeFailure("ready message missing name/max_image_bytes")
    if mode == MODE_VERIFY and not reply.get("supports_verify", False):
        raise HandshakeFailure(f"adapter {name!r} does not support verification mode")
    stats = SessionStats(adapter_name=name, max_image_bytes=max_image_bytes, handshake_ok=True)
    return stats


def _strip_oversized_images(wire: dict, limit: int | None, stats: SessionStats) -> dict:
    if limit is None or limit <= 0:
        return wire
    kept = []
    for img in wire.get("images", []):
        if len(img.get("b64", "")) > limit:
            stats.images_dropped += 1
        else:
            kept.append(img)
    if len(kept) != len(wire.get("images", [])):
        wire = dict(wire)
        wire["images"] = kept
    return wire


def run_adapter_session(
    endpoint: Endpoint,
    requests: Iterable[AdapterRequest],
    rng: Xoshiro256StarStar,
    mode: str = MODE_EVAL,
    timeout: float = DEFAULT_TIMEOUT,
    shutdown: bool = True,
) -> tuple[list[CoercionOutcome], SessionStats]:
    """Drive one handshake-predict*-bye session, coercing every reply.

    Yields exactly one outcome per request in order. A timeout or transport
    drop turns the affected request (and, for drops, all remaining ones)
    into adapter_error fallbacks.
    """
    endpoint.set_timeout(timeout)
    stats = handshake(endpoint, mode, timeout)
    outcomes: list[CoercionOutcome] = []
    transport_up = True
    for req in requests:
        stats.requests += 1
        if not transport_up:
            outcome = coerce_response(_error_response(req.request_id, "transport closed"), req.expected_dim, rng)
            stats.record_fallback(ADAPTER_ERROR)
            outcomes.append(outcome)
            continue
        wire = _strip_oversized_images(request_to_wire(req), stats.max_image_bytes, stats)
        started = time.monotonic()
        try:
            endpoint.send(wire)
            reply = endpoint.recv(timeout)
        except TransportClosed:
            transport_up = False
            outcomes.append(coerce_response(_error_response(req.request_id, "transport closed"), req.expected_dim, rng))
            stats.record_fallback(ADAPTER_ERROR)
            continue
        except TimeoutError:
            outcomes.append(coerce_response(_error_response(req.request_id, "timeout"), req.expected_dim, rng))
            stats.record_fallback(ADAPTER_ERROR)
            continue
        latency = time.monotonic() - started
        stats.total_latency += latency
        stats.max_latency = max(stats.max_latency, latency)
        response = wire_to_response(reply)
        if response.request_id != req.request_id:
            response = _error_response(req.request_id, "request_id mismatch")
        outcome = coerce_response(response, req.expected_dim, rng)
        if outcome.used_fallback:
            stats.record_fallback(outcome.reason)
        outcomes.append(outcome)
    if shutdown and transport_up:
        try:
            endpoint.send({"type": "bye"})
        except TransportClosed:
            pass
    endpoint.close()
    return outcomes, stats


def _error_response(request_id: str, message: str):
    from .adapter import AdapterResponse

    return AdapterResponse(request_id=request_id, error=message)


def open_endpoint(spec: str | Sequence[str]) -> Endpoint:
    """Resolve an endpoint spec: an argv list spawns a process; a string
    URL selects tcp://host:port, http(s)://..., or builtin:<policy>."""
    if not isinstance(spec, str):
        return ProcessEndpoint(spec)
    if spec.startswith("tcp://"):
        rest = spec[len("tcp://") :]
        host, _, port = rest.partition(":")
        return TcpEndpoint(host, int(port))
    if spec.startswith(("http://", "https://")):
        return HttpEndpoint(spec)
    if spec.startswith("builtin:"):
        from .localadapter import make_builtin_endpoint

        return make_builtin_endpoint(spec[len("builtin:") :])
    raise ValueError(f"cannot interpret endpoint spec {spec!r}")
