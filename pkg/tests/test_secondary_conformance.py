"""Conformance of the TypeScript baseline adapters against the harness.

Each test spawns `node frontend/dist/src/cli.js` and drives it through the
real session machinery, so the wire protocol is exercised end to end
across the language boundary. Skipped when the frontend bundle has not
been built (`cd frontend && npm install && npm run build`).
"""

import contextlib
import shutil
import socket
import subprocess
import sys
import time
from pathlib import Path

import pytest

from oxbench import actionspace as asp
from oxbench.adapter import AdapterRequest
from oxbench.pipeline import RunConfig, run_eval
from oxbench.rng import Xoshiro256StarStar
from oxbench.session import HttpEndpoint, ProcessEndpoint, run_adapter_session

REPO = Path(__file__).resolve().parents[1]
ADAPTER_CLI = REPO / "frontend" / "dist" / "src" / "cli.js"
NODE = shutil.which("node")

pytestmark = pytest.mark.skipif(
    NODE is None or not ADAPTER_CLI.exists(),
    reason="frontend bundle not built (cd frontend && npm install && npm run build)",
)


def adapter_cmd(*args: str) -> list[str]:
    return [NODE, str(ADAPTER_CLI), *args]


def spec3():
    return asp.parse_signature("3D (3 pos)")


def stats3():
    return asp.ActionStats((0.0,) * 3, (1.0,) * 3, (0.5,) * 3, (0.0,) * 3, (1.0,) * 3, 5)


def requests(n=5):
    return [
        AdapterRequest(
            request_id=f"ds/e0/{i}",
            dataset="ds",
            step_index=i,
            observation_vector=(float(i),),
            action_space=spec3(),
            action_stats=stats3(),
            verification_ground_truth=(0.1 * i, 0.2, 0.3),
        )
        for i in range(n)
    ]


@pytest.mark.parametrize("policy", ["replay", "mean_action", "random_uniform", "constant"])
def test_policy_passes_conformance_suite(policy):
    endpoint = ProcessEndpoint(
        adapter_cmd("--policy", policy, "--seed", "4", "--constant", "0.5,0.5,0.5")
    )
    outcomes, stats = run_adapter_session(endpoint, requests(4), Xoshiro256StarStar(1), mode="verify")
    assert stats.handshake_ok
    assert stats.adapter_name == f"baseline-{policy}"
    assert stats.fallbacks == 0  # ids echoed, lengths correct
    for outcome in outcomes:
        assert len(outcome.action) == 3
    # the endpoint was shut down cleanly by the session (bye); spawning again works
    endpoint2 = ProcessEndpoint(adapter_cmd("--policy", policy, "--constant", "0.5,0.5,0.5"))
    outcomes2, _ = run_adapter_session(endpoint2, requests(1), Xoshiro256StarStar(1), mode="verify")
    assert len(outcomes2) == 1


def test_replay_echoes_ground_truth_exactly():
    endpoint = ProcessEndpoint(adapter_cmd("--policy", "replay"))
    outcomes, _ = run_adapter_session(endpoint, requests(5), Xoshiro256StarStar(1), mode="verify")
    for i, outcome in enumerate(outcomes):
        assert outcome.action == (0.1 * i, 0.2, 0.3)


def test_random_uniform_streams_are_reproducible_per_seed():
    a, _ = run_adapter_session(
        ProcessEndpoint(adapter_cmd("--policy", "random_uniform", "--seed", "11")),
        requests(4),
        Xoshiro256StarStar(1),
        mode="verify",
    )
    b, _ = run_adapter_session(
        ProcessEndpoint(adapter_cmd("--policy", "random_uniform", "--seed", "11")),
        requests(4),
        Xoshiro256StarStar(1),
        mode="verify",
    )
    assert [o.action for o in a] == [o.action for o in b]
    assert all(0.0 <= v < 1.0 for o in a for v in o.action)


def test_random_uniform_matches_harness_rng_bit_for_bit():
    # both implementations pin the same generator, so the stream is shared
    outcomes, _ = run_adapter_session(
        ProcessEndpoint(adapter_cmd("--policy", "random_uniform", "--seed", "42")),
        requests(2),
        Xoshiro256StarStar(1),
        mode="verify",
    )
    mirror = Xoshiro256StarStar(42)
    expected = [tuple(mirror.uniform() for _ in range(3)) for _ in range(2)]
    assert [o.action for o in outcomes] == expected


@pytest.mark.parametrize(
    "fault,extra,expected_reasons",
    [
        ("wrong_length", (), ["wrong_length"] * 4),
        ("text_reply", (), ["mixed_text"] * 4),
        ("mixed_reply", (), ["mixed_text"] * 4),
        ("drop_connection", ("--drop-after", "2"), [None, None, "adapter_error", "adapter_error"]),
    ],
)
def test_misbehave_modes_induce_intended_reasons(fault, extra, expected_reasons):
    endpoint = ProcessEndpoint(adapter_cmd("--policy", "mean_action", "--fault", fault, *extra))
    outcomes, _ = run_adapter_session(endpoint, requests(4), Xoshiro256StarStar(1), mode="verify")
    assert [o.reason for o in outcomes] == expected_reasons


def test_slow_fault_times_out_as_adapter_error():
    endpoint = ProcessEndpoint(
        adapter_cmd("--policy", "mean_action", "--fault", "slow", "--slow-ms", "3000")
    )
    outcomes, _ = run_adapter_session(
        endpoint, requests(1), Xoshiro256StarStar(1), mode="verify", timeout=0.5
    )
    assert outcomes[0].reason == "adapter_error"


def test_replay_end_to_end_from_cli(tmp_path, fixtures_dir):
    config = RunConfig.from_dict(
        {
            "registry_path": str(fixtures_dir / "registry.json"),
            "data_dir": str(fixtures_dir / "data"),
            "output_dir": str(tmp_path / "out"),
            "adapter": adapter_cmd("--policy", "replay"),
            "mode": "verify",
            "split_fraction": 0.5,
            "split_seed": 2,
            "fallback_seed": 2,
        }
    )
    manifest = run_eval(config)
    assert not manifest.failures
    assert len(manifest.reports) == 3
    for report in manifest.reports:
        assert report.amse == 0.0
        assert report.completion_rate == 1.0
        assert report.run_metadata["adapter"] == "baseline-replay"
    print("ACCEPTANCE Protocol conformance (secondary): PASS", file=sys.stderr)


def free_port() -> int:
    with contextlib.closing(socket.socket()) as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_http_transport_round_trip():
    port = free_port()
    proc = subprocess.Popen(
        adapter_cmd("--policy", "constant", "--constant", "0.25,0.5,0.75", "--transport", "http", "--port", str(port)),
        stderr=subprocess.PIPE,
    )
    try:
        deadline = time.monotonic() + 10
        while time.monotonic() < deadline:
            try:
                with socket.create_connection(("127.0.0.1", port), timeout=0.2):
                    break
            except OSError:
                time.sleep(0.05)
        outcomes, stats = run_adapter_session(
            HttpEndpoint(f"http://127.0.0.1:{port}/"),
            requests(3),
            Xoshiro256StarStar(1),
            mode="verify",
        )
        assert stats.adapter_name == "baseline-constant"
        assert [o.action for o in outcomes] == [(0.25, 0.5, 0.75)] * 3
    finally:
        proc.terminate()
        proc.wait(timeout=5)
