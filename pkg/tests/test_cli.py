import json
from pathlib import Path

import pytest

from oxbench.cli import main, validate_registry


def run_cli(*argv) -> int:
    return main(list(argv))


# --- validate ----------------------------------------------------------------------


def test_validate_bundled_registry_clean(bundled_registry_path, capsys):
    assert run_cli("validate", str(bundled_registry_path)) == 0
    assert capsys.readouterr().out == ""


def test_validate_fixture_registry_clean(fixture_registry_path):
    assert validate_registry(str(fixture_registry_path)) == []


def registry_with(tmp_path, **overrides) -> Path:
    entry = {
        "name": "Broken",
        "registered_name": "broken_ds",
        "robot_model": "arm",
        "gripper_spec": "jaw",
        "action_space": "4D (1 grip, 3 pos)",
        "episode_count": 3,
        "key_mapping": {"layout": "per_step", "action_keys": ["action"]},
    }
    entry.update(overrides)
    path = tmp_path / "registry.json"
    path.write_text(json.dumps({"version": 1, "datasets": [entry]}))
    return path


def test_validate_flags_arity_mismatch(tmp_path, capsys):
    path = registry_with(tmp_path, action_space="7D (3 ang, 3 pos)")
    assert run_cli("validate", str(path)) == 2
    out = capsys.readouterr().out
    assert "declared 7 dims but groups sum to 6" in out


def test_validate_flags_missing_action_keys(tmp_path, capsys):
    path = registry_with(tmp_path, key_mapping={"layout": "per_step", "action_keys": []})
    assert run_cli("validate", str(path)) == 2
    assert "broken_ds" in capsys.readouterr().out


def test_validate_flags_bad_layout_and_raw_image(tmp_path):
    path = registry_with(
        tmp_path,
        key_mapping={
            "layout": "sideways",
            "action_keys": ["action"],
            "image_keys": [{"feature_key": "img", "encoding": "raw"}],
        },
    )
    diags = validate_registry(str(path))
    assert any("layout" in d for d in diags)
    assert any("width/height/channels" in d for d in diags)


def test_validate_unreadable_file(tmp_path):
    assert validate_registry(str(tmp_path / "missing.json"))


# --- stats -------------------------------------------------------------------------


def test_stats_matches_sort_oracle_and_is_idempotent(tmp_path, fixture_registry_path, fixture_data_dir):
    out = tmp_path / "stats.json"
    code = run_cli(
        "stats",
        "fix_pick_bin",
        str(fixture_data_dir / "fix_pick_bin.jsonl"),
        "--registry",
        str(fixture_registry_path),
        "--out",
        str(out),
    )
    assert code == 0
    first = out.read_bytes()
    stats = json.loads(first)

    # independent recomputation
    values = []
    with open(fixture_data_dir / "fix_pick_bin.jsonl") as f:
        for line in f:
            for step in json.loads(line)["steps"]:
                values.append(step["action"]["action"])
    columns = list(zip(*values))
    assert stats["sample_count"] == len(values)
    for d, col in enumerate(columns):
        ordered = sorted(col)
        assert stats["min"][d] == ordered[0]
        assert stats["max"][d] == ordered[-1]
        assert stats["mean"][d] == pytest.approx(sum(col) / len(col), abs=1e-12)
        import math

        assert stats["q01"][d] == ordered[max(1, math.ceil(0.01 * len(ordered))) - 1]
        assert stats["q99"][d] == ordered[max(1, math.ceil(0.99 * len(ordered))) - 1]

    # rerun: byte-identical output
    assert run_cli(
        "stats",
        "fix_pick_bin",
        str(fixture_data_dir / "fix_pick_bin.jsonl"),
        "--registry",
        str(fixture_registry_path),
        "--out",
        str(out),
    ) == 0
    assert out.read_bytes() == first


def test_stats_empty_dataset_fails(tmp_path, fixture_registry_path):
    empty = tmp_path / "fix_pick_bin.jsonl"
    empty.write_text("")
    code = run_cli(
        "stats", "fix_pick_bin", str(empty), "--registry", str(fixture_registry_path), "--out", str(tmp_path / "s.json")
    )
    assert code == 1


# --- eval + report -----------------------------------------------------------------


def eval_args(tmp_path, fixtures, out="out", **flags):
    argv = [
        "eval",
        "--registry",
        str(fixtures / "registry.json"),
        "--data-dir",
        str(fixtures / "data"),
        "--adapter-url",
        flags.pop("adapter", "builtin:replay"),
        "--mode",
        flags.pop("mode", "verify"),
        "--split-fraction",
        "0.5",
        "--seed",
        "3",
        "--out",
        str(tmp_path / out),
    ]
    for key, value in flags.items():
        argv.extend([f"--{key}", str(value)])
    return argv


def test_eval_and_report_round_trip(tmp_path, fixtures_dir, capsys):
    assert run_cli(*eval_args(tmp_path, fixtures_dir)) == 0
    manifest_path = tmp_path / "out" / "manifest.json"
    assert manifest_path.exists()

    assert run_cli("report", str(manifest_path), "--format", "md") == 0
    md = capsys.readouterr().out
    assert "| Dataset Name |" in md
    assert "| fix_pick_bin |" in md
    assert "100.000%" in md

    assert run_cli("report", str(manifest_path), "--format", "csv", "--out", str(tmp_path / "r.csv")) == 0
    from oxbench.reporting import csv_to_rows

    rows = csv_to_rows((tmp_path / "r.csv").read_text())
    manifest = json.loads(manifest_path.read_text())
    by_name = {r["dataset"]: r for r in manifest["reports"]}
    for row in rows:
        assert row["amse"] == by_name[row["dataset"]]["amse"]
        assert row["completion_pct"] == by_name[row["dataset"]]["completion_rate"] * 100.0


def test_report_empty_manifest_headers_only(tmp_path, capsys):
    manifest = {
        "config": {},
        "reports": [],
        "failures": {},
        "timings": {},
        "harness_version": "0",
        "content_hash": "x",
        "adapter_name": "m",
    }
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(manifest))
    assert run_cli("report", str(path), "--format", "csv") == 0
    out = capsys.readouterr().out
    assert out.strip() == "dataset,amse,namse,completion_pct,fallback_rate,n"


def test_report_missing_manifest_fails(tmp_path):
    assert run_cli("report", str(tmp_path / "nope.json")) == 1


def test_eval_partial_failure_exit_code(tmp_path, fixtures_dir):
    # route fixture data removed -> that dataset fails, others succeed
    import shutil

    data = tmp_path / "data"
    shutil.copytree(fixtures_dir / "data", data)
    (data / "fix_route_term.tfrecord").unlink()
    argv = eval_args(tmp_path, fixtures_dir)
    argv[argv.index("--data-dir") + 1] = str(data)
    assert run_cli(*argv) == 1
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert set(manifest["failures"]) == {"fix_route_term"}


def test_eval_config_error_exit_code(tmp_path):
    assert run_cli("eval", "--out", str(tmp_path / "x")) == 2


def test_eval_with_config_file_and_overrides(tmp_path, fixtures_dir):
    config = {
        "registry_path": str(fixtures_dir / "registry.json"),
        "data_dir": str(fixtures_dir / "data"),
        "output_dir": str(tmp_path / "cfg_out"),
        "adapter": "builtin:replay",
        "mode": "verify",
        "split_fraction": 0.5,
        "datasets": ["fix_pick_bin"],
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    assert run_cli("eval", "--config", str(path), "--datasets", "fix_cloth_cont") == 0
    manifest = json.loads((tmp_path / "cfg_out" / "manifest.json").read_text())
    assert [r["dataset"] for r in manifest["reports"]] == ["fix_cloth_cont"]


def test_eval_unknown_config_field_rejected(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"registry_path": "x", "data_dir": "y", "output_dir": "z", "adapter": "a", "typo": 1}))
    assert run_cli("eval", "--config", str(path)) == 2
