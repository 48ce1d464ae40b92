"""The `bench` command line: validate / stats / eval / report.

Progress and log lines go to stderr; reports go to files (or stdout when
explicitly requested via `report`). Exit codes: 0 success, 1 dataset
failures, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from . import actionspace as asp
from .errors import ConfigError, OxbenchError
from .ingest import PER_EPISODE, PER_STEP
from .metrics import flatten_action
from .pipeline import RunConfig, RunManifest, load_episodes, run_eval
from .registry import load_registry
from .reporting import reports_to_csv, reports_to_json, reports_to_markdown


def _log(message: str) -> None:
    print(message, file=sys.stderr)


# --- validate -------------------------------------------------------------------


def validate_registry(path: str) -> list[str]:
    """Schema, signature, and key-mapping diagnostics; empty means valid."""
    diagnostics: list[str] = []
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        return [f"registry unreadable: {exc}"]
    if not isinstance(raw, dict) or "datasets" not in raw:
        return ["registry must be an object with a 'datasets' list"]
    seen: set[str] = set()
    for i, entry in enumerate(raw.get("datasets", [])):
        name = entry.get("registered_name", f"<datasets[{i}]>") if isinstance(entry, dict) else f"<datasets[{i}]>"
        if not isinstance(entry, dict):
            diagnostics.append(f"{name}: entry must be an object")
            continue
        if name in seen:
            diagnostics.append(f"{name}: duplicate registered_name")
        seen.add(name)
        for required in ("name", "registered_name", "robot_model", "gripper_spec", "action_space"):
            if required not in entry:
                diagnostics.append(f"{name}: missing field {required!r}")
        signature = entry.get("action_space")
        spec = None
        if isinstance(signature, str):
            try:
                spec = asp.parse_signature(signature)
            except asp.SignatureParseError as exc:
                diagnostics.append(f"{name}: {exc}")
        mapping = entry.get("key_mapping", {})
        if not isinstance(mapping, dict):
            diagnostics.append(f"{name}: key_mapping must be an object")
            mapping = {}
        layout = mapping.get("layout", PER_STEP)
        if layout not in (PER_STEP, PER_EPISODE):
            diagnostics.append(f"{name}: unknown layout {layout!r}")
        if not mapping.get("action_keys"):
            diagnostics.append(f"{name}: key_mapping declares no action keys")
        if layout == PER_EPISODE and not mapping.get("step_count_key"):
            diagnostics.append(f"{name}: per_episode layout requires step_count_key")
        views = []
        for img in mapping.get("image_keys", []):
            if "feature_key" not in img:
                diagnostics.append(f"{name}: image mapping missing feature_key")
                continue
            views.append(img.get("view", img["feature_key"]))
            if img.get("encoding", "raw") == "raw" and not all(
                img.get(k) for k in ("width", "height", "channels")
            ):
                diagnostics.append(f"{name}: raw image {img['feature_key']!r} needs width/height/channels")
            if img.get("encoding", "raw") not in ("raw", "png"):
                diagnostics.append(f"{name}: unsupported image encoding {img.get('encoding')!r}")
        primary = mapping.get("primary_view")
        if views and primary is not None and primary not in views:
            diagnostics.append(f"{name}: primary_view {primary!r} is not a mapped view")
        descriptions = entry.get("dim_descriptions")
        if spec is not None and descriptions and len(descriptions) != len(spec.dims):
            diagnostics.append(
                f"{name}: {len(descriptions)} dim_descriptions for {len(spec.dims)} dimensions"
            )
        conversions = entry.get("conversions", {})
        if isinstance(conversions, dict):
            from .registry import GRIPPER_MODES, UNNORMALIZE_MODES

            if conversions.get("gripper_mode", "none") not in GRIPPER_MODES:
                diagnostics.append(f"{name}: unknown gripper_mode {conversions.get('gripper_mode')!r}")
            if conversions.get("unnormalize", "none") not in UNNORMALIZE_MODES:
                diagnostics.append(f"{name}: unknown unnormalize {conversions.get('unnormalize')!r}")
    return diagnostics


def cmd_validate(args) -> int:
    diagnostics = validate_registry(args.registry)
    for line in diagnostics:
        print(line)
    _log(f"validate: {len(diagnostics)} diagnostic(s)")
    return 2 if diagnostics else 0


# --- stats ----------------------------------------------------------------------


def cmd_stats(args) -> int:
    if args.registry:
        registry = load_registry(args.registry)
    else:
        from .registry import load_bundled_registry

        registry = load_bundled_registry()
    descriptor = registry.get(args.dataset)
    path = Path(args.path)
    episodes = load_episodes(path, descriptor)
    vectors = [flatten_action(step.action) for e in episodes for step in e.steps]
    stats = asp.compute_action_stats(vectors, len(descriptor.action_space.dims))
    out = Path(args.out) if args.out else Path(f"{args.dataset}_stats.json")
    out.write_text(json.dumps(stats.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _log(f"stats: wrote {out} ({stats.sample_count} samples)")
    return 0


# --- eval -----------------------------------------------------------------------


def _load_config(args) -> RunConfig:
    base: dict = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    if args.adapter_cmd:
        base["adapter"] = args.adapter_cmd
    if args.adapter_url:
        base["adapter"] = args.adapter_url
    if args.registry:
        base["registry_path"] = args.registry
    if args.data_dir:
        base["data_dir"] = args.data_dir
    if args.out:
        base["output_dir"] = args.out
    if args.datasets:
        base["datasets"] = [d for d in args.datasets.split(",") if d]
    if args.seed is not None:
        base["split_seed"] = args.seed
        base["fallback_seed"] = args.seed
    if args.split_seed is not None:
        base["split_seed"] = args.split_seed
    if args.fallback_seed is not None:
        base["fallback_seed"] = args.fallback_seed
    if args.split_fraction is not None:
        base["split_fraction"] = args.split_fraction
    if args.epsilon is not None:
        base["completion_epsilon"] = args.epsilon
    if args.mode:
        base["mode"] = args.mode
    if args.image_policy:
        base["image_policy"] = args.image_policy
    if args.timeout is not None:
        base["timeout"] = args.timeout
    if args.workers is not None:
        base["workers"] = args.workers
    if args.four_channel:
        base["four_channel_images"] = True
    return RunConfig.from_dict(base)


def cmd_eval(args) -> int:
    config = _load_config(args)
    _log(f"eval: {config.mode} run with adapter {config.adapter!r}")
    manifest = run_eval(config)
    for report in manifest.reports:
        _log(
            f"  {report.dataset}: amse={report.amse:.6g} namse={report.namse:.6g} "
            f"completion={report.completion_rate * 100:.3f}% fallback={report.fallback_rate:.3f}"
        )
    for name, error in manifest.failures.items():
        _log(f"  {name}: FAILED ({error})")
    _log(f"eval: outputs under {config.output_dir}")
    return 1 if manifest.failures else 0


# --- report ---------------------------------------------------------------------


def cmd_report(args) -> int:
    path = Path(args.manifest)
    if not path.exists():
        from .errors import MissingManifest

        raise MissingManifest(str(path))
    manifest = RunManifest.from_dict(json.loads(path.read_text(encoding="utf-8")))
    if args.format == "csv":
        rendered = reports_to_csv(manifest.reports)
    elif args.format == "json":
        rendered = reports_to_json(manifest.reports)
    else:
        rendered = reports_to_markdown(manifest.reports, manifest.adapter_name)
    if args.out:
        Path(args.out).write_text(rendered, encoding="utf-8")
        _log(f"report: wrote {args.out}")
    else:
        sys.stdout.write(rendered)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bench", description="Offline action-prediction benchmark harness")
    parser.add_argument("--version", action="version", version=f"bench {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a registry file")
    p.add_argument("registry")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", help="compute action statistics for a dataset file")
    p.add_argument("dataset")
    p.add_argument("path")
    p.add_argument("--registry", help="defaults to the bundled registry")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("eval", help="run an evaluation")
    p.add_argument("--config")
    p.add_argument("--adapter-cmd", nargs=argparse.REMAINDER, default=None,
                   help="spawn an adapter process (consumes the rest of the line)")
    p.add_argument("--adapter-url", help="tcp://host:port, http(s)://..., or builtin:<policy>")
    p.add_argument("--registry")
    p.add_argument("--data-dir")
    p.add_argument("--datasets", help="comma-separated registered names")
    p.add_argument("--seed", type=int, help="sets both split and fallback seeds")
    p.add_argument("--split-seed", type=int)
    p.add_argument("--fallback-seed", type=int)
    p.add_argument("--split-fraction", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--mode", choices=("eval", "verify"))
    p.add_argument("--image-policy", choices=("primary_only", "all_views"))
    p.add_argument("--timeout", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--four-channel", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="render tables from a manifest")
    p.add_argument("manifest")
    p.add_argument("--format", choices=("csv", "json", "md"), default="md")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        _log(f"configuration error: {exc}")
        return 2
    except OxbenchError as exc:
        _log(f"error: {type(exc).__name__}: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
