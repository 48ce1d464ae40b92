#!/usr/bin/env python3
"""Generate the bundled desk-scale fixture datasets.

Three synthetic datasets cover the ingestion matrix: JSON-lines with a
binary gripper, per-step TFRecords with PNG images and a terminal
dimension, and per-episode TFRecords with raw images. The per-episode
dataset is also emitted as JSON-lines (under equivalence/) with identical
content for the ingestion-path equivalence tests.

Every float is exactly representable in float32 so the two paths agree
bit-for-bit after widening. Generation is fully seeded.
"""

import io
import json
import struct
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from PIL import Image as PILImage

from oxbench import actionspace as asp
from oxbench.example_proto import BYTES_KIND, FLOAT_KIND, INT64_KIND, Feature, encode_example
from oxbench.ingest import KeyMapping
from oxbench.registry import ConversionSpec, DatasetDescriptor, Registry, registry_to_json
from oxbench.rng import Xoshiro256StarStar
from oxbench.tfrecord import write_record

ROOT = Path(__file__).resolve().parents[1] / "fixtures"


def f32(x: float) -> float:
    return struct.unpack("<f", struct.pack("<f", x))[0]


def rand_f32(rng, lo=0.0, hi=1.0) -> float:
    return f32(lo + (hi - lo) * rng.uniform())


def rand_bytes(rng, n: int) -> bytes:
    out = bytearray()
    while len(out) < n:
        out.extend(rng.next_u64().to_bytes(8, "little"))
    return bytes(out[:n])


def png_rgb(rng, w=8, h=6) -> bytes:
    img = PILImage.frombytes("RGB", (w, h), rand_bytes(rng, w * h * 3))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


# --- fix_pick_bin: JSONL, 4D (1 grip, 3 pos), binary gripper --------------------


def gen_pick_bin(rng) -> list[dict]:
    episodes = []
    for e in range(10):
        steps = []
        n_steps = 4 + (rng.next_u64() % 5)
        for s in range(n_steps):
            grip = 1.0 if rng.uniform() > 0.5 else 0.0
            action = [grip] + [rand_f32(rng, -1.0, 1.0) for _ in range(3)]
            steps.append(
                {
                    "observation": {"state": [rand_f32(rng, -0.5, 0.5) for _ in range(3)]},
                    "action": {"action": action},
                    "is_terminal": s == n_steps - 1,
                }
            )
        episodes.append(
            {
                "episode_id": f"pick-{e:03d}",
                "instruction": "pick up the block and place it in the bin",
                "steps": steps,
            }
        )
    return episodes


# --- fix_route_term: per-step TFRecords, 7D (3 ang, 3 pos, 1 term), PNG ----------


def gen_route_term(rng, sink) -> None:
    for e in range(8):
        n_steps = 3 + (rng.next_u64() % 4)
        imageless = e == 5  # one episode without any camera stream
        for s in range(n_steps):
            terminal = 1 if s == n_steps - 1 else 0
            features = {
                "robot_state": Feature(FLOAT_KIND, tuple(rand_f32(rng, -0.5, 0.5) for _ in range(6))),
                "action": Feature(
                    FLOAT_KIND,
                    tuple(rand_f32(rng, -1.0, 1.0) for _ in range(6)) + (float(terminal),),
                ),
                "is_terminal": Feature(INT64_KIND, (terminal,)),
                "is_last": Feature(INT64_KIND, (terminal,)),
            }
            if not imageless:
                features["image"] = Feature(BYTES_KIND, (png_rgb(rng),))
            write_record(sink, encode_example(features))


# --- fix_cloth_cont: per-episode TFRecords + JSONL twin, 4D (3 pos, 1 grip) ------


def gen_cloth_cont(rng) -> list[dict]:
    episodes = []
    for e in range(6):
        n_steps = 3 + (rng.next_u64() % 3)
        steps = []
        for s in range(n_steps):
            action = [rand_f32(rng, -1.0, 1.0) for _ in range(3)] + [rand_f32(rng)]
            steps.append(
                {
                    "observation": {
                        "state": [rand_f32(rng, -0.2, 0.2) for _ in range(2)],
                        "image": {"w": 4, "h": 4, "c": 2, "b64": None, "raw": rand_bytes(rng, 32)},
                    },
                    "action": {"action": action},
                    "is_terminal": s == n_steps - 1,
                }
            )
        episodes.append(
            {
                "episode_id": f"cloth-{e:03d}",
                "instruction": "fold the cloth" if e % 2 == 0 else "flatten the cloth",
                "steps": steps,
            }
        )
    return episodes


def cloth_to_tfrecord(episodes, sink) -> None:
    for episode in episodes:
        n = len(episode["steps"])
        state = []
        action = []
        images = []
        terminal = []
        for step in episode["steps"]:
            state.extend(step["observation"]["state"])
            action.extend(step["action"]["action"])
            images.append(step["observation"]["image"]["raw"])
            terminal.append(1 if step["is_terminal"] else 0)
        features = {
            "steps": Feature(INT64_KIND, (n,)),
            "episode_id": Feature(BYTES_KIND, (episode["episode_id"].encode(),)),
            "language_instruction": Feature(BYTES_KIND, (episode["instruction"].encode(),)),
            "state": Feature(FLOAT_KIND, tuple(state)),
            "action": Feature(FLOAT_KIND, tuple(action)),
            "rgb_cam": Feature(BYTES_KIND, tuple(images)),
            "is_terminal": Feature(INT64_KIND, tuple(terminal)),
        }
        write_record(sink, encode_example(features))


def cloth_to_jsonl(episodes) -> list[dict]:
    import base64

    out = []
    for episode in episodes:
        steps = []
        for step in episode["steps"]:
            img = step["observation"]["image"]
            steps.append(
                {
                    "observation": {
                        "state": step["observation"]["state"],
                        "image": {
                            "image": {
                                "w": img["w"],
                                "h": img["h"],
                                "c": img["c"],
                                "b64": base64.b64encode(img["raw"]).decode("ascii"),
                            }
                        },
                    },
                    "action": step["action"],
                    "is_terminal": step["is_terminal"],
                }
            )
        out.append({"episode_id": episode["episode_id"], "instruction": episode["instruction"], "steps": steps})
    return out


def fixture_registry() -> Registry:
    def descriptions(sig):
        return tuple(f"{d.name}: synthetic {d.kind} channel" for d in asp.parse_signature(sig).dims)

    datasets = (
        DatasetDescriptor(
            name="Fixture Pick (binary gripper)",
            registered_name="fix_pick_bin",
            robot_model="fixture-arm",
            gripper_spec="parallel jaw",
            action_space=asp.parse_signature("4D (1 grip, 3 pos)"),
            rgb_cameras=0,
            has_language=True,
            has_proprio=True,
            episode_count=10,
            key_mapping=KeyMapping.from_dict(
                {"layout": "per_step", "observation_keys": {"state": "state"}, "action_keys": ["action"]}
            ),
            task_description="synthetic pick-and-place traces",
            conversions=ConversionSpec(gripper_mode="binary"),
            dim_descriptions=descriptions("4D (1 grip, 3 pos)"),
        ),
        DatasetDescriptor(
            name="Fixture Routing (terminal dim)",
            registered_name="fix_route_term",
            robot_model="fixture-arm",
            gripper_spec="none",
            action_space=asp.parse_signature("7D (3 ang, 3 pos, 1 term)"),
            rgb_cameras=1,
            has_proprio=True,
            episode_count=8,
            key_mapping=KeyMapping.from_dict(
                {
                    "layout": "per_step",
                    "observation_keys": {"robot_state": "state"},
                    "action_keys": ["action"],
                    "image_keys": [{"feature_key": "image", "view": "image", "encoding": "png"}],
                    "primary_view": "image",
                    "terminal_key": "is_terminal",
                    "boundary": {"key": "is_last", "mode": "last"},
                }
            ),
            task_description="synthetic routing traces with a terminal flag",
            conversions=ConversionSpec(strip_terminal=True),
            dim_descriptions=descriptions("7D (3 ang, 3 pos, 1 term)"),
        ),
        DatasetDescriptor(
            name="Fixture Cloth (continuous gripper)",
            registered_name="fix_cloth_cont",
            robot_model="fixture-picker",
            gripper_spec="point gripper",
            action_space=asp.parse_signature("4D (3 pos, 1 grip)"),
            rgb_cameras=1,
            has_language=True,
            episode_count=6,
            key_mapping=KeyMapping.from_dict(
                {
                    "layout": "per_episode",
                    "observation_keys": {"state": "state"},
                    "action_keys": ["action"],
                    "image_keys": [
                        {"feature_key": "rgb_cam", "view": "image", "encoding": "raw", "width": 4, "height": 4, "channels": 2}
                    ],
                    "primary_view": "image",
                    "instruction_key": "language_instruction",
                    "terminal_key": "is_terminal",
                    "episode_id_key": "episode_id",
                    "step_count_key": "steps",
                }
            ),
            task_description="synthetic cloth folding traces",
            conversions=ConversionSpec(),
            dim_descriptions=descriptions("4D (3 pos, 1 grip)"),
        ),
    )
    return Registry(datasets=datasets)


def main():
    data = ROOT / "data"
    equiv = ROOT / "equivalence"
    data.mkdir(parents=True, exist_ok=True)
    equiv.mkdir(parents=True, exist_ok=True)

    (ROOT / "registry.json").write_text(registry_to_json(fixture_registry()), encoding="utf-8")

    rng = Xoshiro256StarStar(20240817)
    with open(data / "fix_pick_bin.jsonl", "w", encoding="utf-8") as f:
        for episode in gen_pick_bin(rng):
            f.write(json.dumps(episode, sort_keys=True) + "\n")

    rng = Xoshiro256StarStar(1138)
    with open(data / "fix_route_term.tfrecord", "wb") as f:
        gen_route_term(rng, f)

    rng = Xoshiro256StarStar(90210)
    cloth = gen_cloth_cont(rng)
    with open(data / "fix_cloth_cont.tfrecord", "wb") as f:
        cloth_to_tfrecord(cloth, f)
    with open(equiv / "fix_cloth_cont.jsonl", "w", encoding="utf-8") as f:
        for episode in cloth_to_jsonl(cloth):
            f.write(json.dumps(episode, sort_keys=True) + "\n")

    print(f"fixtures written under {ROOT}")


if __name__ == "__main__":
    main()
