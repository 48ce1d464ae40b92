#!/usr/bin/env python3
"""Regenerate the bundled registry of the 20 evaluated datasets.

Dataset names and action-space signature strings follow the upstream
dataset registrations. Robot/sensor metadata and episode counts are
desk-scale stand-ins (the real corpus is not bundled); they only need to
be internally consistent and pairwise distinct under the curation
feature tuple.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from oxbench import actionspace as asp
from oxbench.ingest import KeyMapping
from oxbench.registry import ConversionSpec, DatasetDescriptor, Registry, registry_to_json

_KIND_TEXT = {
    asp.POSITION: "end-effector position delta along one axis",
    asp.ANGULAR: "end-effector orientation delta about one axis",
    asp.GRIPPER: "gripper command (0 = closed, 1 = open)",
    asp.TERMINAL: "episode termination flag",
    asp.VELOCITY: "end-effector linear velocity along one axis",
    asp.ANGULAR_VELOCITY: "end-effector angular velocity about one axis",
    asp.TORQUE: "gripper torque command",
    asp.GAIN: "controller gain coefficient",
    asp.DAMPING: "controller damping ratio coefficient",
    asp.POSE: "end-effector pose component",
    asp.QUATERNION: "end-effector orientation quaternion component",
}


def dim_descriptions(signature: str) -> list[str]:
    spec = asp.parse_signature(signature)
    return [f"{d.name}: {_KIND_TEXT[d.kind]}" for d in spec.dims]


def mapping(image_key="image", instruction_key="natural_language_instruction", state_keys=("state",),
            encoding="png", width=None, height=None, channels=3, extra_images=()):
    images = []
    if image_key:
        spec = {"feature_key": image_key, "view": "image", "encoding": encoding}
        if encoding == "raw":
            spec.update(width=width, height=height, channels=channels)
        images.append(spec)
    for key, view in extra_images:
        images.append({"feature_key": key, "view": view, "encoding": encoding})
    return {
        "layout": "per_step",
        "observation_keys": {k: k for k in state_keys},
        "action_keys": ["action"],
        "image_keys": images,
        "primary_view": "image",
        "instruction_key": instruction_key,
        "terminal_key": "is_terminal",
        "boundary": {"key": "is_last", "mode": "last"},
    }


ROWS = [
    # (name, registered_name, signature, robot, gripper, rgb, depth, wrist,
    #  lang, calib, proprio, episodes, predefined_split, conversions, mapping kwargs)
    ("Jaco Play", "jaco_play", "4D (1 grip, 3 pos)", "Jaco 2", "Kinova KG-3", 2, 0, 1,
     True, False, True, 976, False, {}, {}),
    ("Berkeley Cable Routing", "berkeley_cable_routing", "7D (3 ang, 3 pos, 1 term)", "Franka", "Franka-Hand", 2, 0, 1,
     False, True, True, 1482, False, {"strip_terminal": True}, {"instruction_key": None}),
    ("NYU Door Opening", "nyu_door_opening_surprising_effectiveness", "8D (1 grip, 3 ang, 3 pos, 1 term)",
     "Hello Stretch", "Stretch gripper", 1, 0, 1, False, False, False, 435, False,
     {"strip_terminal": True, "gripper_mode": "binary"}, {"instruction_key": None}),
    ("VIOLA", "viola", "8D (1 grip, 3 ang, 3 pos, 1 term)", "Franka", "Franka-Hand", 2, 0, 1,
     True, True, True, 135, False, {"strip_terminal": True, "gripper_mode": "binary"},
     {"image_key": "agentview_rgb", "extra_images": [("eye_in_hand_rgb", "wrist_image")]}),
    ("Berkeley Autolab UR5", "berkeley_autolab_ur5", "8D (1 grip, 3 ang, 3 pos, 1 term)", "UR5", "Robotiq 2F-85", 2, 1, 1,
     True, True, True, 896, False, {"strip_terminal": True, "gripper_mode": "ternary"},
     {"state_keys": ("robot_state",)}),
    ("TOTO", "toto", "7D (3 ang, 3 pos, 1 term)", "Franka", "Franka-Hand", 1, 0, 0,
     True, False, True, 901, True, {"strip_terminal": True}, {}),
    ("Columbia PushT", "columbia_cairlab_pusht_real", "8D (1 grip, 3 ang, 3 pos, 1 term)", "UR5", "cylindrical pusher", 1, 0, 0,
     False, True, False, 122, False, {"strip_terminal": True}, {"instruction_key": None}),
    ("NYU ROT", "nyu_rot_dataset_converted_externally_to_rlds", "7D (3 pos, 3 ang, 1 grip)", "xArm", "xArm gripper", 1, 0, 0,
     False, False, False, 14, False, {"gripper_mode": "binary"}, {"instruction_key": None}),
    ("Stanford HYDRA", "stanford_hydra_dataset_converted_externally_to_rlds", "7D (3 pos, 3 ang, 1 grip)",
     "Franka", "Franka-Hand", 2, 0, 1, True, True, True, 550, False, {"gripper_mode": "binary"}, {}),
    ("UCSD Kitchen", "ucsd_kitchen_dataset_converted_externally_to_rlds", "8D (3 pos, 3 ang, 1 grip, 1 term)",
     "xArm", "xArm gripper", 1, 0, 0, True, False, True, 150, False,
     {"strip_terminal": True, "gripper_mode": "binary"}, {}),
    ("UCSD Pick Place", "ucsd_pick_and_place_dataset_converted_externally_to_rlds", "4D (3 vel, 1 grip torque)",
     "xArm", "xArm gripper", 1, 0, 0, True, False, True, 1355, False,
     {"gripper_mode": "torque_scale"}, {}),
    ("USC Cloth Sim", "usc_cloth_sim_converted_externally_to_rlds", "4D (3 pos, 1 grip)",
     "simulated picker", "point gripper", 1, 0, 0, True, False, False, 800, False, {}, {}),
    ("Tokyo PR2 Fridge", "utokyo_pr2_opening_fridge_converted_externally_to_rlds", "8D (3 pos, 3 ang, 1 grip, 1 term)",
     "PR2", "PR2 parallel jaw", 1, 0, 0, True, False, True, 64, False,
     {"strip_terminal": True, "gripper_mode": "binary"}, {}),
    ("Tokyo PR2 Tabletop", "utokyo_pr2_tabletop_manipulation_converted_externally_to_rlds", "8D (3 pos, 3 ang, 1 grip, 1 term)",
     "PR2", "PR2 parallel jaw", 2, 0, 0, True, False, True, 192, False,
     {"strip_terminal": True, "gripper_mode": "binary"}, {}),
    ("UTokyo xArm Pick-Place", "utokyo_xarm_pick_and_place_converted_externally_to_rlds", "7D (3 pos, 3 ang, 1 grip)",
     "xArm", "xArm gripper", 2, 0, 1, True, True, True, 92, False, {"gripper_mode": "binary"}, {}),
    ("Stanford MaskVIT", "stanford_mask_vit_converted_externally_to_rlds", "5D (3 pos, 1 ang, 1 grip)",
     "Sawyer", "Sawyer gripper", 1, 0, 0, False, True, True, 9109, True, {"gripper_mode": "binary"},
     {"instruction_key": None}),
    ("ETH Agent Affordances", "eth_agent_affordances", "6D (3 vel, 3 ang vel)", "Franka", "fixed tool", 1, 1, 0,
     True, True, True, 118, False, {"unnormalize": "percentile"}, {}),
    ("Imperial Sawyer", "imperialcollege_sawyer_wrist_cam", "8D (3 pos, 3 ang, 1 grip, 1 term)",
     "Sawyer", "Sawyer gripper", 1, 0, 1, False, False, False, 170, False,
     {"strip_terminal": True, "gripper_mode": "binary"},
     {"image_key": "wrist_image", "instruction_key": None}),
    ("ConqHose", "conq_hose_manipulation", "7D (3 pos, 3 ang, 1 grip)", "Spot", "Spot gripper", 3, 0, 1,
     True, False, True, 113, False, {"gripper_mode": "binary"},
     {"image_key": "frontright_fisheye_image", "extra_images": [("hand_color_image", "wrist_image")]}),
    ("Plex RoboSuite", "plex_robosuite", "7D (6 pose, 1 grip)", "Panda", "Panda gripper", 2, 0, 1,
     False, True, True, 450, True, {"gripper_mode": "binary"}, {"instruction_key": None}),
]


def build() -> Registry:
    datasets = []
    for (name, reg, sig, robot, grip, rgb, depth, wrist, lang, calib, proprio,
         episodes, predefined, conv, map_kwargs) in ROWS:
        datasets.append(
            DatasetDescriptor(
                name=name,
                registered_name=reg,
                robot_model=robot,
                gripper_spec=grip,
                action_space=asp.parse_signature(sig),
                rgb_cameras=rgb,
                depth_cameras=depth,
                wrist_cameras=wrist,
                has_language=lang,
                has_calibration=calib,
                has_proprio=proprio,
                episode_count=episodes,
                key_mapping=KeyMapping.from_dict(mapping(**map_kwargs)),
                has_predefined_eval_split=predefined,
                task_description=f"{name} manipulation recordings on a {robot} platform",
                conversions=ConversionSpec.from_dict(conv),
                dim_descriptions=tuple(dim_descriptions(sig)),
            )
        )
    return Registry(datasets=tuple(datasets))


def main():
    out = Path(__file__).resolve().parents[1] / "src" / "oxbench" / "data" / "openx_registry.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(registry_to_json(build()), encoding="utf-8")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
