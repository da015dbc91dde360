#!/usr/bin/env python3
# Copyright 2026 The HybridLink Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes the bundled model files.

The humanoid is a 53 kg / 1.75 m subject (segment masses from standard
anthropometric fractions) with a running blade on the right side. Rod
geometry, stiffness and inertia are placeholders, not measured values.
Run from the repository root: python3 models/build_models.py
"""

import json
import math

import numpy as np


def rz(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def pose(position=(0.0, 0.0, 0.0), rotation=None):
    r = np.eye(3) if rotation is None else rotation
    return {"position": [float(x) for x in position],
            "rotation": [float(x) for x in r.reshape(-1)]}


def body(name, mass, com, inertia_diag):
    return {"name": name, "mass": mass, "com": list(com),
            "inertia": list(inertia_diag)}


def joint(name, parent, child, mount, axis=(0, 0, 1), lower=-math.pi,
          upper=math.pi, torque_limit=300.0):
    return {"name": name, "type": "revolute", "axis": list(axis),
            "parent": parent, "child": child, "mount": pose(mount),
            "lower": lower, "upper": upper, "torque_limit": torque_limit}


def planar_segment(length, density, rot_density, kappa, ei, ea, ga,
                   damping_ratio):
    k = [0.0] * 6
    k[2], k[3], k[4] = ei * length, ea * length, ga * length
    d = [damping_ratio * x for x in k]
    return {"length": length, "linear_density": density,
            "rotational_inertia_density": list(rot_density),
            "rest_strain": [0.0, 0.0, kappa, 1.0, 0.0, 0.0],
            "stiffness": k, "damping": d,
            "active": [False, False, True, True, True, False]}


def rod_points(segments, root_rotation):
    """Boundary points of a planar rod with constant curvature segments."""
    p = np.zeros(2)
    phi = math.atan2(root_rotation[1, 0], root_rotation[0, 0])
    pts = [p.copy()]
    for seg in segments:
        kappa, length = seg["rest_strain"][2], seg["length"]
        if abs(kappa) < 1e-12:
            p = p + length * np.array([math.cos(phi), math.sin(phi)])
        else:
            p = p + np.array([math.sin(phi + kappa * length) - math.sin(phi),
                              -math.cos(phi + kappa * length) + math.cos(phi)]) / kappa
            phi += kappa * length
        pts.append(p.copy())
    return pts


def humanoid():
    thigh, shank, ankle_h = 0.43, 0.43, 0.08
    hip_height = thigh + shank + ankle_h
    half_width = 0.09

    # Running blade: C-shaped curve from 120 deg below horizontal (pointing
    # backward) to horizontal, then a straight toe segment on the ground.
    n_curved, seg_len = 5, 0.07
    turn = math.radians(120.0)
    kappa = turn / (n_curved * seg_len)
    rod_density = 1.2
    rot_density = (2.0e-4, 2.0e-4, 4.0e-5)
    segs = [planar_segment(seg_len, rod_density, rot_density, kappa,
                           ei=180.0, ea=5.0e5, ga=2.0e5, damping_ratio=0.002)
            for _ in range(n_curved)]
    segs.append(planar_segment(seg_len, rod_density, rot_density, 0.0,
                               ei=180.0, ea=5.0e5, ga=2.0e5,
                               damping_ratio=0.002))
    root_rot = rz(-turn)
    pts = rod_points(segs, root_rot)
    drop = -pts[-1][1]
    # Socket depth below the knee so the toe segment rests on the ground.
    socket_depth = hip_height - thigh - drop
    tip_local = np.array([pts[-1][0], -socket_depth + pts[-1][1], 0.0])

    bodies = [
        body("pelvis_trunk", 31.67, (0.0, 0.30, 0.0), (1.20, 0.35, 1.10)),
        body("r_thigh", 5.30, (0.0, -0.19, 0.0), (0.085, 0.020, 0.085)),
        body("l_thigh", 5.30, (0.0, -0.19, 0.0), (0.085, 0.020, 0.085)),
        body("r_shank", 2.20, (0.0, -0.14, 0.0), (0.020, 0.004, 0.020)),
        body("l_shank", 2.46, (0.0, -0.19, 0.0), (0.040, 0.005, 0.040)),
        body("l_foot", 0.77, (0.05, -0.05, 0.0), (0.001, 0.003, 0.003)),
        body("r_upper_arm", 1.48, (0.0, -0.15, 0.0), (0.011, 0.002, 0.011)),
        body("l_upper_arm", 1.48, (0.0, -0.15, 0.0), (0.011, 0.002, 0.011)),
        body("r_forearm", 1.17, (0.0, -0.15, 0.0), (0.009, 0.001, 0.009)),
        body("l_forearm", 1.17, (0.0, -0.15, 0.0), (0.009, 0.001, 0.009)),
    ]
    joints = [
        joint("r_hip", "pelvis_trunk", "r_thigh", (0, 0, half_width),
              lower=-1.0, upper=2.0),
        joint("l_hip", "pelvis_trunk", "l_thigh", (0, 0, -half_width),
              lower=-1.0, upper=2.0),
        joint("r_knee", "r_thigh", "r_shank", (0, -thigh, 0), axis=(0, 0, -1),
              lower=-0.1, upper=2.5),
        joint("l_knee", "l_thigh", "l_shank", (0, -thigh, 0), axis=(0, 0, -1),
              lower=-0.1, upper=2.5),
        joint("l_ankle", "l_shank", "l_foot", (0, -shank, 0),
              lower=-0.8, upper=0.8),
        joint("r_shoulder", "pelvis_trunk", "r_upper_arm", (0, 0.50, 0.18),
              lower=-2.5, upper=2.5),
        joint("l_shoulder", "pelvis_trunk", "l_upper_arm", (0, 0.50, -0.18),
              lower=-2.5, upper=2.5),
        joint("r_elbow", "r_upper_arm", "r_forearm", (0, -0.30, 0),
              lower=-0.1, upper=2.6),
        joint("l_elbow", "l_upper_arm", "l_forearm", (0, -0.30, 0),
              lower=-0.1, upper=2.6),
    ]
    ees = [
        {"name": "head", "body": "pelvis_trunk", "point": [0.0, 0.65, 0.0]},
        {"name": "r_hand", "body": "r_forearm", "point": [0.0, -0.33, 0.0]},
        {"name": "l_hand", "body": "l_forearm", "point": [0.0, -0.33, 0.0]},
        {"name": "l_foot", "body": "l_foot", "point": [0.06, -ankle_h, 0.0]},
        # Rest position of the blade tip, fixed to the residual shank so the
        # reference does not depend on blade deformation.
        {"name": "r_foot", "body": "r_shank", "point": [float(x) for x in tip_local]},
    ]
    total_length = n_curved * seg_len + seg_len
    return {
        "format": "hybridlink-model", "version": 1,
        "name": "humanoid_blade",
        "humanoid": True,
        "fixed_base": False,
        "gravity": [0.0, -9.81, 0.0],
        "rest_base": pose((0.0, hip_height, 0.0)),
        "skeleton": {
            "bodies": bodies, "joints": joints, "end_effectors": ees,
            "socket": {"body": "r_shank",
                       "pose": pose((0.0, -socket_depth, 0.0), root_rot)},
        },
        "rod": {"attachment": pose(), "segments": segs},
        "contacts": [
            {"name": "l_heel", "side": "left", "body": "l_foot",
             "point": [-0.05, -ankle_h, 0.0]},
            {"name": "l_toe", "side": "left", "body": "l_foot",
             "point": [0.17, -ankle_h, 0.0]},
            {"name": "r_sole", "side": "right", "rod_s": total_length - seg_len},
            {"name": "r_tip", "side": "right", "rod_s": total_length},
        ],
        "contact_params": {"kn": 5.0e4, "dn": 500.0, "mu": 0.8, "kt": 2.0e3},
        "control": {"kp": 100.0, "kd": 1.0,
                    "stabilizer": {"kp": 2000.0, "kd": 100.0, "enabled": True},
                    "pd_mode": "hold_target"},
    }


def toy():
    link = 0.6
    segs = [planar_segment(0.15, 1.0, (1.0e-3, 1.0e-3, 1.0e-3), 0.0,
                           ei=20.0, ea=2.0e4, ga=1.0e4, damping_ratio=0.005)
            for _ in range(2)]
    return {
        "format": "hybridlink-model", "version": 1,
        "name": "toy_swing",
        "humanoid": False,
        "fixed_base": True,
        "gravity": [0.0, -9.81, 0.0],
        "rest_base": pose((0.0, 2.0, 0.0)),
        "skeleton": {
            "bodies": [
                body("base", 5.0, (0.0, 0.0, 0.0), (0.05, 0.05, 0.05)),
                body("link1", 3.0, (0.0, -link / 2, 0.0), (0.09, 0.005, 0.09)),
                body("link2", 3.0, (0.0, -link / 2, 0.0), (0.09, 0.005, 0.09)),
            ],
            "joints": [
                joint("shoulder", "base", "link1", (0, 0, 0), lower=-2.0,
                      upper=2.0),
                joint("elbow", "link1", "link2", (0, -link, 0), lower=-2.0,
                      upper=2.0),
            ],
            "end_effectors": [
                {"name": "link1_tip", "body": "link1", "point": [0.0, -link, 0.0]},
                {"name": "link2_tip", "body": "link2", "point": [0.0, -link, 0.0]},
            ],
            "socket": {"body": "link2",
                       "pose": pose((0.0, -link, 0.0), rz(-math.pi / 2))},
        },
        "rod": {"attachment": pose(), "segments": segs},
        "contacts": [],
        "contact_params": {"kn": 5.0e4, "dn": 500.0, "mu": 0.8, "kt": 2.0e3},
        "control": {"kp": 100.0, "kd": 1.0,
                    "stabilizer": {"kp": 2000.0, "kd": 100.0, "enabled": False},
                    "pd_mode": "hold_target"},
    }


def main():
    for name, model in (("humanoid.json", humanoid()), ("toy_swing.json", toy())):
        with open("models/" + name, "w") as f:
            json.dump(model, f, indent=1)
            f.write("\n")


if __name__ == "__main__":
    main()
