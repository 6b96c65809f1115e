# Copyright 2026 The Teleop Retarget Authors
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

"""Writes the bundled scenario files into scenarios/."""

import json
import math
import os
import sys

HOME_Q = [0.0, -math.pi / 2, math.pi / 2, -math.pi / 2, -math.pi / 2, 0.0]
RATE = 100.0


def quat_about(axis, angle):
    n = math.sqrt(sum(a * a for a in axis))
    s = math.sin(angle / 2) / n
    return [math.cos(angle / 2), axis[0] * s, axis[1] * s, axis[2] * s]


def quat_mul(a, b):
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return [
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ]


def smooth(t, t0, t1):
    if t <= t0:
        return 0.0
    if t >= t1:
        return 1.0
    s = (t - t0) / (t1 - t0)
    return s * s * (3 - 2 * s)


def stream(duration, pose_at, clutch_at):
    out = []
    for i in range(int(round(duration * RATE)) + 1):
        t = i / RATE
        pos, quat = pose_at(t)
        out.append({
            "t_s": round(t, 6),
            "pos_m": [round(v, 12) for v in pos],
            "quat_wxyz": [round(v, 12) for v in quat],
            "clutch": clutch_at(t),
        })
    return out


def base(name, duration, **retarget):
    rt = {
        "mode": "relative",
        "input_translation": "calibrated_fixed",
        "input_rotation": "device_at_clutch",
        "robot_translation": "calibrated_fixed",
        "robot_rotation": "upright_at_release",
        "calibration": {"r_tI_wxyz": [1, 0, 0, 0], "r_tM_wxyz": [1, 0, 0, 0]},
    }
    rt.update(retarget)
    return {
        "version": 1,
        "name": name,
        "robot": "ur5e",
        "rates": {"input_hz": RATE, "plan_hz": 10, "sim_hz": 100},
        "ocp": {"horizon": 10},
        "retarget": rt,
        "duration_s": duration,
        "initial_q_rad": HOME_Q,
    }


DEVICE_HOME = [0.3, 0.1, 1.2]


def mirror():
    s = base("mirror", 5.0, calibration={
        "r_tI_wxyz": [1, 0, 0, 0], "r_tM_wxyz": quat_about([0, 0, 1], math.pi)})

    def pose(t):
        x = DEVICE_HOME[0] + 0.10 * smooth(t, 0.5, 1.5)
        return [x, DEVICE_HOME[1], DEVICE_HOME[2]], [1, 0, 0, 0]

    s["input_stream"] = stream(5.0, pose, lambda t: t >= 0.3)
    return s


def roll():
    s = base("roll", 7.0)

    def pose(t):
        # Twisted against the roll direction first, clutched at 2 s, then
        # rolled 180 degrees about the device's own tool axis.
        twist = quat_about([0, 0, 1], -math.pi / 2 * smooth(t, 0.2, 1.2))
        q = quat_mul(twist, quat_about([0, 0, 1], math.pi * smooth(t, 2.5, 4.5)))
        return DEVICE_HOME, q

    s["input_stream"] = stream(7.0, pose, lambda t: t >= 2.0)
    return s


def saturation():
    s = base("saturation", 4.0)
    s["robot"] = {
        "preset": "ur5e",
        "name": "ur5e_limited",
        "qd_min_rad_s": [-0.5] * 6,
        "qd_max_rad_s": [0.5] * 6,
        "q_min_rad": [-2 * math.pi] * 5 + [-0.4],
        "q_max_rad": [2 * math.pi] * 5 + [0.4],
    }

    def pose(t):
        y = DEVICE_HOME[1] + 0.3 * smooth(t, 0.5, 0.8)
        q = quat_about([0, 0, 1], 1.5 * smooth(t, 1.0, 1.5))
        return [DEVICE_HOME[0], y, DEVICE_HOME[2]], q

    s["input_stream"] = stream(4.0, pose, lambda t: t >= 0.3)
    return s


def idle():
    s = base("idle", 3.0)
    s["input_stream"] = stream(3.0, lambda t: (
        [DEVICE_HOME[0] + 0.1 * math.sin(t), DEVICE_HOME[1], DEVICE_HOME[2]],
        quat_about([1, 0, 0], 0.3 * math.sin(2 * t))), lambda t: False)
    return s


def reindex():
    s = base("reindex", 8.0, calibration={
        "r_tI_wxyz": [1, 0, 0, 0], "r_tM_wxyz": quat_about([0, 0, 1], math.pi)})

    def pose(t):
        # Three strokes along +y; the device returns while the clutch is open.
        phase = min(int(t // 2.5), 2)
        local = t - 2.5 * phase
        y = DEVICE_HOME[1] + 0.08 * smooth(local, 0.3, 1.3) - 0.08 * smooth(local, 1.6, 2.3)
        q = quat_about([1, 0, 0], 0.2 * smooth(local, 0.3, 1.3) - 0.2 * smooth(local, 1.6, 2.3))
        return [DEVICE_HOME[0], y, DEVICE_HOME[2]], q

    def clutch(t):
        local = t - 2.5 * min(int(t // 2.5), 2)
        return 0.2 <= local < 1.45

    s["input_stream"] = stream(8.0, pose, clutch)
    return s


def absolute():
    s = base("absolute", 5.0, mode="absolute", robot_rotation="ee_at_release")

    def pose(t):
        a = 2 * math.pi * smooth(t, 0.5, 4.5)
        p = [DEVICE_HOME[0] + 0.05 * (math.cos(a) - 1), DEVICE_HOME[1] + 0.05 * math.sin(a),
             DEVICE_HOME[2]]
        return p, quat_about([0, 1, 0], 0.25 * math.sin(a))

    s["input_stream"] = stream(5.0, pose, lambda t: True)
    return s


def main():
    out_dir = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
        os.path.dirname(os.path.abspath(__file__)), "..", "scenarios")
    os.makedirs(out_dir, exist_ok=True)
    for make in (mirror, roll, saturation, idle, reindex, absolute):
        s = make()
        with open(os.path.join(out_dir, s["name"] + ".json"), "w") as f:
            json.dump(s, f, indent=1)
            f.write("\n")


if __name__ == "__main__":
    main()
