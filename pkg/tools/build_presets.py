"""Regenerate the packaged cluster presets under src/ipromp/presets/.

Coordinates are configuration defaults: a ripe target hangs 0.12 m below a
table-top rail at z = 0.72 m, and neighbours sit a few centimetres away.
Run from the repository root:  python tools/build_presets.py
"""
import json
from pathlib import Path

import numpy as np

from ipromp.scene import ClusterScene, Fruit, TableTopFrame, hanging_fruit, scene_to_dict

PLANE_Z = 0.72
TARGET = np.array([0.30, 0.0, 0.60])
OUT = Path(__file__).resolve().parents[1] / "src" / "ipromp" / "presets"

# (id, offset from target, stem inclination [rad], azimuth [rad]); None -> detached
LAYOUTS = {
    "C_I": ("attached neighbours below the target at two distinct heights",
            [("n1", (-0.020, 0.010, -0.030), 0.0, 0.0),
             ("n2", (0.015, -0.010, -0.045), 0.0, 0.0)]),
    "C_II": ("attached neighbours above the target",
             [("n1", (-0.020, 0.010, 0.030), 0.0, 0.0),
              ("n2", (0.020, -0.010, 0.040), 0.0, 0.0)]),
    "C_III": ("attached neighbours level with the target",
              [("n1", (-0.030, 0.010, 0.000), 0.0, 0.0),
               ("n2", (0.025, -0.010, 0.002), 0.0, 0.0)]),
    "C_IV": ("target occluded from below by one stiff inclined stem-fruit",
             [("n1", (0.018, 0.005, -0.035), 0.10, 0.0)]),
    "C_V": ("target occluded from below by two stiff stem-fruits, one per side",
            [("n1", (0.015, 0.005, -0.030), 0.08, 0.0),
             ("n2", (-0.012, -0.005, -0.042), 0.06, np.pi)]),
    "C_VI": ("target occluded by one stem-fruit below and one inclined stem-fruit above",
             [("n1", (0.010, 0.000, -0.035), 0.0, 0.0),
              ("n2", (0.012, -0.005, 0.035), 0.15, 0.0)]),
    "detached_I": ("detached neighbours below the target, clear of the approach corridor",
                   [("n1", (-0.045, 0.0, -0.020), None, None),
                    ("n2", (0.045, 0.0, -0.030), None, None)]),
    "detached_II": ("detached neighbours above the target, clear of the approach corridor",
                    [("n1", (-0.045, 0.0, 0.020), None, None),
                     ("n2", (0.045, 0.0, 0.030), None, None)]),
    "detached_III": ("detached neighbours level with the target, clear of the approach corridor",
                     [("n1", (-0.045, 0.0, 0.0), None, None),
                      ("n2", (0.045, 0.0, 0.002), None, None)]),
}


def build(name):
    description, layout = LAYOUTS[name]
    target, stem = hanging_fruit("target", TARGET, PLANE_Z, ripe=True)
    fruits, stems = [target], [stem]
    for fid, off, incl, az in layout:
        pos = TARGET + np.array(off)
        if incl is None:
            fruits.append(Fruit(fid, pos))
            continue
        f, s = hanging_fruit(fid, pos, PLANE_Z, incl, az)
        fruits.append(f)
        stems.append(s)
    scene = ClusterScene(tuple(fruits), tuple(stems), TableTopFrame(plane_z=PLANE_Z))
    return {"description": description, **scene_to_dict(scene)}


if __name__ == "__main__":
    for name in LAYOUTS:
        (OUT / f"{name}.json").write_text(json.dumps(build(name), indent=1) + "\n")
        print("wrote", name)
