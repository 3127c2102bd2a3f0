"""Fruit clusters hanging from a table-top rail.

Stems are rigid segments hinged at a root on the table-top plane. A stem's
``direction`` points from the root down to its fruit, so
``fruit = root + length * direction``; the upward stem axis used for
inclination angles is ``-direction``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import InvalidInputError

GRIPPER_RADIUS = 0.03
FRUIT_RADIUS = 0.015
RNN_RADIUS = 0.05
STEM_TOL = 1e-6

PRESET_IDS = ("C_I", "C_II", "C_III", "C_IV", "C_V", "C_VI",
              "detached_I", "detached_II", "detached_III")


def _vec3(v, name):
    a = np.array(v, dtype=float).reshape(-1)
    if a.shape != (3,) or not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} must be a finite 3-vector")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TableTopFrame:
    i: np.ndarray = (1.0, 0.0, 0.0)
    k: np.ndarray = (0.0, 0.0, 1.0)
    plane_z: float = 0.72

    def __post_init__(self):
        i = _vec3(self.i, "i")
        k = _vec3(self.k, "k")
        if abs(np.linalg.norm(i) - 1) > 1e-9 or abs(np.linalg.norm(k) - 1) > 1e-9:
            raise InvalidInputError("frame axes must be unit vectors")
        if abs(i @ k) > 1e-9:
            raise InvalidInputError("frame axes must be orthogonal")
        object.__setattr__(self, "i", i)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "plane_z", float(self.plane_z))


@dataclass(frozen=True)
class Stem:
    id: str
    root: np.ndarray
    direction: np.ndarray
    length: float

    def __post_init__(self):
        root = _vec3(self.root, "root")
        u = np.array(self.direction, dtype=float).reshape(3)
        n = np.linalg.norm(u)
        if not np.isfinite(n) or n == 0:
            raise InvalidInputError(f"stem {self.id}: zero direction")
        if abs(n - 1) > 1e-9:
            u = u / n
        u.setflags(write=False)
        if not self.length > 0:
            raise InvalidInputError(f"stem {self.id}: length must be positive")
        object.__setattr__(self, "root", root)
        object.__setattr__(self, "direction", u)
        object.__setattr__(self, "length", float(self.length))

    @property
    def tip(self):
        return self.root + self.length * self.direction

    @property
    def axis(self):
        """Unit vector from the fruit up to the root."""
        return -self.direction

    def rotated(self, direction):
        return replace(self, direction=direction)


@dataclass(frozen=True)
class Fruit:
    id: str
    position: np.ndarray
    radius: float = FRUIT_RADIUS
    ripe: bool = False
    stem_id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3(self.position, "position"))
        if not self.radius > 0:
            raise InvalidInputError(f"fruit {self.id}: radius must be positive")
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "ripe", bool(self.ripe))


@dataclass(frozen=True)
class ClusterScene:
    fruits: tuple
    stems: tuple = ()
    frame: TableTopFrame = field(default_factory=TableTopFrame)
    gripper_radius: float = GRIPPER_RADIUS

    def __post_init__(self):
        fruits = tuple(self.fruits)
        stems = tuple(self.stems)
        ids = [f.id for f in fruits]
        if len(set(ids)) != len(ids):
            raise InvalidInputError("duplicate fruit ids")
        stem_map = {s.id: s for s in stems}
        if len(stem_map) != len(stems):
            raise InvalidInputError("duplicate stem ids")
        used = [f.stem_id for f in fruits if f.stem_id is not None]
        if len(set(used)) != len(used):
            raise InvalidInputError("a stem carries at most one fruit")
        for f in fruits:
            if f.stem_id is None:
                continue
            if f.stem_id not in stem_map:
                raise InvalidInputError(f"fruit {f.id}: unknown stem {f.stem_id}")
            gap = np.linalg.norm(stem_map[f.stem_id].tip - f.position)
            if gap > STEM_TOL:
                raise InvalidInputError(f"fruit {f.id} is {gap:.2e} m off its stem tip")
        if not self.gripper_radius > 0:
            raise InvalidInputError("gripper radius must be positive")
        object.__setattr__(self, "fruits", fruits)
        object.__setattr__(self, "stems", stems)
        object.__setattr__(self, "gripper_radius", float(self.gripper_radius))

    def fruit(self, fruit_id) -> Fruit:
        for f in self.fruits:
            if f.id == fruit_id:
                return f
        raise InvalidInputError(f"no fruit {fruit_id!r} in scene")

    def stem(self, stem_id) -> Stem:
        for s in self.stems:
            if s.id == stem_id:
                return s
        raise InvalidInputError(f"no stem {stem_id!r} in scene")

    def stem_of(self, fruit: Fruit) -> Stem | None:
        return None if fruit.stem_id is None else self.stem(fruit.stem_id)

    @property
    def ripe(self):
        return [f for f in self.fruits if f.ripe]

    @property
    def positions(self):
        return np.array([f.position for f in self.fruits])

    def with_stem_directions(self, directions: dict):
        """New scene with some stems re-aimed and their fruits moved to the tips."""
        stems = tuple(s.rotated(directions[s.id]) if s.id in directions else s
                      for s in self.stems)
        tips = {s.id: s.tip for s in stems}
        fruits = tuple(replace(f, position=tips[f.stem_id])
                       if f.stem_id in directions else f for f in self.fruits)
        return replace(self, fruits=fruits, stems=stems)

    def without(self, fruit_id):
        """Scene after harvesting a fruit: the fruit and its stem are removed."""
        f = self.fruit(fruit_id)
        return replace(self, fruits=tuple(x for x in self.fruits if x.id != fruit_id),
                       stems=tuple(s for s in self.stems if s.id != f.stem_id))

    def translated(self, offset, suffix=""):
        """Copy shifted by ``offset`` with ids suffixed, for tiling clusters."""
        off = np.asarray(offset, dtype=float)
        stems = tuple(replace(s, id=s.id + suffix, root=s.root + off) for s in self.stems)
        fruits = tuple(replace(f, id=f.id + suffix, position=f.position + off,
                               stem_id=None if f.stem_id is None else f.stem_id + suffix)
                       for f in self.fruits)
        return replace(self, fruits=fruits, stems=stems)


def merge_scenes(*scenes):
    first = scenes[0]
    return replace(first, fruits=sum((s.fruits for s in scenes), ()),
                   stems=sum((s.stems for s in scenes), ()))


def radius_nearest_neighbours(scene: ClusterScene, target: Fruit, r=RNN_RADIUS):
    """All other fruits whose centers lie in the closed ball of radius ``r``."""
    if not r > 0:
        raise InvalidInputError("radius must be positive")
    others = [f for f in scene.fruits if f.id != target.id]
    if len(others) == len(scene.fruits):
        raise InvalidInputError(f"target {target.id!r} not in scene")
    if not others:
        return []
    dist = np.linalg.norm(np.array([f.position for f in others]) - target.position, axis=1)
    return [f for f, d in zip(others, dist) if d <= r + 1e-12]


def scene_to_dict(scene: ClusterScene):
    fr = scene.frame
    return {
        "frame": {"i": fr.i.tolist(), "k": fr.k.tolist(), "plane_z": fr.plane_z},
        "gripper_radius": scene.gripper_radius,
        "fruits": [{"id": f.id, "position": f.position.tolist(), "radius": f.radius,
                    "ripe": f.ripe, "stem_id": f.stem_id} for f in scene.fruits],
        "stems": [{"id": s.id, "root": s.root.tolist(), "direction": s.direction.tolist(),
                   "length": s.length} for s in scene.stems],
    }


def scene_from_dict(data) -> ClusterScene:
    fr = data.get("frame", {})
    frame = TableTopFrame(fr.get("i", (1, 0, 0)), fr.get("k", (0, 0, 1)), fr.get("plane_z", 0.72))
    stems = tuple(Stem(s["id"], s["root"], s["direction"], s["length"])
                  for s in data.get("stems", []))
    fruits = tuple(Fruit(f["id"], f["position"], f.get("radius", FRUIT_RADIUS),
                         f.get("ripe", False), f.get("stem_id")) for f in data["fruits"])
    return ClusterScene(fruits, stems, frame, data.get("gripper_radius", GRIPPER_RADIUS))


def save_scene(scene: ClusterScene, path):
    Path(path).write_text(json.dumps(scene_to_dict(scene), indent=1))


def load_scene(path) -> ClusterScene:
    return scene_from_dict(json.loads(Path(path).read_text()))


def preset(config_id) -> ClusterScene:
    """Load one of the packaged cluster configurations by name."""
    if config_id not in PRESET_IDS:
        raise InvalidInputError(f"unknown preset {config_id!r}; choose from {PRESET_IDS}")
    text = resources.files("ipromp.presets").joinpath(f"{config_id}.json").read_text()
    return scene_from_dict(json.loads(text))


def hanging_fruit(fid, position, plane_z, inclination=0.0, azimuth=0.0, ripe=False,
                  radius=FRUIT_RADIUS):
    """Fruit plus a stem rooted on the plane ``z = plane_z``.

    ``inclination`` is the stem's angle from vertical in radians and
    ``azimuth`` the horizontal direction (from +x) in which the fruit
    swings away from below its root.
    """
    p = np.asarray(position, dtype=float)
    direction = np.array([np.sin(inclination) * np.cos(azimuth),
                          np.sin(inclination) * np.sin(azimuth),
                          -np.cos(inclination)])
    length = (plane_z - p[2]) / np.cos(inclination)
    if length <= 0:
        raise InvalidInputError(f"fruit {fid} must hang below the table top")
    stem = Stem("s_" + fid, p - length * direction, direction, length)
    return Fruit(fid, stem.tip, radius, ripe, stem.id), stem
