"""Selection of pushable neighbours and their push directives.

Pipeline for one ripe target: collect neighbours in a ball, keep those
inside the gripper corridor along the table-top axis, split them by height,
reduce the lower set, then for every kept fruit work out how far its stem
must swing to clear the gripper opening and which way to push it.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import GeometryInfeasibleError, InvalidInputError
from .scene import RNN_RADIUS, ClusterScene, Fruit, Stem, TableTopFrame, radius_nearest_neighbours

LEVEL_TOL = 0.005


class OcclusionSubsets(NamedTuple):
    below: list
    level: list
    above: list

    # short aliases
    @property
    def S_d(self):
        return self.below

    @property
    def S_p(self):
        return self.level

    @property
    def S_t(self):
        return self.above


class StemGeometry(NamedTuple):
    theta_0: float
    theta: float
    d_theta: float
    s: float
    length: float


@dataclass(frozen=True)
class PushDirective:
    fruit_id: str
    u_p: np.ndarray
    d_theta: float
    s: float
    updated_position: np.ndarray
    theta_0: float = 0.0
    theta: float = 0.0


@dataclass(frozen=True)
class PushPlan:
    target_id: str
    directives: tuple = ()
    original_positions: dict = field(default_factory=dict)
    orientations: dict = field(default_factory=dict)
    selected: tuple = ()
    failures: tuple = ()

    @property
    def partial(self):
        return bool(self.failures)

    def directive(self, fruit_id):
        for d in self.directives:
            if d.fruit_id == fruit_id:
                return d
        raise KeyError(fruit_id)


def _height(frame, f, target):
    return frame.k @ (f.position - target.position)


def _lateral(frame, f, target):
    return frame.i @ (f.position - target.position)


def split_subsets(cluster, target: Fruit, frame: TableTopFrame, r_g_max, eps_z=LEVEL_TOL):
    """Partition corridor occluders into below / level / above subsets.

    A neighbour occludes when its offset from the target along the
    table-top axis is at most ``r_g_max`` in magnitude.
    """
    below, level, above = [], [], []
    for n in cluster:
        if abs(_lateral(frame, n, target)) > r_g_max:
            continue
        dz = _height(frame, n, target)
        if dz < -eps_z:
            below.append(n)
        elif dz > eps_z:
            above.append(n)
        else:
            level.append(n)
    return OcclusionSubsets(below, level, above)


def corridor_distance(point, target_position, frame: TableTopFrame):
    """Distance from ``point`` to the vertical line through the target."""
    d = np.asarray(point, dtype=float) - target_position
    return float(np.linalg.norm(d - (frame.k @ d) * frame.k))


def stem_occludes(stem: Stem, target: Fruit, frame: TableTopFrame, r_g_max):
    """True when the stem crosses the target altitude inside the corridor."""
    u = stem.direction
    uz = frame.k @ u
    if abs(uz) < 1e-12:
        return False
    lam = frame.k @ (target.position - stem.root) / uz
    if not 0.0 <= lam <= stem.length:
        return False
    return corridor_distance(stem.root + lam * u, target.position, frame) < r_g_max


def _order_by_height(fruits, frame):
    return sorted(fruits, key=lambda f: (frame.k @ f.position, f.id))


def _levels(ordered, frame, eps_z):
    groups = []
    for f in ordered:
        if groups and frame.k @ f.position - frame.k @ groups[-1][0].position <= eps_z:
            groups[-1].append(f)
        else:
            groups.append([f])
    return groups


def subset_opt(subsets: OcclusionSubsets, target: Fruit, frame: TableTopFrame,
               scene: ClusterScene | None = None, r_g_max=None, eps_z=LEVEL_TOL):
    """Reduce the lower occluders to the ones worth pushing.

    Fruits at distinct heights are all kept, bottom first. Within a group at
    quasi-equal height only one is kept: the one closest to the target along
    the table-top axis, or, if any candidate stem crosses the corridor, the
    one whose stem is closest to vertical. Level and upper occluders are
    dropped.
    """
    r_g_max = r_g_max if r_g_max is not None else (scene.gripper_radius if scene else 0.03)
    kept = []
    for group in _levels(_order_by_height(subsets.below, frame), frame, eps_z):
        if len(group) == 1:
            kept.append(group[0])
            continue
        stems = [scene.stem_of(f) if scene is not None else None for f in group]
        if any(s is not None and stem_occludes(s, target, frame, r_g_max) for s in stems):
            best = max(zip(group, stems),
                       key=lambda fs: -np.inf if fs[1] is None else fs[1].axis @ frame.k)[0]
        else:
            best = min(group, key=lambda f: (abs(_lateral(frame, f, target)), f.id))
        kept.append(best)
    return kept


def stem_geometry(fruit: Fruit, stem: Stem, frame: TableTopFrame, r_g_max) -> StemGeometry:
    """Swing angle and chord displacement needed to clear the gripper opening.

    The stem length is taken from the stem line's intersection with the
    table-top plane. ``d_theta`` is clamped at zero when the stem is already
    inclined past the clearance angle.
    """
    axis = stem.axis
    c = float(axis @ frame.k)
    if abs(c) > 1 + 1e-9:
        raise InvalidInputError(f"stem {stem.id}: axis is not a unit vector")
    c = min(1.0, max(-1.0, c))
    if c <= 1e-12:
        raise GeometryInfeasibleError(f"stem {stem.id} never meets the table top")
    root = fruit.position + (frame.plane_z - frame.k @ fruit.position) / c * axis
    L = float(np.linalg.norm(root - fruit.position))
    if L <= r_g_max + 1e-12:
        raise GeometryInfeasibleError(
            f"stem {stem.id}: length {L:.4f} m does not exceed clearance {r_g_max} m")
    theta_0 = float(np.arccos(c))
    theta = float(np.arcsin(r_g_max / L))
    d_theta = max(theta - theta_0, 0.0)
    s = L * np.sqrt(2.0 * (1.0 - np.cos(d_theta)))
    return StemGeometry(theta_0, theta, d_theta, float(s), L)


def get_dir(fruit: Fruit, peers, frame: TableTopFrame, target: Fruit, eps_z=LEVEL_TOL):
    """Unit push direction for ``fruit``.

    Vertical (away from the target's height) when another of ``peers`` sits
    at the same level, otherwise horizontal along the table-top axis and away
    from the target.
    """
    z = frame.k @ fruit.position
    same_level = any(p.id != fruit.id and abs(frame.k @ p.position - z) <= eps_z for p in peers)
    if same_level:
        return 0.0 - frame.k if _height(frame, fruit, target) < 0 else frame.k.copy()
    side = _lateral(frame, fruit, target)
    return frame.i.copy() if side >= 0 else 0.0 - frame.i


def plan_pushes(scene: ClusterScene, target=None, rng_seed=None, r=RNN_RADIUS,
                eps_z=LEVEL_TOL) -> PushPlan:
    """Push directives for every selected occluder below ``target``.

    ``target`` may be a fruit or an id; when omitted a ripe fruit is drawn
    with ``rng_seed``. Fruits without a stem, or with a stem too short to
    clear the opening, are reported in ``failures`` and the plan is partial.
    """
    if target is None:
        ripe = scene.ripe
        if not ripe:
            raise InvalidInputError("scene has no ripe fruit")
        target = ripe[int(np.random.default_rng(rng_seed).integers(len(ripe)))]
    elif not isinstance(target, Fruit):
        target = scene.fruit(target)
    else:
        target = scene.fruit(target.id)
    if not target.ripe:
        raise InvalidInputError(f"target {target.id!r} is not ripe")
    frame, r_g = scene.frame, scene.gripper_radius
    cluster = radius_nearest_neighbours(scene, target, r)
    subsets = split_subsets(cluster, target, frame, r_g, eps_z)
    selected = subset_opt(subsets, target, frame, scene, r_g, eps_z)
    peers = _order_by_height(subsets.below, frame)
    directives, failures = [], []
    originals, orientations = {}, {}
    for n in selected:
        originals[n.id] = n.position.copy()
        stem = scene.stem_of(n)
        if stem is None:
            failures.append((n.id, "detached fruit cannot be swung on a stem"))
            continue
        orientations[n.id] = stem.axis.copy()
        try:
            g = stem_geometry(n, stem, frame, r_g)
        except GeometryInfeasibleError as exc:
            failures.append((n.id, str(exc)))
            continue
        u_p = get_dir(n, peers, frame, target, eps_z)
        directives.append(PushDirective(n.id, u_p, g.d_theta, g.s, n.position + g.s * u_p,
                                        g.theta_0, g.theta))
    return PushPlan(target.id, tuple(directives), originals, orientations,
                    tuple(f.id for f in selected), tuple(failures))


def plan_to_dict(plan: PushPlan):
    return {
        "target_id": plan.target_id,
        "directives": [{"fruit_id": d.fruit_id, "u_p": d.u_p.tolist(), "d_theta": d.d_theta,
                        "s": d.s, "updated_position": d.updated_position.tolist(),
                        "theta_0": d.theta_0, "theta": d.theta} for d in plan.directives],
        "original_positions": {k: v.tolist() for k, v in plan.original_positions.items()},
        "orientations": {k: v.tolist() for k, v in plan.orientations.items()},
        "selected": list(plan.selected),
        "failures": [list(f) for f in plan.failures],
    }


def plan_from_dict(data) -> PushPlan:
    directives = tuple(
        PushDirective(d["fruit_id"], np.asarray(d["u_p"], float), d["d_theta"], d["s"],
                      np.asarray(d["updated_position"], float), d.get("theta_0", 0.0),
                      d.get("theta", 0.0))
        for d in data.get("directives", []))
    return PushPlan(
        data["target_id"], directives,
        {k: np.asarray(v, float) for k, v in data.get("original_positions", {}).items()},
        {k: np.asarray(v, float) for k, v in data.get("orientations", {}).items()},
        tuple(data.get("selected", [d.fruit_id for d in directives])),
        tuple(tuple(f) for f in data.get("failures", [])))


def save_plan(plan: PushPlan, path):
    Path(path).write_text(json.dumps(plan_to_dict(plan), indent=1))


def load_plan(path) -> PushPlan:
    return plan_from_dict(json.loads(Path(path).read_text()))
