"""Quasi-static replay of a gripper path through a hanging cluster.

The gripper is a solid cone with its vertex at the gripper frame, opening
downward. At every tick each hinged fruit that overlaps the cone is swung
about its stem root by the smallest angle that brings it back to touching.
The designated target is let into the opening while it sits within the
gripper radius of the axis.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .errors import InvalidInputError, JamError
from .promp import Trajectory
from .scene import ClusterScene, FRUIT_RADIUS
from .sip import PushPlan

CONE_HEIGHT = 0.04
ALTITUDE_BAND = 0.005
MAX_SWING = np.pi / 2
_SCAN = 90


@dataclass(frozen=True)
class GripperState:
    position: np.ndarray
    effective_radius: float = 0.03
    height: float = CONE_HEIGHT

    def __post_init__(self):
        p = np.array(self.position, dtype=float).reshape(3)
        if not np.all(np.isfinite(p)):
            raise InvalidInputError("gripper position must be finite")
        if not self.effective_radius > 0 or not self.height > 0:
            raise InvalidInputError("gripper radius and cone height must be positive")
        object.__setattr__(self, "position", p)


@dataclass(frozen=True)
class SimTrace:
    times: np.ndarray
    gripper_path: np.ndarray
    fruit_positions: dict
    stem_directions: dict
    clearances: dict = field(default_factory=dict)
    pushed: dict = field(default_factory=dict)
    target_id: str | None = None

    def __post_init__(self):
        n = len(self.times)
        for hist in (self.fruit_positions, self.stem_directions, self.clearances, self.pushed):
            for key, h in hist.items():
                if len(h) != n:
                    raise InvalidInputError(f"history for {key!r} has {len(h)} ticks, expected {n}")

    def displacement(self, fruit_id):
        """Largest distance of a fruit from its first recorded position."""
        h = self.fruit_positions[fruit_id]
        return float(np.max(np.linalg.norm(h - h[0], axis=1)))


@dataclass(frozen=True)
class ContactMetric:
    fruit_id: str
    h_min: float
    h_max: float
    contact: bool
    swallowed: bool = False
    applicable: bool = True


def _polygon_sd(q, verts):
    """Signed distance from 2-D point ``q`` to a convex polygon, with nearest boundary point."""
    best, nearest = np.inf, None
    inside = True
    n = len(verts)
    for j in range(n):
        a, b = verts[j], verts[(j + 1) % n]
        e = b - a
        t = np.clip((q - a) @ e / (e @ e), 0.0, 1.0)
        c = a + t * e
        d = np.linalg.norm(q - c)
        if d < best:
            best, nearest = d, c
        # vertices are counter-clockwise, so inside means left of every edge
        if e[0] * (q - a)[1] - e[1] * (q - a)[0] < 0:
            inside = False
    return (-best if inside else best), nearest


def cone_distance(point, gripper: GripperState, k=(0.0, 0.0, 1.0)):
    """Signed distance from ``point`` to the gripper cone and the outward unit normal.

    The normal falls back to the horizontal +x axis when the point lies on
    the cone axis.
    """
    k = np.asarray(k, dtype=float)
    d = np.asarray(point, dtype=float) - gripper.position
    depth = -(d @ k)
    radial = d + depth * k
    rho = float(np.linalg.norm(radial))
    e_rho = radial / rho if rho > 1e-12 else np.array([1.0, 0.0, 0.0])
    r, H = gripper.effective_radius, gripper.height
    # section in (rho, depth) coordinates, counter-clockwise
    verts = np.array([[0.0, 0.0], [r, H], [-r, H]])
    q = np.array([rho, depth])
    sd, c = _polygon_sd(q, verts)
    g = q - c
    ng = np.linalg.norm(g)
    if ng < 1e-15:
        normal2 = np.array([1.0, 0.0])
    else:
        normal2 = g / ng if sd >= 0 else -g / ng
    n3 = normal2[0] * e_rho - normal2[1] * k
    return float(sd), n3 / np.linalg.norm(n3)


def clearance(fruit_position, fruit_radius, gripper: GripperState, k=(0.0, 0.0, 1.0)):
    """Gap between the fruit surface and the cone; negative when overlapping."""
    return cone_distance(fruit_position, gripper, k)[0] - fruit_radius


def _admitted(position, gripper, k):
    d = position - gripper.position
    return np.linalg.norm(d - (d @ k) * k) <= gripper.effective_radius


def _swing(root, u, L, radius, gripper, k, fruit_id):
    """Smallest rotation of the stem that clears the cone; returns the new direction."""
    _, n = cone_distance(root + L * u, gripper, k)
    w = n - (n @ u) * u
    if np.linalg.norm(w) < 1e-9:
        w = np.array([1.0, 0.0, 0.0]) - u[0] * u
    w = w / np.linalg.norm(w)

    def gap(phi):
        return clearance(root + L * (np.cos(phi) * u + np.sin(phi) * w), radius, gripper, k)

    grid = np.linspace(0.0, MAX_SWING, _SCAN + 1)
    prev = 0.0
    for phi in grid[1:]:
        if gap(phi) >= 0.0:
            phi = brentq(gap, prev, phi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
            # land on the non-penetrating side of the root
            while gap(phi) < 0.0:
                phi = np.nextafter(phi, np.inf)
            v = np.cos(phi) * u + np.sin(phi) * w
            return v / np.linalg.norm(v)
        prev = phi
    raise JamError(f"fruit {fruit_id} needs more than a quarter turn to clear", fruit_id=fruit_id)


def step(scene: ClusterScene, gripper: GripperState, admitted=(), rest=None, spring_back=0.0):
    """Resolve one gripper pose against the cluster.

    Returns the new scene and the ids of fruits pushed during this tick.
    ``admitted`` lists fruits allowed into the opening while within the
    gripper radius of its axis. With ``spring_back`` in (0, 1], stems first
    relax that fraction of the way toward the ``rest`` directions.
    """
    if not 0.0 <= spring_back <= 1.0:
        raise InvalidInputError("spring-back rate must lie in [0, 1]")
    k = scene.frame.k
    new_dirs, pushed = {}, []
    for f in scene.fruits:
        stem = scene.stem_of(f)
        if stem is None:
            continue
        u = stem.direction
        if spring_back > 0 and rest is not None and stem.id in rest:
            u = (1 - spring_back) * u + spring_back * rest[stem.id]
            u = u / np.linalg.norm(u)
        pos = stem.root + stem.length * u
        if f.id in admitted and _admitted(pos, gripper, k):
            pass
        elif clearance(pos, f.radius, gripper, k) < 0.0:
            u = _swing(stem.root, u, stem.length, f.radius, gripper, k, f.id)
            pushed.append(f.id)
        if u is not stem.direction:
            new_dirs[stem.id] = u
    if not new_dirs:
        return scene, pushed
    return scene.with_stem_directions(new_dirs), pushed


def replay(scene: ClusterScene, trajectory: Trajectory, target_id=None, spring_back=0.0,
           cone_height=CONE_HEIGHT) -> SimTrace:
    """Step the gripper through every trajectory sample.

    Raises
    ------
    JamError
        With the tick index set, when a fruit cannot be swung clear.
    """
    pts = np.asarray(trajectory.points, dtype=float)
    if not np.all(np.isfinite(pts)):
        raise InvalidInputError("trajectory contains non-finite points")
    rest = {s.id: s.direction for s in scene.stems}
    admitted = () if target_id is None else (target_id,)
    ids = [f.id for f in scene.fruits]
    fpos = {i: [] for i in ids}
    sdir = {s.id: [] for s in scene.stems}
    clr = {f.id: [] for f in scene.fruits if f.stem_id is not None}
    pushed = {i: [] for i in ids}
    for tick, p in enumerate(pts):
        g = GripperState(p, scene.gripper_radius, cone_height)
        try:
            scene, hit = step(scene, g, admitted, rest, spring_back)
        except JamError as exc:
            raise JamError(f"{exc} (tick {tick})", fruit_id=exc.fruit_id, tick=tick) from exc
        for f in scene.fruits:
            fpos[f.id].append(f.position)
            pushed[f.id].append(f.id in hit)
            if f.id in clr:
                inside = f.id in admitted and _admitted(f.position, g, scene.frame.k)
                clr[f.id].append(np.inf if inside else
                                 clearance(f.position, f.radius, g, scene.frame.k))
        for s in scene.stems:
            sdir[s.id].append(s.direction)
    return SimTrace(np.asarray(trajectory.times, dtype=float), pts,
                    {i: np.array(v) for i, v in fpos.items()},
                    {i: np.array(v) for i, v in sdir.items()},
                    {i: np.array(v) for i, v in clr.items()},
                    {i: np.array(v, dtype=bool) for i, v in pushed.items()}, target_id)


def contact_metrics(trace: SimTrace, scene: ClusterScene, plan: PushPlan,
                    band=ALTITUDE_BAND, fruit_radius=FRUIT_RADIUS):
    """Horizontal gripper-to-fruit distances at the fruit's altitude.

    Covers the plan target and every selected occluder. ``contact`` applies
    ``0 < h_min <= r_g + r_f``; ``swallowed`` marks a fruit that was never
    pushed and came within ``r_g - r_f`` of the gripper axis.
    """
    k = scene.frame.k
    r_g = scene.gripper_radius
    out = []
    for fid in (plan.target_id, *plan.selected):
        if fid not in trace.fruit_positions:
            raise InvalidInputError(f"fruit {fid!r} missing from trace")
        d = trace.fruit_positions[fid] - trace.gripper_path
        dz = d @ k
        h = np.linalg.norm(d - dz[:, None] * k, axis=1)
        at = np.abs(dz) <= band
        if not np.any(at):
            out.append(ContactMetric(fid, float("nan"), float("nan"), False, False, False))
            continue
        h_min, h_max = float(h[at].min()), float(h[at].max())
        contact = 0.0 < h_min <= r_g + fruit_radius
        swallowed = (not trace.pushed[fid].any()) and h_min <= r_g - fruit_radius
        out.append(ContactMetric(fid, h_min, h_max, bool(contact), bool(swallowed)))
    return out


def metrics_to_dict(metrics, config_id="scene"):
    def cm(x):
        return None if np.isnan(x) else round(100.0 * x, 6)
    return {config_id: {m.fruit_id: {"h_min_cm": cm(m.h_min), "h_max_cm": cm(m.h_max),
                                     "contact": m.contact, "swallowed": m.swallowed,
                                     "applicable": m.applicable} for m in metrics}}


def save_metrics(metrics, path, config_id="scene"):
    Path(path).write_text(json.dumps(metrics_to_dict(metrics, config_id), indent=1))


def save_trace_csv(trace: SimTrace, path):
    ids = list(trace.fruit_positions)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "gx", "gy", "gz"] + [f"{i}_{a}" for i in ids for a in "xyz"])
        for n, t in enumerate(trace.times):
            row = [t, *trace.gripper_path[n]]
            for i in ids:
                row.extend(trace.fruit_positions[i][n])
            w.writerow([repr(float(v)) for v in row])
