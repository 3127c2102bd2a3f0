"""Interactive ProMP generation for one picking movement, and pick cycles.

A push plan is turned into a conditioning schedule (previous goal, a point
below the target, each occluder's original and pushed pose, the target),
and the two-segment primitive is conditioned on it.
"""
from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IProMPError, InvalidInputError, ScheduleOverflowError
from .basis import GaussianBasis
from .promp import (HARD_VARIANCE, T1_SWITCH, TC1, TIMING_PRESETS, CompositePrimitive,
                    ProMPModel, TrajectoryDistribution, Waypoint, compose, composite_marginal,
                    condition, condition_all, marginal, project_basis)
from .scene import FRUIT_RADIUS, ClusterScene
from .sip import PushPlan, plan_pushes

HOME = (0.0, 0.0, 0.3)
BELOW_OFFSET = 0.1
PRIOR_FLOOR = 1e-4
PATH_RATE = 100.0
TAGS = ("previous_goal", "below_goal", "pushable_original", "pushable_updated", "goal")


@dataclass(frozen=True)
class ConditioningSchedule:
    waypoints: tuple
    provenance: tuple
    fruit_ids: tuple = ()

    def __post_init__(self):
        wps = tuple(self.waypoints)
        tags = tuple(self.provenance)
        if len(wps) != len(tags):
            raise InvalidInputError("one provenance tag per waypoint")
        if any(t not in TAGS for t in tags):
            raise InvalidInputError(f"unknown provenance tag in {tags}")
        times = np.array([w.t for w in wps])
        if times.size and (times[0] < 0 or np.any(np.diff(times) <= 0)):
            raise InvalidInputError("waypoint times must increase strictly from >= 0")
        ids = tuple(self.fruit_ids) or (None,) * len(wps)
        object.__setattr__(self, "waypoints", wps)
        object.__setattr__(self, "provenance", tags)
        object.__setattr__(self, "fruit_ids", ids)

    @property
    def times(self):
        return np.array([w.t for w in self.waypoints])

    @property
    def T(self):
        return self.waypoints[-1].t

    def __len__(self):
        return len(self.waypoints)


@dataclass(frozen=True)
class IProMPResult:
    composite: CompositePrimitive
    mean_path: TrajectoryDistribution
    schedule: ConditioningSchedule
    planning_time: float
    plan: PushPlan | None = None

    def waypoint_errors(self):
        """Distance between the mean and each waypoint at its scheduled time."""
        m = composite_marginal(self.composite, self.schedule.times, noise=False).mean
        return np.linalg.norm(m - np.array([w.X_star for w in self.schedule.waypoints]), axis=1)


@dataclass(frozen=True)
class PickFailure:
    target_id: str
    error: str


def dense_timing(n_directives, t1=T1_SWITCH, T=2.0):
    """Timing preset with ``2 * n_directives`` evenly spaced push slots after ``t1``."""
    n = 2 * int(n_directives)
    inner = t1 + (T - t1) * np.arange(1, n + 1) / (n + 1)
    return (0.0, float(t1), *map(float, inner), float(T))


def timing_for(plan: PushPlan, preset="Tc1"):
    """Named preset if it has room for the plan, otherwise a dense preset."""
    slots = TIMING_PRESETS[preset] if isinstance(preset, str) else tuple(preset)
    if 2 * len(plan.directives) <= len(slots) - 3:
        return slots
    return dense_timing(len(plan.directives), T=slots[-1])


def _resolve_timing(timing):
    if isinstance(timing, str):
        if timing not in TIMING_PRESETS:
            raise InvalidInputError(f"unknown timing preset {timing!r}")
        return TIMING_PRESETS[timing]
    return tuple(float(t) for t in timing)


def build_schedule(plan: PushPlan, prev_goal, goal, timing=TC1, r_g_max=0.03,
                   r_f_max=FRUIT_RADIUS, below_offset=BELOW_OFFSET, variance=HARD_VARIANCE,
                   mode="push") -> ConditioningSchedule:
    """Conditioning schedule for one picking movement.

    ``timing`` lists the slot times: the first holds the previous goal, the
    second the point ``below_offset`` under the goal, the last the goal, and
    push waypoints fill the slots in between, two per directive, bottom-up.
    The pushed waypoint sits ``r_g_max + r_f_max`` beyond the fruit's pushed
    pose along the push direction. ``mode="naive"`` instead conditions on
    each occluder's original pose only.
    """
    slots = _resolve_timing(timing)
    if len(slots) < 3:
        raise InvalidInputError("timing needs at least three slots")
    prev_goal = np.asarray(prev_goal, dtype=float)
    goal = np.asarray(goal, dtype=float)
    below = goal - below_offset * np.array([0.0, 0.0, 1.0])
    entries = [(slots[0], prev_goal, "previous_goal", None),
               (slots[1], below, "below_goal", None)]
    interior = list(slots[2:-1])
    points = []
    if mode == "push":
        for d in plan.directives:
            points.append((plan.original_positions[d.fruit_id], "pushable_original", d.fruit_id))
            shifted = d.updated_position + (r_g_max + r_f_max) * d.u_p
            points.append((shifted, "pushable_updated", d.fruit_id))
    elif mode == "naive":
        for fid in plan.selected:
            points.append((plan.original_positions[fid], "pushable_original", fid))
    else:
        raise InvalidInputError(f"unknown schedule mode {mode!r}")
    if len(points) > len(interior):
        raise ScheduleOverflowError(
            f"{len(points)} push waypoints but only {len(interior)} interior slots")
    for t, (p, tag, fid) in zip(interior, points):
        entries.append((t, p, tag, fid))
    entries.append((slots[-1], goal, "goal", plan.target_id))
    return ConditioningSchedule(tuple(Waypoint(t, p, variance) for t, p, _, _ in entries),
                                tuple(e[2] for e in entries), tuple(e[3] for e in entries))


def _with_capacity(model, n_constraints):
    # a segment pinned at more points than it has weights cannot pass through all of them
    if n_constraints < model.k:
        return model
    return project_basis(model, GaussianBasis(n_constraints + 1))


def generate(model1: ProMPModel, model2: ProMPModel, schedule: ConditioningSchedule,
             t1=T1_SWITCH, prior_floor=PRIOR_FLOOR, rate=PATH_RATE, plan=None) -> IProMPResult:
    """Condition the reach/push composite on every scheduled waypoint.

    Waypoints before ``t1`` condition the reach segment, the rest the push
    segment. A waypoint at exactly ``t1`` becomes the junction shared by
    both; otherwise the junction is the midpoint of the two segment means.
    A segment with fewer basis functions than waypoints is first projected
    onto a larger basis, and ``prior_floor`` is added to the weight
    covariances so that the primitive keeps enough freedom to pass through
    every waypoint.
    """
    start = time.perf_counter()
    T = schedule.T
    if not 0 < t1 < T:
        raise InvalidInputError(f"switch time {t1} must lie in (0, {T})")
    times = schedule.times
    on_t1 = bool(np.any(np.abs(times - t1) <= 1e-9))
    n1 = int(np.sum(times < t1 - 1e-9)) + 1
    n2 = int(np.sum(times >= t1 - 1e-9)) + (not on_t1)
    mp1 = _with_capacity(model1, n1).with_duration(t1).with_covariance_floor(prior_floor)
    mp2 = _with_capacity(model2, n2).with_duration(T - t1).with_covariance_floor(prior_floor)
    junction = None
    for wp in schedule.waypoints:
        if abs(wp.t - t1) <= 1e-9:
            junction = wp
        if wp.t < t1 - 1e-9:
            mp1 = condition(mp1, wp)
        else:
            mp2 = condition(mp2, Waypoint(max(wp.t - t1, 0.0), wp.X_star, wp.Sigma_star))
    if junction is None:
        comp = compose(mp1, mp2, t1, T)
    else:
        comp = compose(mp1, mp2, t1, T, junction.X_star, junction.Sigma_star)
    n = max(int(round(T * rate)) + 1, 2)
    path = composite_marginal(comp, np.linspace(0.0, T, n))
    elapsed = time.perf_counter() - start
    return IProMPResult(comp, path, schedule, elapsed, plan)


def generate_single(model: ProMPModel, schedule: ConditioningSchedule, prior_floor=PRIOR_FLOOR,
                    rate=PATH_RATE) -> TrajectoryDistribution:
    """One primitive stretched over the whole schedule, conditioned on every waypoint."""
    T = schedule.T
    m = condition_all(model.with_duration(T).with_covariance_floor(prior_floor), schedule.waypoints)
    n = max(int(round(T * rate)) + 1, 2)
    return marginal(m, np.linspace(0.0, T, n))


def plan_movement(scene: ClusterScene, target_id, model1, model2, prev_goal=HOME,
                  timing="Tc1", t1=T1_SWITCH, mode="push", prior_floor=PRIOR_FLOOR):
    """Push plan, schedule and conditioned primitive for one target."""
    start = time.perf_counter()
    plan = plan_pushes(scene, target_id)
    slots = timing_for(plan, timing) if isinstance(timing, str) else timing
    goal = scene.fruit(plan.target_id).position
    schedule = build_schedule(plan, prev_goal, goal, slots, scene.gripper_radius, mode=mode)
    res = generate(model1, model2, schedule, t1, prior_floor, plan=plan)
    return IProMPResult(res.composite, res.mean_path, res.schedule,
                        time.perf_counter() - start, plan)


def pick_cycle(scene: ClusterScene, ripe_order, models, home=HOME, timing="Tc1",
               t1=T1_SWITCH, prior_floor=PRIOR_FLOOR):
    """Plan a chain of picks; each picked target becomes the next start.

    ``models`` is the ``(reach, push)`` pair. Picked fruits are removed from
    the scene before planning the next one. A target that cannot be planned
    yields a :class:`PickFailure` and the chain continues from the last
    successful goal.
    """
    model1, model2 = models
    results = []
    prev = np.asarray(home, dtype=float)
    for target_id in ripe_order:
        try:
            if not scene.fruit(target_id).ripe:
                raise InvalidInputError(f"target {target_id!r} is not ripe")
            res = plan_movement(scene, target_id, model1, model2, prev, timing, t1,
                                prior_floor=prior_floor)
        except IProMPError as exc:
            results.append(PickFailure(str(target_id), str(exc)))
            continue
        results.append(res)
        prev = scene.fruit(target_id).position
        scene = scene.without(target_id)
    return results


def schedule_to_dict(schedule: ConditioningSchedule):
    return {"waypoints": [{"t": w.t, "position": w.X_star.tolist(),
                           "variance": w.Sigma_star.tolist(), "provenance": tag,
                           "fruit_id": fid}
                          for w, tag, fid in zip(schedule.waypoints, schedule.provenance,
                                                 schedule.fruit_ids)]}


def schedule_from_dict(data) -> ConditioningSchedule:
    wps = data["waypoints"]
    return ConditioningSchedule(
        tuple(Waypoint(w["t"], w["position"], w.get("variance", HARD_VARIANCE)) for w in wps),
        tuple(w["provenance"] for w in wps), tuple(w.get("fruit_id") for w in wps))


def save_schedule(schedule, path):
    Path(path).write_text(json.dumps(schedule_to_dict(schedule), indent=1))


def load_schedule(path):
    return schedule_from_dict(json.loads(Path(path).read_text()))


TRAJECTORY_HEADER = ("t", "x", "y", "z", "var_x", "var_y", "var_z")


def save_trajectory_csv(dist: TrajectoryDistribution, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_HEADER)
        for t, m, v in zip(dist.times, dist.mean, dist.var):
            w.writerow([repr(float(t)), *map(repr, m.tolist()), *map(repr, v.tolist())])


def load_trajectory_csv(path) -> TrajectoryDistribution:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return TrajectoryDistribution(data[:, 0], data[:, 1:4], data[:, 4:7])
