"""Basis-count and conditioning-time studies, emitted as plain tables.

``fig5`` compares a 4- and a 10-function primitive on the same
demonstrations; ``fig6`` conditions one picking schedule under six
primitive settings (single primitive with several basis sizes and timing
vectors, and the two-segment composite).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .basis import GaussianBasis
from .demos import DemoSet, generate_nominals, time_grid
from .iplanner import build_schedule, generate, generate_single
from .promp import TC1, TC2, T1_SWITCH, learn, learn_segments, marginal
from .scene import preset
from .sip import plan_pushes

FIG5_KS = (4, 10)
FIG5_H = 1.0


@dataclass(frozen=True)
class CaseResult:
    name: str
    dist: object
    summary: dict


def max_deviation(model, demoset: DemoSet):
    """Largest pointwise distance between the marginal mean and the training mean."""
    times = demoset.demos[0].times
    mean = marginal(model, times, noise=False).mean
    return float(np.max(np.linalg.norm(mean - demoset.mean_points(), axis=1)))


def fig5(demoset: DemoSet | None = None, ks=FIG5_KS, h=FIG5_H, lam=1e-6):
    """One case per basis count, with the deviation from the training mean."""
    ds = demoset if demoset is not None else generate_nominals()
    out = []
    for k in ks:
        model = learn(ds, GaussianBasis(k, h), lam)
        dist = marginal(model, time_grid(ds.T))
        out.append(CaseResult(f"fig5_k{k}", dist, {"k": k, "h": h,
                                                    "max_deviation": max_deviation(model, ds)}))
    return out


def _roughness(dist):
    # mean squared second difference of the mean path, per unit time^4
    dt = np.diff(dist.times).mean()
    acc = np.diff(dist.mean, n=2, axis=0) / dt**2
    return float(np.mean(np.sum(acc**2, axis=1)))


def _summary(dist, schedule, extra):
    m = np.array([np.interp(schedule.times, dist.times, dist.mean[:, d]) for d in range(3)]).T
    err = np.linalg.norm(m - np.array([w.X_star for w in schedule.waypoints]), axis=1)
    return {**extra, "max_waypoint_error": float(err.max()), "roughness": _roughness(dist),
            "max_std": float(dist.std.max())}


def fig6(scene_id="C_IV", seed=0, prev_goal=(0.0, 0.0, 0.3), lam=1e-6):
    """Six settings conditioned on the same picking schedule over a 2 s horizon."""
    ds = generate_nominals(T=2.0, rng_seed=seed)
    scene = preset(scene_id)
    plan = plan_pushes(scene, scene.ripe[0].id)
    goal = scene.fruit(plan.target_id).position

    def sched(timing):
        return build_schedule(plan, prev_goal, goal, timing, scene.gripper_radius)

    out = []
    for tag, k, timing in (("a", 20, TC1), ("b", 10, TC1), ("c", 4, TC1), ("d", 10, TC2)):
        s = sched(timing)
        dist = generate_single(learn(ds, GaussianBasis(k, FIG5_H), lam), s)
        out.append(CaseResult(f"fig6{tag}", dist, _summary(dist, s, {"k": k, "segments": 1})))
    s = sched(TC1)
    for tag, k2 in (("e", 4), ("f", 5)):
        m1, m2 = learn_segments(ds, T1_SWITCH, 4, k2, lam=lam)
        dist = generate(m1, m2, s).mean_path
        out.append(CaseResult(f"fig6{tag}", dist,
                              _summary(dist, s, {"k": f"4+{k2}", "segments": 2})))
    return out


def write_case(case: CaseResult, directory):
    path = Path(directory) / f"{case.name}.csv"
    d = case.dist
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "y", "z", "std_x", "std_y", "std_z"])
        for t, m, s in zip(d.times, d.mean, d.std):
            w.writerow([repr(float(v)) for v in (t, *m, *s)])
    return path


def write_bundle(cases, directory, name):
    """One CSV per case plus a summary CSV with one row per case."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = [write_case(c, directory) for c in cases]
    keys = sorted({k for c in cases for k in c.summary})
    summary = directory / f"{name}_summary.csv"
    with open(summary, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["case", *keys])
        for c in cases:
            w.writerow([c.name, *(c.summary.get(k, "") for k in keys)])
    return paths + [summary]
