"""Command-line driver: ``ipromp {demos,train,experiment,plan,replay,pick-cycle}``.

Settings come from an optional JSON config file and are overridden by
flags. Every command writes into the output directory, which the
``PROMP_PUSH_OUT`` environment variable overrides unless ``--out`` is given.
Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import experiments
from .demos import generate_nominals, load_demoset, save_demoset
from .errors import GeometryInfeasibleError, InvalidInputError, NumericalError
from .iplanner import (PickFailure, load_trajectory_csv, pick_cycle, plan_movement,
                       save_schedule, save_trajectory_csv)
from .promp import TIMING_PRESETS, Trajectory, learn_segments, load_model, save_model
from .scene import PRESET_IDS, load_scene, merge_scenes, preset
from .sim import contact_metrics, replay, save_metrics, save_trace_csv
from .sip import load_plan, save_plan

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
ROW_SPACING = 0.15


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    scene: str = "C_IV"
    k1: int = 4
    k2: int = 5
    h: float | None = None
    lam: float = 1e-6
    T: float = 2.0
    t1: float = 0.85
    tc_preset: str = "Tc1"
    samples_per_traj: int = 10
    out: str = "out"

    def __post_init__(self):
        if self.tc_preset not in TIMING_PRESETS:
            raise InvalidInputError(f"unknown timing preset {self.tc_preset!r}")
        if self.k1 < 1 or self.k2 < 1:
            raise InvalidInputError("basis counts must be positive")
        if self.samples_per_traj < 1:
            raise InvalidInputError("samples_per_traj must be at least 1")
        if self.lam < 0:
            raise InvalidInputError("lambda must be non-negative")
        if not 0 < self.t1 < self.T:
            raise InvalidInputError("t1 must lie inside (0, T)")


_FLAG_FIELDS = {"seed": "seed", "scene": "scene", "k1": "k1", "k2": "k2", "h": "h",
                "lam": "lam", "T": "T", "t1": "t1", "tc_preset": "tc_preset",
                "samples_per_traj": "samples_per_traj", "out": "out"}


def resolve_config(args) -> RunConfig:
    data = {}
    if args.config:
        raw = json.loads(Path(args.config).read_text())
        if not isinstance(raw, dict):
            raise InvalidInputError("config file must hold a JSON object")
        raw = {("lam" if k == "lambda" else k.replace("-", "_")): v for k, v in raw.items()}
        known = {f.name for f in fields(RunConfig)}
        unknown = set(raw) - known
        if unknown:
            raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
        data.update(raw)
    env = os.environ.get("PROMP_PUSH_OUT")
    if env:
        data["out"] = env
    for attr, key in _FLAG_FIELDS.items():
        value = getattr(args, attr, None)
        if value is not None:
            data[key] = value
    return RunConfig(**data)


def load_scene_arg(value: str):
    """A preset id, a comma-separated row of preset ids, or a scene JSON path."""
    parts = [p.strip() for p in value.split(",")]
    if all(p in PRESET_IDS for p in parts):
        if len(parts) == 1:
            return preset(parts[0])
        scenes = [preset(p).translated((0.0, j * ROW_SPACING, 0.0), f"_{j}")
                  for j, p in enumerate(parts)]
        return merge_scenes(*scenes)
    path = Path(value)
    if path.suffix != ".json" and "/" not in value and not path.exists():
        raise InvalidInputError(f"unknown preset {value!r}; choose from {', '.join(PRESET_IDS)}")
    return load_scene(path)


def _outdir(cfg: RunConfig):
    d = Path(cfg.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _demos(cfg: RunConfig):
    return generate_nominals(T=cfg.T, samples_per_traj=cfg.samples_per_traj, rng_seed=cfg.seed)


def _models(cfg: RunConfig, models_dir=None):
    if models_dir:
        d = Path(models_dir)
        return load_model(d / "mp1.json"), load_model(d / "mp2.json")
    return learn_segments(_demos(cfg), cfg.t1, cfg.k1, cfg.k2, cfg.h, cfg.h, cfg.lam)


def _write_json(path, data):
    Path(path).write_text(json.dumps(data, indent=1, sort_keys=True))


def cmd_demos(cfg: RunConfig, args):
    ds = _demos(cfg)
    out = _outdir(cfg)
    save_demoset(ds, out / "demos.json")
    with open(out / "demos.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["demo", "nominal", "t", "x", "y", "z"])
        for j, d in enumerate(ds):
            for t, p in zip(d.times, d.points):
                w.writerow([j, d.nominal_id, repr(float(t)), *map(repr, p.tolist())])
    print(f"wrote {len(ds)} demonstrations to {out}")


def cmd_train(cfg: RunConfig, args):
    ds = load_demoset(args.demos) if args.demos else _demos(cfg)
    mp1, mp2 = learn_segments(ds, cfg.t1, cfg.k1, cfg.k2, cfg.h, cfg.h, cfg.lam)
    out = _outdir(cfg)
    save_model(mp1, out / "mp1.json")
    save_model(mp2, out / "mp2.json")
    print(f"trained k1={mp1.k} on [0, {mp1.T:g}] s and k2={mp2.k} on {mp2.T:g} s; "
          f"wrote {out}/mp1.json, {out}/mp2.json")


def cmd_experiment(cfg: RunConfig, args):
    out = _outdir(cfg) / args.figure
    if args.figure == "fig5":
        cases = experiments.fig5(generate_nominals(T=1.0, rng_seed=cfg.seed,
                                                   samples_per_traj=cfg.samples_per_traj))
        dev = {c.summary["k"]: c.summary["max_deviation"] for c in cases}
        print(f"max deviation k=4: {dev[4]:.6f} m, k=10: {dev[10]:.6f} m, "
              f"k=10 smaller: {dev[10] < dev[4]}")
    else:
        cases = experiments.fig6(cfg.scene if cfg.scene in PRESET_IDS else "C_IV", cfg.seed)
    paths = experiments.write_bundle(cases, out, args.figure)
    print(f"wrote {len(paths)} files to {out}")


def cmd_plan(cfg: RunConfig, args):
    scene = load_scene_arg(cfg.scene)
    target = args.target or (scene.ripe[0].id if scene.ripe else None)
    if target is None:
        raise InvalidInputError("scene has no ripe fruit")
    mp1, mp2 = _models(cfg, args.models)
    res = plan_movement(scene, target, mp1, mp2, timing=cfg.tc_preset, t1=cfg.t1,
                        mode="naive" if args.naive else "push")
    out = _outdir(cfg)
    save_plan(res.plan, out / "plan.json")
    save_schedule(res.schedule, out / "schedule.json")
    save_trajectory_csv(res.mean_path, out / "trajectory.csv")
    for fid, why in res.plan.failures:
        print(f"warning: fruit {fid} not pushable: {why}", file=sys.stderr)
    print(f"target {res.plan.target_id}: {len(res.plan.directives)} push directive(s), "
          f"{len(res.schedule)} waypoints, planning time {res.planning_time:.4f} s")
    if args.repeat:
        lat = np.empty(args.repeat)
        for j in range(args.repeat):
            lat[j] = plan_movement(scene, target, mp1, mp2, timing=cfg.tc_preset,
                                   t1=cfg.t1).planning_time
        print(json.dumps({"iterations": int(args.repeat), "mean_s": float(lat.mean()),
                          "std_s": float(lat.std(ddof=1)) if args.repeat > 1 else 0.0}))
        return lat
    return None


def cmd_replay(cfg: RunConfig, args):
    scene = load_scene_arg(cfg.scene)
    plan_dir = Path(args.plan_dir) if args.plan_dir else Path(cfg.out)
    plan = load_plan(plan_dir / "plan.json")
    dist = load_trajectory_csv(plan_dir / "trajectory.csv")
    trace = replay(scene, Trajectory(dist.times, dist.mean), plan.target_id,
                   spring_back=args.spring_back)
    metrics = contact_metrics(trace, scene, plan)
    out = _outdir(cfg)
    save_trace_csv(trace, out / "trace.csv")
    save_metrics(metrics, out / "metrics.json", cfg.scene)
    for m in metrics:
        print(f"{m.fruit_id}: h_min={100 * m.h_min:.3f} cm h_max={100 * m.h_max:.3f} cm "
              f"contact={m.contact} swallowed={m.swallowed}")


def cmd_pick_cycle(cfg: RunConfig, args):
    scene = load_scene_arg(cfg.scene)
    order = args.targets.split(",") if args.targets else [f.id for f in scene.ripe]
    results = pick_cycle(scene, order, _models(cfg, args.models), timing=cfg.tc_preset,
                         t1=cfg.t1)
    out = _outdir(cfg)
    summary = []
    for j, (tid, r) in enumerate(zip(order, results)):
        if isinstance(r, PickFailure):
            summary.append({"index": j, "target_id": tid, "ok": False, "error": r.error})
            print(f"{tid}: failed: {r.error}", file=sys.stderr)
            continue
        save_trajectory_csv(r.mean_path, out / f"trajectory_{j}.csv")
        save_schedule(r.schedule, out / f"schedule_{j}.json")
        summary.append({"index": j, "target_id": tid, "ok": True,
                        "start": r.mean_path.mean[0].tolist(),
                        "goal": r.schedule.waypoints[-1].X_star.tolist()})
    _write_json(out / "cycle.json", summary)
    print(f"planned {sum(s['ok'] for s in summary)}/{len(order)} picks into {out}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with run settings")
    common.add_argument("--seed", type=int)
    common.add_argument("--scene", help="preset id, comma-separated preset row, or scene JSON")
    common.add_argument("--k1", type=int)
    common.add_argument("--k2", type=int)
    common.add_argument("--h", type=float, help="basis bandwidth (default 1/k^2)")
    common.add_argument("--lambda", dest="lam", type=float)
    common.add_argument("--T", dest="T", type=float)
    common.add_argument("--t1", type=float)
    common.add_argument("--tc-preset", dest="tc_preset", choices=sorted(TIMING_PRESETS))
    common.add_argument("--samples-per-traj", dest="samples_per_traj", type=int)
    common.add_argument("--out")

    p = argparse.ArgumentParser(prog="ipromp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("demos", parents=[common], help="generate demonstrations")
    t = sub.add_parser("train", parents=[common], help="learn reach and push primitives")
    t.add_argument("--demos", help="DemoSet JSON (default: generate from the seed)")
    e = sub.add_parser("experiment", parents=[common], help="basis and timing studies")
    e.add_argument("figure", choices=("fig5", "fig6"))
    pl = sub.add_parser("plan", parents=[common], help="plan pushes and the trajectory")
    pl.add_argument("--target")
    pl.add_argument("--models", help="directory holding mp1.json and mp2.json")
    pl.add_argument("--repeat", type=int, default=0, help="time this many extra plans")
    pl.add_argument("--naive", action="store_true",
                    help="condition on occluder positions only, without pushed poses")
    r = sub.add_parser("replay", parents=[common], help="simulate a planned trajectory")
    r.add_argument("--plan-dir", help="directory holding plan.json and trajectory.csv")
    r.add_argument("--spring-back", type=float, default=0.0)
    c = sub.add_parser("pick-cycle", parents=[common], help="plan a chain of picks")
    c.add_argument("--targets", help="comma-separated fruit ids in picking order")
    c.add_argument("--models", help="directory holding mp1.json and mp2.json")
    return p


COMMANDS = {"demos": cmd_demos, "train": cmd_train, "experiment": cmd_experiment,
            "plan": cmd_plan, "replay": cmd_replay, "pick-cycle": cmd_pick_cycle}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if getattr(args, "repeat", 0) < 0:
            raise InvalidInputError("--repeat must be non-negative")
        COMMANDS[args.command](cfg, args)
    except (InvalidInputError, GeometryInfeasibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
