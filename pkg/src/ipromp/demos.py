"""Synthetic demonstrations for training primitives.

Each nominal reach is a cubic-RBF interpolant from a shared start to a goal
through a via point lifted above the chord. Noisy copies perturb the end
point only; the perturbation is blended in linearly over time so that every
copy leaves from exactly the same start.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .basis import CubicRBF, eval_cubic_rbf
from .errors import DegenerateTrajectoryError, InvalidInputError

DEFAULT_START = (0.0, 0.0, 0.3)
DEFAULT_GOAL_CENTER = (0.3, 0.0, 0.6)
DEFAULT_RATE = 100.0
END_NOISE_STD = 1e-3
VIA_LIFT = 0.05


@dataclass(frozen=True)
class Demonstration:
    times: np.ndarray
    points: np.ndarray
    nominal_id: int = 0

    def __post_init__(self):
        times = np.array(self.times, dtype=float).reshape(-1)
        points = np.array(self.points, dtype=float)
        if points.ndim != 2 or points.shape != (times.size, 3):
            raise InvalidInputError(f"points must have shape ({times.size}, 3), got {points.shape}")
        if times.size < 2 or times[0] != 0.0 or np.any(np.diff(times) <= 0):
            raise InvalidInputError("times must increase strictly from 0")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(points))):
            raise InvalidInputError("demonstration contains non-finite values")
        times.setflags(write=False)
        points.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "nominal_id", int(self.nominal_id))

    @property
    def T(self):
        return float(self.times[-1])

    def __len__(self):
        return self.times.size


@dataclass(frozen=True)
class DemoSet:
    """Demonstrations sharing a duration and, unless ``start`` is None, a start."""

    demos: tuple
    T: float
    start: np.ndarray | None = None
    goals: np.ndarray | None = field(default=None)

    def __post_init__(self):
        demos = tuple(self.demos)
        start = None
        if self.start is not None:
            start = np.array(self.start, dtype=float).reshape(3)
            start.setflags(write=False)
        for d in demos:
            if not np.isclose(d.T, self.T, rtol=0, atol=1e-12):
                raise InvalidInputError("all demonstrations must share the duration T")
            if start is not None and not np.array_equal(d.points[0], start):
                raise InvalidInputError("all demonstrations must leave from the shared start")
        goals = None
        if self.goals is not None:
            goals = np.array(self.goals, dtype=float).reshape(-1, 3)
            goals.setflags(write=False)
        object.__setattr__(self, "demos", demos)
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "goals", goals)

    def __len__(self):
        return len(self.demos)

    def __iter__(self):
        return iter(self.demos)

    def by_nominal(self):
        groups = {}
        for d in self.demos:
            groups.setdefault(d.nominal_id, []).append(d)
        return groups

    def mean_points(self):
        """Pointwise average over demonstrations (requires a shared time grid)."""
        return np.mean([d.points for d in self.demos], axis=0)


def default_goals(center=DEFAULT_GOAL_CENTER, radius=0.05, n=10):
    """``n`` end points on a ring around ``center``, alternating in height."""
    center = np.asarray(center, dtype=float)
    a = 2 * np.pi * np.arange(n) / n
    offsets = np.stack([np.cos(a), np.sin(a), 0.4 * np.where(np.arange(n) % 2, 1.0, -1.0)], axis=1)
    return center + radius * offsets


def _via_values(start, goal, s, lift):
    """Chord points at fractions ``s`` lifted by a parabola peaking at ``lift``."""
    s = np.asarray(s, dtype=float)[:, None]
    chord = start + s * (goal - start)
    bump = 4.0 * s * (1.0 - s) * lift
    return chord + bump * np.array([0.0, 0.0, 1.0])


def cubic_rbf_interpolant(rbf: CubicRBF, values):
    """Cubic RBF interpolant of ``values`` at the centers, with a linear tail.

    Solves the saddle system ``[[A, P], [P.T, 0]]`` where ``A`` holds
    ``|c_i - c_j|**3`` and ``P = [1, c]``; the tail keeps the fit from
    oscillating between nodes. Returns a callable over scalar or array input.
    """
    c = rbf.centers
    values = np.asarray(values, dtype=float)
    n = c.size
    P = np.stack([np.ones(n), c], axis=1)
    system = np.block([[eval_cubic_rbf(rbf, c), P], [P.T, np.zeros((2, 2))]])
    rhs = np.concatenate([values.reshape(n, -1), np.zeros((2, values.reshape(n, -1).shape[1]))])
    sol = np.linalg.solve(system, rhs)
    w, poly = sol[:n], sol[n:]

    def evaluate(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = eval_cubic_rbf(rbf, x) @ w + np.stack([np.ones_like(x), x], axis=1) @ poly
        return out.reshape((x.size,) + values.shape[1:])

    return evaluate


def nominal_trajectory(start, goal, times, rbf: CubicRBF | None = None, lift=VIA_LIFT):
    """Cubic-RBF interpolant from ``start`` (first center) to ``goal`` (last center).

    Interior centers are interpolation nodes for the lifted via points.
    """
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    if np.linalg.norm(goal - start) < 1e-12:
        raise DegenerateTrajectoryError("goal coincides with start")
    times = np.asarray(times, dtype=float)
    T = times[-1]
    if rbf is None:
        rbf = CubicRBF([0.0, T / 2, T])
    c = rbf.centers
    if c.size < 2:
        raise InvalidInputError("need at least two RBF centers (start and goal)")
    s = (c - c[0]) / (c[-1] - c[0])
    values = _via_values(start, goal, s, lift)
    values[0], values[-1] = start, goal
    path = cubic_rbf_interpolant(rbf, values)(times)
    # pin the ends to the nodes exactly; the solve leaves ~1e-16 residue
    if np.isclose(times[0], c[0]):
        path[0] = start
    if np.isclose(times[-1], c[-1]):
        path[-1] = goal
    return path


def time_grid(T, rate=DEFAULT_RATE):
    n = int(round(T * rate)) + 1
    return np.linspace(0.0, T, max(n, 2))


def generate_nominals(start=DEFAULT_START, goals=None, T=1.0, samples_per_traj=10,
                      rbf: CubicRBF | None = None, rng_seed=0, noise_std=END_NOISE_STD,
                      rate=DEFAULT_RATE, lift=VIA_LIFT) -> DemoSet:
    """Noisy copies of one nominal reach per goal.

    Parameters
    ----------
    start : array_like, shape (3,)
        Shared start point in meters.
    goals : array_like, shape (n, 3), optional
        Nominal end points. Defaults to :func:`default_goals`.
    T : float
        Duration of every demonstration in seconds.
    samples_per_traj : int
        Number of perturbed copies per nominal.
    rbf : CubicRBF, optional
        Interpolation centers in seconds; defaults to ``[0, T/2, T]``.
    rng_seed : int
        Seed for the end-point perturbation.
    noise_std : float
        Per-axis standard deviation of the end-point perturbation.
    """
    if goals is None:
        goals = default_goals()
    goals = np.atleast_2d(np.asarray(goals, dtype=float))
    if goals.size == 0:
        raise InvalidInputError("need at least one goal")
    if not T > 0:
        raise InvalidInputError(f"duration must be positive, got {T}")
    if int(samples_per_traj) < 1:
        raise InvalidInputError("samples_per_traj must be at least 1")
    start = np.asarray(start, dtype=float).reshape(3)
    times = time_grid(T, rate)
    blend = (times / T)[:, None]
    rng = np.random.default_rng(rng_seed)
    demos = []
    for gid, goal in enumerate(goals):
        nominal = nominal_trajectory(start, goal, times, rbf=rbf, lift=lift)
        for _ in range(int(samples_per_traj)):
            eps = rng.normal(0.0, noise_std, size=3)
            pts = nominal + blend * eps
            pts[0] = start
            demos.append(Demonstration(times, pts, gid))
    return DemoSet(tuple(demos), T, start, goals)


def resample(demo: Demonstration, n: int) -> Demonstration:
    """Piecewise-linear resampling onto ``n`` uniform times over ``[0, T]``."""
    if n < 2:
        raise InvalidInputError("need at least two samples")
    t_new = np.linspace(0.0, demo.T, n)
    pts = np.stack([np.interp(t_new, demo.times, demo.points[:, d]) for d in range(3)], axis=1)
    return Demonstration(t_new, pts, demo.nominal_id)


def split_demoset(demoset: DemoSet, t_split: float):
    """Cut every demonstration at ``t_split`` into two re-timed halves.

    The sample at ``t_split`` (or nearest to it) belongs to both halves, and
    each half is shifted to start at zero.
    """
    if not 0 < t_split < demoset.T:
        raise InvalidInputError(f"split time must lie in (0, {demoset.T})")
    first, second = [], []
    for d in demoset:
        i = int(np.argmin(np.abs(d.times - t_split)))
        if i == 0 or i == len(d) - 1:
            raise InvalidInputError("split leaves an empty segment")
        t1 = d.times[i]
        first.append(Demonstration(d.times[: i + 1], d.points[: i + 1], d.nominal_id))
        second.append(Demonstration(d.times[i:] - t1, d.points[i:], d.nominal_id))
    t1 = first[0].T
    # second halves enter from wherever the first halves ended
    return DemoSet(first, t1, demoset.start), DemoSet(second, demoset.T - t1)


def demoset_to_dict(ds: DemoSet):
    out = {
        "T": ds.T,
        "start": None if ds.start is None else ds.start.tolist(),
        "demos": [{"nominal_id": d.nominal_id, "times": d.times.tolist(),
                   "points": d.points.tolist()} for d in ds],
    }
    if ds.goals is not None:
        out["goals"] = ds.goals.tolist()
    return out


def demoset_from_dict(data) -> DemoSet:
    demos = tuple(Demonstration(d["times"], d["points"], d.get("nominal_id", 0))
                  for d in data["demos"])
    return DemoSet(demos, data["T"], data.get("start"), data.get("goals"))


def save_demoset(ds: DemoSet, path):
    Path(path).write_text(json.dumps(demoset_to_dict(ds)))


def load_demoset(path) -> DemoSet:
    return demoset_from_dict(json.loads(Path(path).read_text()))
