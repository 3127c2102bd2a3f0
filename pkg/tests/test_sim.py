import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from ipromp.errors import InvalidInputError, JamError
from ipromp.promp import Trajectory
from ipromp.scene import ClusterScene, hanging_fruit, preset
from ipromp.sim import (CONE_HEIGHT, GripperState, SimTrace, clearance, cone_distance,
                        contact_metrics, metrics_to_dict, replay, save_metrics, save_trace_csv,
                        step)
from ipromp.sip import PushPlan


def oracle_distance(point, apex, r=0.03, H=CONE_HEIGHT):
    """Signed distance to the solid cone by bounded scalar minimisation over its outline."""
    d = np.asarray(point, float) - apex
    depth = -d[2]
    rho = np.hypot(d[0], d[1])
    # a point is inside when it sits between apex and base and within the local radius
    inside = 0 <= depth <= H and rho <= r * depth / H
    side = minimize_scalar(lambda s: np.hypot(rho - r * s, depth - H * s), bounds=(0, 1),
                           method="bounded", options={"xatol": 1e-12}).fun
    base = minimize_scalar(lambda s: np.hypot(rho - r * s, depth - H), bounds=(0, 1),
                           method="bounded", options={"xatol": 1e-12}).fun
    dist = min(side, base)
    return -dist if inside else dist


def single(pos=(0.3, 0.0, 0.55), plane=0.65, incl=0.0, az=0.0):
    f, s = hanging_fruit("a", pos, plane, incl, az)
    return ClusterScene((f,), (s,))


@given(x=st.floats(-0.06, 0.06), y=st.floats(-0.06, 0.06), z=st.floats(-0.08, 0.03))
def test_cone_distance_matches_oracle(x, y, z):
    g = GripperState((0.0, 0.0, 0.0))
    sd, n = cone_distance((x, y, z), g)
    assert abs(sd - oracle_distance((x, y, z), g.position)) <= 1e-9
    assert abs(np.linalg.norm(n) - 1) <= 1e-12


def test_far_gripper_leaves_scene_unchanged():
    s = preset("C_IV")
    out, pushed = step(s, GripperState((0.0, 0.0, 0.3)))
    assert out is s and pushed == []


def test_head_on_push_resolves_contact():
    s = single()
    g = GripperState((0.32, 0.0, 0.58))
    assert clearance(s.fruit("a").position, 0.015, g) < 0
    out, pushed = step(s, g)
    assert pushed == ["a"]
    f, stem = out.fruit("a"), out.stem_of(out.fruit("a"))
    assert abs(np.linalg.norm(f.position - stem.root) - stem.length) <= 1e-9
    # independent check of the post-step gap
    gap = oracle_distance(f.position, g.position) - f.radius
    assert -1e-6 <= gap <= 1e-6


@given(dx=st.floats(-0.04, 0.04), dy=st.floats(-0.04, 0.04), dz=st.floats(0.0, 0.05))
def test_push_is_minimal_swing(dx, dy, dz):
    s = single()
    g = GripperState(np.array([0.3, 0.0, 0.55]) + [dx, dy, dz])
    try:
        out, pushed = step(s, g)
    except JamError:
        return
    if not pushed:
        assert clearance(s.fruit("a").position, 0.015, g) >= 0
        return
    u0 = s.stems[0].direction
    stem = out.stems[0]
    v = stem.direction
    f = out.fruit("a")
    assert oracle_distance(f.position, g.position) - f.radius >= -1e-6
    # bisection on the swing angle in the same plane: no smaller angle clears the cone
    phi = np.arccos(np.clip(u0 @ v, -1, 1))
    w = v - (v @ u0) * u0
    w /= np.linalg.norm(w)

    def gap(a):
        p = stem.root + stem.length * (np.cos(a) * u0 + np.sin(a) * w)
        return oracle_distance(p, g.position) - f.radius

    lo, hi = 0.0, phi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0:
            lo = mid
        else:
            hi = mid
    assert phi - hi <= 1e-6
    assert all(gap(a) < 1e-9 for a in np.linspace(0.0, phi - 1e-6, 200)[1:])


def test_jam_reports_tick():
    s = single(pos=(0.3, 0.0, 0.63))
    root = s.stems[0].root
    pts = np.array([[0.0, 0.0, 0.3], root + [0, 0, 0.01]])
    with pytest.raises(JamError) as info:
        replay(s, Trajectory(np.array([0.0, 1.0]), pts))
    assert info.value.tick == 1 and info.value.fruit_id == "a"


def test_replay_determinism_and_stem_length():
    s = preset("C_IV")
    path = np.linspace([0.25, 0.0, 0.62], [0.4, 0.0, 0.54], 50)
    traj = Trajectory(np.linspace(0, 1, 50), path)
    a, b = replay(s, traj), replay(s, traj)
    for fid in a.fruit_positions:
        np.testing.assert_array_equal(a.fruit_positions[fid], b.fruit_positions[fid])
    for f in s.fruits:
        stem = s.stem_of(f)
        if stem is not None:
            L = np.linalg.norm(a.fruit_positions[f.id] - stem.root, axis=1)
            assert np.abs(L - stem.length).max() <= 1e-9
            assert a.clearances[f.id].min() >= -1e-6


def test_avoiding_path_leaves_history_constant():
    s = preset("C_II")
    traj = Trajectory(np.linspace(0, 1, 20), np.linspace([0, 0, 0.3], [0.05, 0.2, 0.3], 20))
    trace = replay(s, traj)
    for fid in trace.fruit_positions:
        assert trace.displacement(fid) == 0.0
        assert not trace.pushed[fid].any()


def test_spring_back_returns_to_rest():
    s = single()
    hit = np.array([0.32, 0.0, 0.58])
    away = np.array([0.0, 0.0, 0.3])
    traj = Trajectory(np.arange(3.0), np.array([away, hit, away]))
    stays = replay(s, traj, spring_back=0.0)
    back = replay(s, traj, spring_back=1.0)
    rest = s.fruit("a").position
    assert np.linalg.norm(stays.fruit_positions["a"][-1] - rest) > 1e-3
    np.testing.assert_allclose(back.fruit_positions["a"][-1], rest, atol=1e-12)
    with pytest.raises(InvalidInputError):
        step(s, GripperState(hit), spring_back=1.5)


def test_detached_fruit_never_moves():
    s = preset("detached_I")
    target = s.ripe[0]
    pts = np.linspace([0, 0, 0.3], target.position, 40)
    trace = replay(s, Trajectory(np.linspace(0, 1, 40), pts), target.id)
    assert all(trace.displacement(f.id) == 0.0 for f in s.fruits if f.stem_id is None)


def test_metrics_for_far_bystander_and_ordering(tmp_path):
    s = single()
    traj = Trajectory(np.linspace(0, 1, 5), np.tile([0.0, 0.0, 0.3], (5, 1)))
    trace = replay(s, traj)
    (m,) = contact_metrics(trace, s, PushPlan("a"))
    assert not m.applicable and not m.contact
    path = np.linspace([0.2, 0.0, 0.55], [0.4, 0.0, 0.55], 41)
    trace = replay(s, Trajectory(np.linspace(0, 1, 41), path), "a")
    (m,) = contact_metrics(trace, s, PushPlan("a"))
    assert m.applicable and m.h_min <= m.h_max
    save_metrics([m], tmp_path / "m.json", "X")
    assert metrics_to_dict([m], "X")["X"]["a"]["applicable"]
    save_trace_csv(trace, tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text().startswith("t,gx,gy,gz,a_x")


def test_validation():
    with pytest.raises(InvalidInputError):
        GripperState((np.nan, 0, 0))
    with pytest.raises(InvalidInputError):
        GripperState((0, 0, 0), effective_radius=0.0)
    with pytest.raises(InvalidInputError):
        SimTrace(np.zeros(3), np.zeros((3, 3)), {"a": np.zeros((2, 3))}, {})
    with pytest.raises(InvalidInputError):
        replay(single(), Trajectory(np.zeros(1), np.array([[np.inf, 0, 0]])))
