import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ipromp.errors import GeometryInfeasibleError, InvalidInputError
from ipromp.scene import ClusterScene, Fruit, Stem, TableTopFrame, hanging_fruit, preset
from ipromp.sip import (OcclusionSubsets, corridor_distance, get_dir, load_plan, plan_pushes,
                        plan_to_dict, save_plan, split_subsets, stem_geometry, subset_opt)

FRAME = TableTopFrame()
TARGET = Fruit("t", (0.3, 0.0, 0.6), ripe=True)


def vertical(fid, pos, L=0.1):
    p = np.asarray(pos, dtype=float)
    stem = Stem("s_" + fid, p + [0, 0, L], (0, 0, -1), L)
    return Fruit(fid, p, stem_id=stem.id), stem


def test_split_criteria():
    wide = Fruit("w", (0.34, 0.0, 0.58))
    below = Fruit("b", (0.30, 0.0, 0.57))
    s = split_subsets([wide, below], TARGET, FRAME, 0.03)
    assert [f.id for f in s.S_d] == ["b"] and not s.S_p and not s.S_t


def test_c_vi_subsets():
    s = preset("C_VI")
    from ipromp.scene import radius_nearest_neighbours
    target = s.ripe[0]
    sub = split_subsets(radius_nearest_neighbours(s, target), target, s.frame, 0.03)
    assert (len(sub.below), len(sub.level), len(sub.above)) == (1, 0, 1)
    # brute-force check of both inequalities
    for f in sub.below + sub.above:
        d = f.position - target.position
        assert abs(d[0]) <= 0.03 and abs(d[2]) > 0.005


def test_subset_opt_rules():
    a = Fruit("a", (0.31, 0.0, 0.57))
    assert subset_opt(OcclusionSubsets([a], [], []), TARGET, FRAME) == [a]
    near = Fruit("near", (0.31, 0.01, 0.57))
    far = Fruit("far", (0.28, -0.01, 0.57))
    got = subset_opt(OcclusionSubsets([far, near], [], []), TARGET, FRAME)
    assert [f.id for f in got] == ["near"]


def test_subset_opt_gravity_tiebreak():
    # both stems cross the corridor at the target height; the more vertical one wins
    upright, s1 = hanging_fruit("upright", (0.32, 0.0, 0.57), 0.72, 0.05, np.pi)
    leaning, s2 = hanging_fruit("leaning", (0.29, 0.0, 0.571), 0.72, 0.15, 0.0)
    scene = ClusterScene((TARGET, upright, leaning), (s1, s2))
    got = subset_opt(OcclusionSubsets([upright, leaning], [], []), TARGET, FRAME, scene)
    assert [f.id for f in got] == ["upright"]


def test_c_i_keeps_both_lowest_first():
    plan = plan_pushes(preset("C_I"))
    s = preset("C_I")
    heights = [s.fruit(f).position[2] for f in plan.selected]
    assert len(plan.selected) == 2 and heights == sorted(heights)


def test_vertical_stem_geometry():
    f, stem = vertical("n", (0.3, 0.0, 0.62))
    g = stem_geometry(f, Stem(stem.id, (0.3, 0, 0.72), (0, 0, -1), 0.1), FRAME, 0.03)
    assert g.theta_0 == 0.0
    assert abs(g.theta - 0.30469) < 1e-5
    assert abs(g.s - 0.1 * math.sqrt(2 * (1 - math.cos(math.asin(0.3))))) <= 1e-15
    assert abs(g.s - 0.0303515398565) < 1e-12


def test_inclined_past_clearance():
    f, stem = hanging_fruit("n", (0.3, 0.0, 0.62), 0.72, 0.5, 0.0)
    g = stem_geometry(f, stem, FRAME, 0.03)
    assert g.d_theta == 0.0 and g.s == 0.0


def test_short_stem_infeasible():
    f, stem = vertical("n", (0.3, 0.0, 0.69), 0.03)
    with pytest.raises(GeometryInfeasibleError):
        stem_geometry(f, stem, FRAME, 0.03)
    lying = Stem("h", (0, 0, 0.72), (1, 0, 0), 0.1)
    with pytest.raises(GeometryInfeasibleError):
        stem_geometry(Fruit("x", lying.tip, stem_id="h"), lying, FRAME, 0.03)


@given(L=st.floats(0.035, 0.3), r1=st.floats(0.005, 0.03), dr=st.floats(0.0, 0.004))
def test_s_monotone_in_opening(L, r1, dr):
    f, stem = vertical("n", (0.3, 0.0, 0.72 - L), L)
    a = stem_geometry(f, stem, FRAME, r1).s
    b = stem_geometry(f, stem, FRAME, min(r1 + dr, L * 0.999)).s
    assert b >= a - 1e-15


@given(L=st.floats(0.05, 0.3), incl=st.floats(0.0, 0.25), az=st.floats(-np.pi, np.pi))
def test_chord_identity(L, incl, az):
    f, stem = hanging_fruit("n", (0.3, 0.0, 0.72 - L * np.cos(incl)), 0.72, incl, az)
    g = stem_geometry(f, stem, FRAME, 0.03)
    # rotate the stem by d_theta about its root in any plane containing it
    axis = np.cross(stem.direction, [0.0, 1.0, 0.0])
    if np.linalg.norm(axis) < 1e-9:
        axis = np.array([1.0, 0.0, 0.0])
    axis /= np.linalg.norm(axis)
    u = stem.direction
    c, s = np.cos(g.d_theta), np.sin(g.d_theta)
    rotated = u * c + np.cross(axis, u) * s + axis * (axis @ u) * (1 - c)
    moved = stem.root + g.length * rotated
    assert abs(np.linalg.norm(moved - f.position) - g.s) <= 1e-9


def test_get_dir_cases():
    lone = Fruit("a", (0.31, 0.0, 0.57))
    u = get_dir(lone, [lone], FRAME, TARGET)
    np.testing.assert_array_equal(u, [1.0, 0.0, 0.0])
    left = Fruit("b", (0.29, 0.0, 0.57))
    np.testing.assert_array_equal(get_dir(left, [left], FRAME, TARGET), [-1.0, 0.0, 0.0])
    peer = Fruit("c", (0.31, 0.02, 0.571))
    np.testing.assert_array_equal(get_dir(lone, [lone, peer], FRAME, TARGET), [0.0, 0.0, -1.0])


@given(dx=st.floats(-0.03, 0.03), dy=st.floats(-0.03, 0.03), dz=st.floats(-0.05, -0.006))
def test_get_dir_unit_and_horizontal(dx, dy, dz):
    f = Fruit("a", TARGET.position + [dx, dy, dz])
    u = get_dir(f, [f], FRAME, TARGET)
    assert abs(np.linalg.norm(u) - 1) <= 1e-15 and u @ FRAME.k == 0.0
    side = FRAME.i @ (f.position - TARGET.position)
    assert u[0] == (1.0 if side >= 0 else -1.0)


def test_isolated_target_has_no_directives():
    plan = plan_pushes(ClusterScene((TARGET,)), "t")
    assert plan.directives == () and not plan.partial


def test_c_iv_single_directive_clears_corridor():
    s = preset("C_IV")
    plan = plan_pushes(s)
    assert len(plan.directives) == 1
    d = plan.directives[0]
    target = s.fruit(plan.target_id)
    assert abs(s.frame.i @ (d.updated_position - target.position)) > 0.03


@pytest.mark.parametrize("cid", ["C_I", "C_II", "C_III", "C_IV", "C_V", "C_VI"])
def test_directive_invariants(cid):
    s = preset(cid)
    plan = plan_pushes(s)
    target = s.fruit(plan.target_id)
    heights = [s.fruit(d.fruit_id).position[2] for d in plan.directives]
    assert heights == sorted(heights)
    for d in plan.directives:
        assert abs(np.linalg.norm(d.u_p) - 1) <= 1e-12 and d.d_theta >= 0 and d.s >= 0
        assert abs(np.linalg.norm(d.updated_position - plan.original_positions[d.fruit_id])
                   - d.s) <= 1e-9
        if d.theta - d.theta_0 > 0:
            assert corridor_distance(d.updated_position, target.position, s.frame) >= 0.03 - 1e-6


def test_detached_occluder_reported_partial():
    t = Fruit("t", (0.3, 0.0, 0.6), ripe=True)
    loose = Fruit("x", (0.3, 0.0, 0.57))
    plan = plan_pushes(ClusterScene((t, loose)), "t")
    assert plan.partial and plan.failures[0][0] == "x" and plan.directives == ()


def test_plan_determinism_and_json(tmp_path):
    a, b = plan_pushes(preset("C_V")), plan_pushes(preset("C_V"))
    assert plan_to_dict(a) == plan_to_dict(b)
    save_plan(a, tmp_path / "p.json")
    assert plan_to_dict(load_plan(tmp_path / "p.json")) == plan_to_dict(a)


def test_random_target_and_validation():
    s = preset("C_V")
    assert plan_pushes(s, rng_seed=3).target_id == s.ripe[0].id
    with pytest.raises(InvalidInputError):
        plan_pushes(s, [f for f in s.fruits if not f.ripe][0].id)
