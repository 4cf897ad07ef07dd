import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cinecam.compiler import ConstraintSet, Interpolation, SimInstruction, compile_scd
from cinecam.pose import CameraPose, CameraTrajectory, SubjectState, SubjectTrajectory
from cinecam.scl import Easing, parse_scd
from cinecam.simulator import (CameraSimulator, InfeasibleError, MotionKind, SubjectMotionModel,
                               check_constraints, ease, enforce_constraint, focus_points,
                               generate_subject_motion, interpolate, linear_interp, second_differences,
                               simulate, subject_aware_interp, subject_aware_position)
from cinecam.geometry import project

SUBJECT = SubjectState((0.0, 0.0, 0.85), (0.5, 0.3, 1.7))


def still(frames=30):
    return SubjectTrajectory.constant(SUBJECT, frames)


@pytest.mark.parametrize("kind", list(Easing))
def test_ease_boundaries_and_monotone(kind):
    assert ease(0.0, kind) == 0.0 and ease(1.0, kind) == 1.0
    ts = np.linspace(0, 1, 501)
    assert np.all(np.diff(ease(ts, kind)) >= 0)


def test_ease_midpoints_and_domain():
    assert ease(0.5, Easing.LINEAR) == 0.5
    assert ease(0.5, Easing.EASE_IN_OUT) == 0.5
    for bad in (-0.1, 1.1, float("nan")):
        with pytest.raises(ValueError):
            ease(bad)


def test_linear_interp_examples():
    p0 = CameraPose((0, 0, 0), (-3.0, 0.0, 0.0), 0.6)
    p1 = CameraPose((2, 0, 0), (3.0, 0.0, 0.0), 1.0)
    assert linear_interp(p0, p1, 0.0) is p0 and linear_interp(p0, p1, 1.0) is p1
    mid = linear_interp(p0, p1, 0.5)
    assert mid.position == (1.0, 0.0, 0.0)
    assert abs(mid.yaw) == pytest.approx(math.pi, abs=1e-12)
    assert mid.fov == pytest.approx(0.8)
    with pytest.raises(ValueError):
        linear_interp(p0, p1, 1.5)


def test_subject_aware_example():
    pos = subject_aware_position((0, 0, 0), (2, 0, 0), (1, 1, 0), (1, 1, 0), 1.0, 0.5)
    assert np.allclose(pos, (1.5, 0.0, 0.0), atol=1e-15)


@given(st.lists(st.floats(-10, 10), min_size=9, max_size=9), st.floats(0, 3), st.floats(0, 1))
def test_subject_aware_alpha_zero_and_stationary_collinear(v, alpha, t):
    p0, p1, c = np.array(v[:3]), np.array(v[3:6]), np.array(v[6:])
    lin = p0 + t * (p1 - p0)
    assert np.allclose(subject_aware_position(p0, p1, c, c, 0.0, t), lin)
    pos = subject_aware_position(p0, p1, c, c, alpha, t)
    seg = p1 - p0
    residual = np.linalg.norm(np.cross(pos - p0, seg))
    assert residual <= 1e-9 * max(1.0, np.linalg.norm(seg) ** 2 * (1 + alpha))


def test_subject_aware_interp_keeps_endpoints():
    p0 = CameraPose((3, 0, 1), (math.pi, 0.0, 0.0), 0.8)
    p1 = CameraPose((0, 3, 1), (math.pi / 2, 0.0, 0.0), 0.8)
    c = (0.0, 0.0, 1.0)
    a = subject_aware_interp(p0, p1, c, c, 0.5, 0.0)
    b = subject_aware_interp(p0, p1, c, c, 0.5, 1.0)
    assert np.allclose(a.position, p0.position) and np.allclose(b.position, p1.position)
    mid = subject_aware_interp(p0, p1, c, c, 0.5, 0.5)
    ndc, depth = project(mid.position, mid.orientation, mid.fov, c)
    assert depth > 0 and np.allclose(ndc, 0.0, atol=1e-9)


def compiled(line, frames=30, subject=None):
    subject = subject or still(frames)
    return compile_scd(parse_scd(line), subject), subject


def test_static_instruction_repeats_start():
    inst, subj = compiled("shot=CU angle=high side=front frame=top_left; move=static")
    traj = simulate(inst, subj)
    assert len(traj) == 30
    for i in range(30):
        assert traj[i] == inst.start_pose


def test_orbit_stays_on_sphere():
    inst, subj = compiled("shot=MS angle=eye_level side=front frame=center; move=orbit ease=ease_in_out "
                          "-> shot=MS angle=eye_level side=back_left frame=center")
    traj = simulate(inst, subj)
    focus = focus_points(inst, subj)
    dist = np.linalg.norm(traj.positions - focus, axis=1)
    assert np.max(np.abs(dist - inst.constraints.distance_radius)) <= 1e-3
    assert second_differences(traj.positions).max() <= inst.constraints.max_acceleration + 1e-9
    report = check_constraints(traj, subj, inst)
    assert report["visibility"] == 1.0


def test_simulate_rejects_length_mismatch():
    inst, _ = compiled("shot=CU angle=high side=front frame=center; move=push_in")
    with pytest.raises(ValueError):
        simulate(inst, still(12))


def test_simulate_is_deterministic_and_frame_zero_matches():
    inst, subj = compiled("shot=LS angle=low side=right frame=bottom_left; move=track")
    a = simulate(inst, subj)
    b = simulate(inst, subj)
    assert a == b
    raw = interpolate(inst, subj)
    assert raw[0] == inst.start_pose


def test_infeasible_acceleration_raises():
    line = ("shot=ELS angle=eye_level side=front frame=center; move=orbit dur=4 "
            "-> shot=ELS angle=eye_level side=back frame=center")
    inst, subj = compiled(line, frames=4)
    tight = SimInstruction(inst.start_pose, inst.end_pose, inst.interpolation, inst.alpha, inst.easing,
                           ConstraintSet(static_distance=True, distance_radius=inst.constraints.distance_radius,
                                         max_acceleration=1e-7), 4, inst.focus)
    with pytest.raises(InfeasibleError) as info:
        simulate(tight, subj)
    assert info.value.constraint in ("max_acceleration", "static_distance")


def moving_traj(n=10):
    pos = np.stack([np.linspace(0, 3, n), np.linspace(-2, 2, n), np.full(n, 1.0)], axis=1)
    rot = np.zeros((n, 3))
    return CameraTrajectory(pos, rot, np.full(n, 0.8))


def test_static_location_pass():
    out = enforce_constraint(moving_traj(), still(10), "static_location")
    assert np.var(out.positions, axis=0).max() == 0.0
    again = enforce_constraint(out, still(10), "static_location")
    assert again == out


def test_static_distance_pass_preserves_direction():
    traj = moving_traj()
    subj = SubjectTrajectory.constant(SubjectState((5.0, 0.0, 0.85), (0.5, 0.3, 1.7)), 10)
    cs = ConstraintSet(static_distance=True, distance_radius=2.5)
    out = enforce_constraint(traj, subj, "static_distance", cs)
    rel_in = traj.positions - subj.centers
    rel_out = out.positions - subj.centers
    assert np.allclose(np.linalg.norm(rel_out, axis=1), 2.5, atol=1e-12)
    cos = np.sum(rel_in * rel_out, axis=1) / np.linalg.norm(rel_in, axis=1) / 2.5
    assert np.allclose(cos, 1.0, atol=1e-12)
    again = enforce_constraint(out, subj, "static_distance", cs)
    assert np.allclose(again.positions, out.positions, atol=1e-9)


def test_visibility_turns_camera_around():
    pose = CameraPose((3.0, 0.0, 0.85), (0.0, 0.0, 0.0), 0.8)
    traj = CameraTrajectory.from_poses([pose] * 3)
    out = enforce_constraint(traj, still(3), "visibility")
    assert np.array_equal(out.positions, traj.positions)
    ndc, depth = project(out.positions, out.orientations, out.fovs, still(3).centers)
    assert np.all(depth > 0) and np.all(np.abs(ndc) <= 1.0)
    assert enforce_constraint(out, still(3), "visibility") == out


def test_acceleration_pass():
    n = 30
    x = np.where(np.arange(n) < 15, 0.0, 1.0)
    traj = CameraTrajectory(np.stack([x, np.zeros(n), np.ones(n)], axis=1), np.zeros((n, 3)), np.full(n, 0.8))
    cs = ConstraintSet(max_acceleration=0.05)
    out = enforce_constraint(traj, still(n), "max_acceleration", cs)
    assert second_differences(out.positions).max() <= 0.05 + 1e-9
    assert np.allclose(out.positions[[0, -1]], traj.positions[[0, -1]])
    assert enforce_constraint(out, still(n), "max_acceleration", cs) == out


def test_enforce_constraint_argument_checks():
    with pytest.raises(ValueError):
        enforce_constraint(moving_traj(), still(10), "gravity")
    with pytest.raises(ValueError):
        enforce_constraint(moving_traj(), still(9), "visibility")


def test_camera_simulator_estimator():
    inst, subj = compiled("shot=FS angle=high side=left frame=center; move=crane")
    out = CameraSimulator().fit().transform([(inst, subj)])
    assert out[0] == simulate(inst, subj)


def test_subject_motion_examples():
    s = generate_subject_motion(SubjectMotionModel(MotionKind.STATIONARY, seed=4), 20)
    assert s.is_static()
    walk = generate_subject_motion(SubjectMotionModel(MotionKind.LINE_WALK, {"speed": 0.04, "heading": 0.0}), 30)
    assert np.linalg.norm(walk.centers[-1] - walk.centers[0]) == pytest.approx(1.16, abs=1e-12)
    with pytest.raises(ValueError):
        generate_subject_motion(SubjectMotionModel(MotionKind.LINE_WALK, {"speed": 0.1}), 10)
    with pytest.raises(ValueError):
        generate_subject_motion(SubjectMotionModel(MotionKind.LINE_WALK, {"pace": 1}), 10)
    with pytest.raises(ValueError):
        generate_subject_motion(SubjectMotionModel(), 0)


@settings(max_examples=40)
@given(st.sampled_from(list(MotionKind)), st.integers(0, 2 ** 32 - 1), st.integers(1, 60))
def test_subject_motion_deterministic_and_speed_bounded(kind, seed, frames):
    model = SubjectMotionModel(kind, {"max_speed": 0.03}, seed)
    a = generate_subject_motion(model, frames)
    b = generate_subject_motion(model, frames)
    assert np.array_equal(a.centers, b.centers) and np.array_equal(a.facing, b.facing)
    if frames > 1:
        assert np.linalg.norm(np.diff(a.centers, axis=0), axis=1).max() <= 0.03 + 1e-12
