import math
import pickle

import numpy as np
import pytest

from cinecam.compiler import (CELL_NDC, SHOT_TABLE, ConstraintSet, Interpolation, ShotCompiler, ShotParams,
                              SimInstruction, compile_scd, constraints_for_movement, fit_distance,
                              macro_align, micro_align, plausible_ends, roi_from_boxes, shot_params)
from cinecam.geometry import FramingError, forward_vector, project_pose
from cinecam.pose import BoundingBox, CameraPose, SubjectState, SubjectTrajectory
from cinecam.scl import CameraAngleSpec, Elevation, FramingCell, MovementKind, ShotType, Side, parse_scd

# 0.85 / tan(pi / 8), evaluated once with math.tan
PINHOLE_R = 2.0520815280171307
FOV = math.radians(45)
SUBJECT = SubjectState((0.0, 0.0, 0.85), (0.5, 0.3, 1.7))


def roi_for(shot, state=SUBJECT):
    return roi_from_boxes(state.attention_box().placed(state), state.volume_box().placed(state), shot_params(shot))


def test_shot_table_golden():
    expected = {"ECU": (0.0, 0.5), "CU": (0.0, 1.0), "MCU": (0.25, 1.0), "MS": (0.5, 1.0),
                "FS": (1.0, 1.0), "LS": (1.0, 1.5), "VLS": (1.0, 2.0), "ELS": (1.0, 3.0)}
    assert {k.value: (v.interp_factor, v.scale) for k, v in SHOT_TABLE.items()} == expected
    assert shot_params("MS") == ShotParams(0.5, 1.0)


def test_roi_interpolation():
    a = BoundingBox((0, 0, 1), (0.1, 0.1, 0.1))
    v = BoundingBox((0, 0, 0), (0.5, 0.5, 0.9))
    mid = roi_from_boxes(a, v, ShotParams(0.5, 1.0))
    assert np.allclose(mid.half_extents, (0.3, 0.3, 0.5))
    assert roi_from_boxes(a, v, ShotParams(1.0, 1.0)) == v
    ecu = roi_from_boxes(a, v, SHOT_TABLE[ShotType.ECU])
    assert ecu.center == a.center and np.allclose(ecu.half_extents, (0.05, 0.05, 0.05))
    tilted = BoundingBox((0, 0, 0), (1, 1, 1), ((0, 1, 0), (-1, 0, 0), (0, 0, 1)))
    with pytest.raises(ValueError):
        roi_from_boxes(a, tilted, ShotParams(0.5, 1.0))


def test_pinhole_fit_distance():
    roi = roi_for(ShotType.FS)
    assert fit_distance(roi, FOV) == pytest.approx(PINHOLE_R, abs=1e-12)
    assert round(PINHOLE_R, 3) == 2.052


def test_macro_align_front_eye_level():
    roi = roi_for(ShotType.FS)
    pose = macro_align(CameraAngleSpec(Elevation.EYE_LEVEL, Side.FRONT), roi, SUBJECT, FOV)
    assert np.allclose(pose.position, (PINHOLE_R, 0.0, 0.85), atol=1e-12)
    to_center = np.array(roi.center) - np.array(pose.position)
    cos = forward_vector(pose.orientation) @ to_center / np.linalg.norm(to_center)
    assert math.acos(min(cos, 1.0)) < 1e-6
    # the ROI spans the image height exactly
    top = project_pose(pose, (0.0, 0.0, 1.7))[0]
    assert top[1] == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("elev", list(Elevation))
def test_macro_align_front_back_mirror(elev):
    roi = roi_for(ShotType.MS)
    front = macro_align(CameraAngleSpec(elev, Side.FRONT), roi, SUBJECT, FOV)
    back = macro_align(CameraAngleSpec(elev, Side.BACK), roi, SUBJECT, FOV)
    c = np.array(roi.center)
    mirrored = 2 * c - np.array(front.position)
    assert np.allclose(back.position[:2], mirrored[:2], atol=1e-12)
    assert back.position[2] == pytest.approx(front.position[2], abs=1e-12)
    assert np.linalg.norm(np.array(front.position) - c) == pytest.approx(fit_distance(roi, FOV), abs=1e-9)


def test_macro_align_rejects_bad_input():
    flat = BoundingBox((0, 0, 0), (1, 1, 1e-12))
    with pytest.raises(FramingError):
        macro_align(CameraAngleSpec(Elevation.LOW, Side.LEFT), flat, SUBJECT, FOV)
    with pytest.raises(ValueError):
        macro_align(CameraAngleSpec(Elevation.LOW, Side.LEFT), roi_for("CU"), SUBJECT, math.pi)


def test_micro_align_center_is_fixed_point():
    roi = roi_for(ShotType.MS)
    macro = macro_align(CameraAngleSpec(Elevation.HIGH, Side.FRONT_LEFT), roi, SUBJECT, FOV)
    out = micro_align(macro, roi, FramingCell.CENTER)
    assert np.allclose(out.position, macro.position, atol=1e-9)
    assert np.allclose(out.orientation, macro.orientation, atol=1e-9)
    assert out.fov == pytest.approx(macro.fov, abs=1e-9)


def test_micro_align_middle_left_reprojects():
    roi = roi_for(ShotType.CU)
    macro = macro_align(CameraAngleSpec(Elevation.LOW, Side.RIGHT), roi, SUBJECT, FOV)
    out = micro_align(macro, roi, FramingCell.MIDDLE_LEFT)
    ndc, depth = project_pose(out, roi.center)
    assert depth > 0
    assert abs(ndc[0] + 1 / 3) <= 0.02 and abs(ndc[1]) <= 0.02


def test_micro_align_top_right_angles():
    roi = roi_for(ShotType.MS)
    macro = macro_align(CameraAngleSpec(Elevation.EYE_LEVEL, Side.FRONT), roi, SUBJECT, FOV)
    out = micro_align(macro, roi, FramingCell.TOP_RIGHT)
    expected = math.atan(math.tan(out.fov / 2) / 3)
    d_yaw = math.remainder(out.yaw - macro.yaw, 2 * math.pi)
    assert d_yaw < 0 and out.pitch > macro.pitch
    assert -d_yaw == pytest.approx(expected, rel=0.02)
    assert out.pitch - macro.pitch == pytest.approx(expected, rel=0.02)


@pytest.mark.parametrize("cell", list(FramingCell))
def test_micro_align_idempotent_and_size_preserving(cell):
    roi = roi_for(ShotType.MCU)
    macro = macro_align(CameraAngleSpec(Elevation.HIGH, Side.BACK_RIGHT), roi, SUBJECT, FOV)
    once = micro_align(macro, roi, cell)
    twice = micro_align(once, roi, cell)
    assert np.allclose(once.position, twice.position, atol=1e-6)
    assert np.allclose(once.orientation, twice.orientation, atol=1e-6)
    assert abs(once.fov - twice.fov) < 1e-6
    ndc, _ = project_pose(once, roi.center)
    assert np.max(np.abs(ndc - np.array(CELL_NDC[cell]))) <= 0.02


def test_micro_align_rejects_roi_behind_camera():
    roi = roi_for(ShotType.CU)
    pose = CameraPose((3.0, 0.0, 1.5), (0.0, 0.0, 0.0), FOV)
    with pytest.raises(FramingError):
        micro_align(pose, roi, FramingCell.CENTER)


def test_constraint_mapping():
    assert constraints_for_movement("pan") == ConstraintSet(static_location=True, max_acceleration=0.05)
    orbit = constraints_for_movement("orbit", radius=2.0)
    assert orbit.static_distance and orbit.visibility_throughout and orbit.distance_radius == 2.0
    static = constraints_for_movement("static")
    assert not (static.static_location or static.static_distance or static.visibility_throughout)
    assert static.max_acceleration == 0.05
    for kind in ("track", "push_in", "pull_out", "crane"):
        assert constraints_for_movement(kind).visibility_throughout
    with pytest.raises(ValueError):
        ConstraintSet(static_location=True, static_distance=True)


def test_plausible_ends_follow_movement():
    init = parse_scd("shot=MS angle=eye_level side=front frame=center; move=pan").init
    for end in plausible_ends(init, MovementKind.ORBIT):
        assert end.angle.side != init.angle.side and end.shot == init.shot
    for end in plausible_ends(init, MovementKind.PUSH_IN):
        assert end.shot == ShotType.MCU
    for end in plausible_ends(init, MovementKind.TILT):
        assert end.framing in (FramingCell.TOP_CENTER, FramingCell.BOTTOM_CENTER)


def subject(frames=30):
    return SubjectTrajectory.constant(SUBJECT, frames)


def test_compile_static():
    scd = parse_scd("shot=CU angle=high side=front frame=top_left; move=static")
    inst = compile_scd(scd, subject())
    assert inst.start_pose == inst.end_pose and inst.frames == 30
    assert inst.interpolation == Interpolation.LINEAR


def test_compile_orbit_equal_radius():
    scd = parse_scd("shot=MS angle=eye_level side=front frame=center; move=orbit dur=40 "
                    "-> shot=MS angle=eye_level side=left frame=center")
    inst = compile_scd(scd, subject(40))
    c = np.array(SUBJECT.center) + np.array(inst.focus[0])
    r0 = np.linalg.norm(np.array(inst.start_pose.position) - c)
    r1 = np.linalg.norm(np.array(inst.end_pose.position) - c)
    assert abs(r0 - r1) <= 1e-6
    assert inst.interpolation == Interpolation.SUBJECT_AWARE
    assert inst.constraints.distance_radius == pytest.approx(r0)


def test_compile_pan_keeps_position():
    scd = parse_scd("shot=MS angle=eye_level side=front frame=middle_left; move=pan "
                    "-> shot=MS angle=eye_level side=front frame=middle_right")
    inst = compile_scd(scd, subject())
    assert inst.start_pose.position == inst.end_pose.position


def test_compile_is_deterministic():
    scd = parse_scd("shot=LS angle=low side=back_left frame=bottom_right; move=crane ease=ease_out")
    a = compile_scd(scd, subject(), seed=11)
    b = compile_scd(scd, subject(), seed=11)
    assert pickle.dumps(a) == pickle.dumps(b)


def test_sim_instruction_validation():
    pose = CameraPose((0, 0, 0), (0, 0, 0), 1.0)
    other = pose.replace(position=(1.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        SimInstruction(pose, other, "linear", 0.5, "linear", ConstraintSet(), 1)
    with pytest.raises(ValueError):
        SimInstruction(pose, pose, "linear", 0.5, "linear", ConstraintSet(), 0)
    with pytest.raises(ValueError):
        SimInstruction(pose, pose, "linear", 0.5, "linear", ConstraintSet(), 3, focus=((0, 0, 0),))


def test_shot_compiler_estimator():
    from sklearn.exceptions import NotFittedError

    lines = ["shot=CU angle=low side=back frame=center; move=push_in",
             "shot=FS angle=high side=left frame=top_center; move=static"]
    with pytest.raises(NotFittedError):
        ShotCompiler().transform(lines)
    est = ShotCompiler(random_state=3).fit(subject())
    out = est.transform(lines)
    assert len(out) == 2 and out == ShotCompiler(random_state=3).fit(subject()).transform(lines)
    assert est.get_params()["random_state"] == 3
