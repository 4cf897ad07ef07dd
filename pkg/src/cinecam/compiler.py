"""Lower a shot description plus a subject trajectory into simulator
instructions: endpoint poses, a constraint set and an interpolation plan."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .config import Config
from .geometry import FramingError, aim_at_ndc, camera_basis, look_at, project_pose, rotation_angle
from .pose import BoundingBox, CameraPose, SubjectState, SubjectTrajectory
from .scl import (
    CameraAngleSpec, Easing, Elevation, EndpointSpec, FramingCell, MovementKind,
    ScdError, ScdRecord, ShotType, Side, parse_scd, validate_scd,
)

RoiBox = BoundingBox


class Interpolation(str, Enum):
    LINEAR = "linear"
    SUBJECT_AWARE = "subject_aware"


@dataclass(frozen=True)
class ShotParams:
    interp_factor: float
    scale: float


SHOT_TABLE = {
    ShotType.ECU: ShotParams(0.0, 0.5),
    ShotType.CU: ShotParams(0.0, 1.0),
    ShotType.MCU: ShotParams(0.25, 1.0),
    ShotType.MS: ShotParams(0.50, 1.0),
    ShotType.FS: ShotParams(1.0, 1.0),
    ShotType.LS: ShotParams(1.0, 1.5),
    ShotType.VLS: ShotParams(1.0, 2.0),
    ShotType.ELS: ShotParams(1.0, 3.0),
}

# rule-of-thirds cell centers in NDC, x to the right, y up
CELL_NDC = {
    FramingCell.TOP_LEFT: (-1 / 3, 1 / 3),
    FramingCell.TOP_CENTER: (0.0, 1 / 3),
    FramingCell.TOP_RIGHT: (1 / 3, 1 / 3),
    FramingCell.MIDDLE_LEFT: (-1 / 3, 0.0),
    FramingCell.CENTER: (0.0, 0.0),
    FramingCell.MIDDLE_RIGHT: (1 / 3, 0.0),
    FramingCell.BOTTOM_LEFT: (-1 / 3, -1 / 3),
    FramingCell.BOTTOM_CENTER: (0.0, -1 / 3),
    FramingCell.BOTTOM_RIGHT: (1 / 3, -1 / 3),
}

_SHOTS = list(ShotType)
_SIDES = list(Side)
_ELEVATIONS = list(Elevation)
_CELLS = list(FramingCell)


@dataclass(frozen=True)
class ConstraintSet:
    static_location: bool = False
    static_distance: bool = False
    distance_radius: Optional[float] = None
    visibility_throughout: bool = False
    max_acceleration: Optional[float] = None

    def __post_init__(self):
        if self.static_location and self.static_distance:
            raise ValueError("static_location and static_distance are mutually exclusive")
        if self.distance_radius is not None and not self.distance_radius > 0:
            raise ValueError("distance_radius must be positive")
        if self.max_acceleration is not None and not self.max_acceleration > 0:
            raise ValueError("max_acceleration must be positive")


@dataclass(frozen=True)
class SimInstruction:
    """Compiled plan. ``focus`` holds the subject-local ROI centers of the
    start and end shots; the simulator blends them to get the point the
    camera frames at each step."""

    start_pose: CameraPose
    end_pose: CameraPose
    interpolation: Interpolation
    alpha: float
    easing: Easing
    constraints: ConstraintSet
    frames: int
    focus: tuple = ((0.0, 0.0, 0.0), (0.0, 0.0, 0.0))

    def __post_init__(self):
        if int(self.frames) != self.frames or self.frames < 1:
            raise ValueError("frames must be a positive integer")
        if self.frames < 2 and self.start_pose != self.end_pose:
            raise ValueError("a moving instruction needs at least 2 frames")
        object.__setattr__(self, "interpolation", Interpolation(self.interpolation))
        object.__setattr__(self, "easing", Easing(self.easing))
        focus = np.asarray(self.focus, dtype=float)
        if focus.shape != (2, 3):
            raise ValueError("focus must hold two 3-vectors")
        object.__setattr__(self, "focus", tuple(tuple(float(v) for v in row) for row in focus))


def shot_params(shot: ShotType) -> ShotParams:
    return SHOT_TABLE[ShotType(shot)]


def roi_from_boxes(abox: BoundingBox, vbox: BoundingBox, params: ShotParams) -> RoiBox:
    """Blend the attention and volume boxes by the shot factor, then scale."""
    if not np.allclose(abox.axes_array(), vbox.axes_array(), atol=1e-9):
        raise ValueError("ABox and VBox must share axes")
    f = params.interp_factor
    center = (1 - f) * np.array(abox.center) + f * np.array(vbox.center)
    half = ((1 - f) * np.array(abox.half_extents) + f * np.array(vbox.half_extents)) * params.scale
    return BoundingBox(center, half, abox.axes)


def fit_distance(roi: RoiBox, fov: float) -> float:
    half_height = roi.half_extents[2]
    if not half_height > 1e-9:
        raise FramingError("degenerate ROI: zero vertical extent")
    return half_height / math.tan(fov / 2)


def macro_align(angle: CameraAngleSpec, roi: RoiBox, subject: SubjectState, fov: float,
                config: Optional[Config] = None) -> CameraPose:
    """Place the camera on a sphere about the ROI center and look at it."""
    config = config or Config()
    if not 0 < fov < math.pi:
        raise ValueError("fov must lie in (0, pi)")
    radius = fit_distance(roi, fov)
    polar = config.polar(angle.elevation)
    azimuth = math.radians(config.sector_deg) * _SIDES.index(angle.side)
    forward, right, up = subject.facing_array()
    horizontal = math.cos(azimuth) * forward - math.sin(azimuth) * right
    direction = math.sin(polar) * horizontal + math.cos(polar) * up
    position = np.array(roi.center) + radius * direction
    return look_at(position, roi.center, fov)


def _framing_fov(distance: float, half_height: float, ndc, aspect: float) -> float:
    """FOV at which the ROI keeps its macro-stage size when framed off-center."""
    ratio = half_height / distance
    q = (ndc[0] * aspect) ** 2 + ndc[1] ** 2
    denom = 1.0 - ratio * ratio * q
    if denom <= 0:
        raise FramingError("ROI too large to frame at this cell")
    return 2.0 * math.atan(ratio / math.sqrt(denom))


def frame_from(position, roi: RoiBox, cell: FramingCell, roll: float = 0.0,
               pitch_hint: Optional[float] = None, config: Optional[Config] = None) -> CameraPose:
    """Orientation and FOV that frame ``roi`` at ``cell`` from a fixed position."""
    config = config or Config()
    ndc = CELL_NDC[FramingCell(cell)]
    center = np.array(roi.center)
    distance = float(np.linalg.norm(center - np.asarray(position, float)))
    fov = _framing_fov(distance, roi.half_extents[2], ndc, config.aspect)
    yaw, pitch = aim_at_ndc(position, center, ndc, fov, roll, config.aspect, pitch_hint)
    return CameraPose(position, (yaw, pitch, roll), fov)


def micro_align(pose: CameraPose, roi: RoiBox, cell: FramingCell,
                config: Optional[Config] = None) -> CameraPose:
    """Put the ROI center on a rule-of-thirds cell.

    Rotation is tried first; past the orientation budget the camera is
    shifted in its image plane instead. FOV is then set so the ROI keeps
    the vertical size it had after macro alignment.
    """
    config = config or Config()
    cell = FramingCell(cell)
    target = CELL_NDC[cell]
    center = np.array(roi.center)
    _, depth = project_pose(pose, center, config.aspect)
    if depth <= 0:
        raise FramingError("ROI center is behind the camera")

    rotated = frame_from(pose.position, roi, cell, pose.roll, pose.pitch, config)
    if rotation_angle(pose.orientation, rotated.orientation) <= config.orientation_budget:
        result = rotated
    else:
        basis = camera_basis(pose.orientation)
        rel = center - np.array(pose.position)
        x, y = rel @ basis[0], rel @ basis[1]
        half = roi.half_extents[2] / depth
        fov = 2.0 * math.atan(half)
        want_x = target[0] * config.aspect * half * depth
        want_y = target[1] * half * depth
        shift = (x - want_x) * basis[0] + (y - want_y) * basis[1]
        result = CameraPose(np.array(pose.position) + shift, pose.orientation, fov)

    ndc, depth = project_pose(result, center, config.aspect)
    residual = float(np.max(np.abs(ndc - np.array(target)))) if depth > 0 else float("inf")
    if residual > config.ndc_tolerance:
        err = FramingError(f"framing residual {residual:.4g} exceeds tolerance")
        err.residual = residual
        raise err
    return result


def constraints_for_movement(kind: MovementKind, a_max: float = 0.05,
                             radius: Optional[float] = None) -> ConstraintSet:
    kind = MovementKind(kind)
    if kind in (MovementKind.PAN, MovementKind.TILT):
        return ConstraintSet(static_location=True, max_acceleration=a_max)
    if kind == MovementKind.ORBIT:
        return ConstraintSet(static_distance=True, distance_radius=radius,
                             visibility_throughout=True, max_acceleration=a_max)
    if kind == MovementKind.STATIC:
        return ConstraintSet(max_acceleration=a_max)
    return ConstraintSet(visibility_throughout=True, max_acceleration=a_max)


def _within(items: list, value, reach: int, wrap: bool) -> list:
    i = items.index(value)
    n = len(items)
    if wrap:
        return [items[(i + d) % n] for d in range(-reach, reach + 1)]
    return [items[j] for j in range(max(0, i - reach), min(n, i + reach + 1))]


def plausible_ends(init: EndpointSpec, kind: MovementKind) -> list:
    """Candidate end endpoints for a shot whose end was left unspecified."""
    shots = _within(_SHOTS, init.shot, 1, wrap=False)
    sides = _within(_SIDES, init.angle.side, 2, wrap=True)
    elevations = _within(_ELEVATIONS, init.angle.elevation, 1, wrap=False)
    shot_i = _SHOTS.index(init.shot)
    same_col = {c for c in _CELLS if c.value.split("_")[-1] == init.framing.value.split("_")[-1]}

    def keep(shot, elev, side, cell) -> bool:
        if kind == MovementKind.ORBIT:
            return shot == init.shot and elev == init.angle.elevation and side != init.angle.side and cell == init.framing
        if kind == MovementKind.PAN:
            return shot == init.shot and elev == init.angle.elevation and side == init.angle.side and cell != init.framing
        if kind == MovementKind.TILT:
            return (shot == init.shot and elev == init.angle.elevation and side == init.angle.side
                    and cell != init.framing and cell in same_col)
        if kind == MovementKind.PUSH_IN:
            return _SHOTS.index(shot) == max(shot_i - 1, 0) and elev == init.angle.elevation and cell == init.framing
        if kind == MovementKind.PULL_OUT:
            return _SHOTS.index(shot) == min(shot_i + 1, len(_SHOTS) - 1) and elev == init.angle.elevation and cell == init.framing
        if kind == MovementKind.CRANE:
            return shot == init.shot and elev != init.angle.elevation and side == init.angle.side and cell == init.framing
        return cell == init.framing

    out = []
    for shot in shots:
        for elev in elevations:
            for side in dict.fromkeys(sides):
                for cell in _CELLS:
                    if keep(shot, elev, side, cell):
                        out.append(EndpointSpec(shot, CameraAngleSpec(elev, side), cell))
    if not out:
        out.append(init)
    return out


def endpoint_roi(ep: EndpointSpec, state: SubjectState, abox: BoundingBox, vbox: BoundingBox) -> RoiBox:
    return roi_from_boxes(abox.placed(state), vbox.placed(state), shot_params(ep.shot))


def focus_offset(ep: EndpointSpec, abox: BoundingBox, vbox: BoundingBox) -> tuple:
    f = shot_params(ep.shot).interp_factor
    return tuple((1 - f) * np.array(abox.center) + f * np.array(vbox.center))


def align_endpoint(ep: EndpointSpec, state: SubjectState, abox: BoundingBox, vbox: BoundingBox,
                   config: Config) -> CameraPose:
    roi = endpoint_roi(ep, state, abox, vbox)
    macro = macro_align(ep.angle, roi, state, config.fov, config)
    return micro_align(macro, roi, ep.framing, config)


def compile_scd(scd: ScdRecord, subject: SubjectTrajectory, abox: Optional[BoundingBox] = None,
                vbox: Optional[BoundingBox] = None, config: Optional[Config] = None,
                seed: int = 0) -> SimInstruction:
    """Compile one description against a subject trajectory.

    ``abox`` and ``vbox`` are subject-local; by default they are derived
    from the subject's dimensions at frame 0. The result depends only on
    the arguments (``seed`` drives the choice of an unspecified end).
    """
    problems = validate_scd(scd)
    if problems:
        raise ScdError("; ".join(problems))
    config = config or Config()
    first, last = subject[0], subject[len(subject) - 1]
    abox = abox or first.attention_box()
    vbox = vbox or first.volume_box()
    movement = scd.movement
    kind = movement.kind
    frames = movement.duration_frames

    start = align_endpoint(scd.init, first, abox, vbox, config)
    focus_start = focus_offset(scd.init, abox, vbox)

    if kind == MovementKind.STATIC:
        end_spec, end = scd.init, start
    else:
        end_spec = scd.end
        if end_spec is None:
            rng = np.random.default_rng(seed)
            candidates = plausible_ends(scd.init, kind)
            end_spec = candidates[int(rng.integers(len(candidates)))]
        if kind in (MovementKind.PAN, MovementKind.TILT):
            roi = endpoint_roi(end_spec, last, abox, vbox)
            end = frame_from(start.position, roi, end_spec.framing, start.roll, start.pitch, config)
        else:
            end = align_endpoint(end_spec, last, abox, vbox, config)
    focus_end = focus_offset(end_spec, abox, vbox)

    radius = None
    if kind == MovementKind.ORBIT:
        focus0 = subject.local_to_world(focus_start)[0]
        radius = float(np.linalg.norm(np.array(start.position) - focus0))
    interpolation = (Interpolation.SUBJECT_AWARE if kind in (MovementKind.ORBIT, MovementKind.TRACK)
                     else Interpolation.LINEAR)
    return SimInstruction(
        start_pose=start,
        end_pose=end,
        interpolation=interpolation,
        alpha=config.alpha,
        easing=movement.easing,
        constraints=constraints_for_movement(kind, config.a_max, radius),
        frames=frames,
        focus=(focus_start, focus_end),
    )


class ShotCompiler(BaseEstimator, TransformerMixin):
    """Transformer view of :func:`compile_scd`.

    ``fit`` records the subject trajectory and boxes; ``transform`` maps an
    iterable of descriptions (records or DSL lines) to instructions. Each
    row gets its own seed derived from ``random_state`` and its index.
    """

    def __init__(self, config: Optional[Config] = None, random_state: int = 0):
        self.config = config
        self.random_state = random_state

    def fit(self, subject: SubjectTrajectory, y=None, abox: Optional[BoundingBox] = None,
            vbox: Optional[BoundingBox] = None):
        if not isinstance(subject, SubjectTrajectory):
            raise TypeError("fit expects a SubjectTrajectory")
        self.subject_ = subject
        self.abox_ = abox or subject[0].attention_box()
        self.vbox_ = vbox or subject[0].volume_box()
        return self

    def transform(self, X) -> list:
        if not hasattr(self, "subject_"):
            from sklearn.exceptions import NotFittedError

            raise NotFittedError("ShotCompiler is not fitted yet; call fit with a subject trajectory")
        out = []
        for i, scd in enumerate(X):
            if isinstance(scd, str):
                scd = parse_scd(scd)
            seed = int(np.random.SeedSequence([self.random_state, i]).generate_state(1)[0])
            out.append(compile_scd(scd, self.subject_, self.abox_, self.vbox_, self.config, seed))
        return out
