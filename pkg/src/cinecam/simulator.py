"""Turn compiled instructions into camera trajectories.

Frames are produced by eased interpolation between the endpoint poses and
then pushed through the constraint passes in a fixed order: static
location, static distance, visibility, max acceleration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .compiler import ConstraintSet, Interpolation, SimInstruction
from .config import Config
from .geometry import FramingError, aim_at_ndc, project
from .pose import CameraPose, CameraTrajectory, SubjectTrajectory, wrap_angle
from .scl import Easing

CONSTRAINT_ORDER = ("static_location", "static_distance", "visibility", "max_acceleration")
VISIBLE_TARGET = 0.9
ACCEL_MARGIN = 1e-4
ACCEL_STOP = 1e-5


class InfeasibleError(RuntimeError):
    """A constraint pass could not be satisfied."""

    def __init__(self, constraint: str, message: str):
        super().__init__(f"{constraint}: {message}")
        self.constraint = constraint


def ease(t, kind: Easing = Easing.LINEAR):
    """Cubic easing curves on [0, 1]. Accepts scalars or arrays."""
    kind = Easing(kind)
    arr = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise ValueError("ease expects t in [0, 1]")
    if kind == Easing.LINEAR:
        out = arr.copy()
    elif kind == Easing.EASE_IN:
        out = arr ** 3
    elif kind == Easing.EASE_OUT:
        out = 1 - (1 - arr) ** 3
    else:
        out = np.where(arr < 0.5, 4 * arr ** 3, 1 - (-2 * arr + 2) ** 3 / 2)
    return float(out) if out.ndim == 0 else out


def _blend_angles(a0, a1, t):
    """Shortest-path blend of Euler components; ``t`` broadcasts as (N, 1)."""
    delta = wrap_angle(np.asarray(a1, float) - np.asarray(a0, float))
    return wrap_angle(np.asarray(a0, float) + t * delta)


def linear_interp(p0: CameraPose, p1: CameraPose, t: float) -> CameraPose:
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    if t == 0.0:
        return p0
    if t == 1.0:
        return p1
    pos = p0.pos_array() + t * (p1.pos_array() - p0.pos_array())
    rot = _blend_angles(p0.orientation, p1.orientation, t)
    return CameraPose(pos, rot, p0.fov + t * (p1.fov - p0.fov))


def subject_aware_position(p0, p1, subject_start, subject_end, alpha: float, t):
    """P0 + t(P1 - P0) + alpha (1 - t) t (d0 - d1), d = subject - camera."""
    p0 = np.asarray(p0, float)
    p1 = np.asarray(p1, float)
    d0 = np.asarray(subject_start, float) - p0
    d1 = np.asarray(subject_end, float) - p1
    t = np.asarray(t, float)[..., None] if np.ndim(t) else float(t)
    return p0 + t * (p1 - p0) + alpha * (1 - t) * t * (d0 - d1)


def subject_aware_interp(p0: CameraPose, p1: CameraPose, subject_start, subject_end,
                         alpha: float, t: float, aspect: float = 1.0) -> CameraPose:
    """Curved blend whose orientation keeps the subject where the endpoints had it.

    The subject point at time ``t`` is taken on the straight line between
    ``subject_start`` and ``subject_end``.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    pos = subject_aware_position(p0.position, p1.position, subject_start, subject_end, alpha, t)
    target = (1 - t) * np.asarray(subject_start, float) + t * np.asarray(subject_end, float)
    fov = (1 - t) * p0.fov + t * p1.fov
    rot = _aimed_orientation(p0, p1, subject_start, subject_end, pos[None], target[None],
                             np.array([t]), np.array([fov]), aspect)[0]
    return CameraPose(pos, rot, fov)


def _aimed_orientation(p0, p1, focus_start, focus_end, positions, focus, t, fovs, aspect):
    """Per-frame orientation that keeps ``focus`` at the NDC location blended
    between where the two endpoint poses see it."""
    ndc0, z0 = project(p0.position, p0.orientation, p0.fov, focus_start, aspect)
    ndc1, z1 = project(p1.position, p1.orientation, p1.fov, focus_end, aspect)
    fallback = _blend_angles(p0.orientation, p1.orientation, t[:, None])
    if z0 <= 0 or z1 <= 0:
        return fallback
    out = fallback.copy()
    roll = _blend_angles(p0.roll, p1.roll, t)
    for i in range(len(positions)):
        ndc = (1 - t[i]) * ndc0 + t[i] * ndc1
        # near the poles the blended target can be out of reach; pull it
        # toward the image center rather than dropping to the Euler blend
        for shrink in (1.0, 0.75, 0.5, 0.25, 0.0):
            try:
                yaw, pitch = aim_at_ndc(positions[i], focus[i], shrink * ndc, fovs[i], float(roll[i]),
                                        aspect, pitch_hint=float(fallback[i, 1]))
            except FramingError:
                continue
            out[i] = (yaw, pitch, roll[i])
            break
    return out


def focus_points(instr: SimInstruction, subject: SubjectTrajectory, t=None) -> np.ndarray:
    """World position of the framed point at every frame."""
    if t is None:
        t = _frame_params(instr)
    start, end = (np.array(f) for f in instr.focus)
    local = (1 - t)[:, None] * start + t[:, None] * end
    return subject.centers + np.einsum("nj,njk->nk", local, subject.facing)


def _frame_params(instr: SimInstruction) -> np.ndarray:
    n = instr.frames
    if n == 1:
        return np.zeros(1)
    return ease(np.arange(n) / (n - 1), instr.easing)


def interpolate(instr: SimInstruction, subject: SubjectTrajectory, config: Optional[Config] = None,
                frame_rate: Optional[float] = None) -> CameraTrajectory:
    """Raw eased interpolation, before any constraint pass."""
    config = config or Config()
    n = instr.frames
    if len(subject) != n:
        raise ValueError(f"subject has {len(subject)} frames, instruction needs {n}")
    t = _frame_params(instr)
    p0, p1 = instr.start_pose, instr.end_pose
    focus = focus_points(instr, subject, t)
    fovs = p0.fov + t * (p1.fov - p0.fov)
    if instr.interpolation == Interpolation.SUBJECT_AWARE:
        positions = subject_aware_position(p0.position, p1.position, focus[0], focus[-1], instr.alpha, t)
        orientations = _aimed_orientation(p0, p1, focus[0], focus[-1], positions, focus, t, fovs, config.aspect)
    else:
        positions = p0.pos_array() + t[:, None] * (p1.pos_array() - p0.pos_array())
        orientations = _blend_angles(p0.orientation, p1.orientation, t[:, None])
    positions[0], orientations[0], fovs[0] = p0.position, p0.orientation, p0.fov
    if n > 1:
        positions[-1], orientations[-1], fovs[-1] = p1.position, p1.orientation, p1.fov
    return CameraTrajectory(positions, orientations, fovs, frame_rate or config.frame_rate)


def second_differences(positions) -> np.ndarray:
    p = np.asarray(positions, float)
    if len(p) < 3:
        return np.zeros(0)
    return np.linalg.norm(p[2:] - 2 * p[1:-1] + p[:-2], axis=1)


def _sphere_project(positions, centers, radius, reference=None):
    rel = positions - centers
    norm = np.linalg.norm(rel, axis=1)
    if np.all(norm > 1e-9):
        return centers + rel * (radius / norm)[:, None]
    out = positions.copy()
    prev = None if reference is None else reference
    for i in range(len(out)):
        if norm[i] > 1e-9:
            prev = rel[i] / norm[i]
        elif prev is None:
            raise InfeasibleError("static_distance", "camera coincides with the subject")
        out[i] = centers[i] + radius * prev
    return out


def _retime(samples, lam: float) -> np.ndarray:
    """Resample a polyline so frame ``i`` sits at arc fraction
    ``(1 - lam) * original + lam * i / (n - 1)``."""
    seg = np.linalg.norm(np.diff(samples, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    if arc[-1] == 0.0:
        return samples.copy()
    arc /= arc[-1]
    uniform = np.linspace(0.0, 1.0, len(samples))
    want = (1 - lam) * arc + lam * uniform
    return np.stack([np.interp(want, arc, samples[:, k]) for k in range(samples.shape[1])], axis=1)


def _smooth_timing(positions, a_max, sphere=None, steps: int = 30):
    """Smallest retiming toward constant speed that meets the limit.

    On a sphere the retiming acts on unit directions from the focus so
    radius is preserved. Returns the full retiming when none suffices.
    """
    target = a_max * (1 - ACCEL_MARGIN)
    if sphere is None:
        def build(lam):
            return _retime(positions, lam)
    else:
        centers, radius = sphere
        dirs = (positions - centers) / radius

        def build(lam):
            d = _retime(dirs, lam)
            d /= np.linalg.norm(d, axis=1)[:, None]
            return centers + radius * d

    best = build(1.0)
    if second_differences(best).max() > target:
        return best
    lo, hi = 0.0, 1.0
    for _ in range(steps):
        mid = (lo + hi) / 2
        trial = build(mid)
        if second_differences(trial).max() <= target:
            hi, best = mid, trial
        else:
            lo = mid
    return best


def _limit_acceleration(positions, a_max, sphere=None, max_sweeps=4000):
    """Cyclic projections onto the sets ||x[i+1] - 2x[i] + x[i-1]|| <= a.

    Endpoints stay fixed. A retiming pass runs first; the projections then
    clean up what retiming alone cannot fix. Constraints three apart share
    no samples, so each residue class is projected at once. With
    ``sphere=(centers, radius)`` interior samples are also pulled back to
    the sphere after every sweep.
    """
    x = np.array(positions, dtype=float)
    n = len(x)
    if n < 3:
        return x
    x = _smooth_timing(x, a_max, sphere)
    if second_differences(x).max() <= a_max * (1 - ACCEL_STOP):
        return x
    target = a_max * (1 - ACCEL_MARGIN)
    stop = a_max * (1 - ACCEL_STOP)
    classes = [np.arange(1 + r, n - 1, 3) for r in range(3)]
    for _ in range(max_sweeps):
        for idx in classes:
            if len(idx) == 0:
                continue
            dd = x[idx + 1] - 2 * x[idx] + x[idx - 1]
            norm = np.linalg.norm(dd, axis=1)
            bad = norm > target
            if not np.any(bad):
                continue
            idx, dd, norm = idx[bad], dd[bad], norm[bad]
            s = dd * (1 - target / norm)[:, None]
            left_free = (idx - 1 >= 1)[:, None]
            right_free = (idx + 1 <= n - 2)[:, None]
            w = 4.0 + left_free + right_free
            x[idx] += 2 * s / w
            x[idx - 1] -= np.where(left_free, s / w, 0.0)
            x[idx + 1] -= np.where(right_free, s / w, 0.0)
        off_sphere = 0.0
        if sphere is not None:
            centers, radius = sphere
            inner = _sphere_project(x[1:-1], centers[1:-1], radius)
            off_sphere = float(np.max(np.abs(inner - x[1:-1]))) if n > 2 else 0.0
            x[1:-1] = inner
        if second_differences(x).max() <= stop and off_sphere <= a_max * 1e-7:
            return x
    raise InfeasibleError("max_acceleration", f"not satisfiable within {max_sweeps} sweeps")


def enforce_constraint(traj: CameraTrajectory, subject: SubjectTrajectory, constraint: str,
                       constraints: Optional[ConstraintSet] = None, focus=None,
                       aspect: float = 1.0) -> CameraTrajectory:
    """Apply one constraint pass.

    ``focus`` gives the world point to keep in view / at fixed distance for
    every frame (default: the subject centers). Parameters of the pass come
    from ``constraints`` (radius, a_max).
    """
    if len(traj) != len(subject):
        raise ValueError("trajectory and subject lengths differ")
    if constraint not in CONSTRAINT_ORDER:
        raise ValueError(f"unknown constraint {constraint!r}")
    constraints = constraints or ConstraintSet()
    focus = subject.centers if focus is None else np.asarray(focus, float)
    pos = traj.positions

    if constraint == "static_location":
        if np.all(pos == pos[0]):
            return traj
        return traj.with_positions(np.repeat(pos[:1], len(pos), axis=0))

    if constraint == "static_distance":
        radius = constraints.distance_radius
        if radius is None:
            radius = float(np.linalg.norm(pos[0] - focus[0]))
        if not radius > 0:
            raise InfeasibleError("static_distance", "zero radius")
        dist = np.linalg.norm(pos - focus, axis=1)
        if np.all(np.abs(dist - radius) <= 1e-12 * max(radius, 1.0)):
            return traj
        return traj.with_positions(_sphere_project(pos, focus, radius))

    if constraint == "visibility":
        ndc, depth = project(pos, traj.orientations, traj.fovs, focus, aspect)
        visible = (depth > 0) & np.all(np.abs(ndc) <= 1.0, axis=1)
        if np.all(visible):
            return traj
        rot = np.array(traj.orientations)
        for i in np.flatnonzero(~visible):
            targets = [np.zeros(2)]
            if depth[i] > 0:
                targets.insert(0, np.clip(ndc[i], -VISIBLE_TARGET, VISIBLE_TARGET))
            for target in targets:
                try:
                    rot[i, :2] = aim_at_ndc(pos[i], focus[i], target, traj.fovs[i], rot[i, 2], aspect)
                    break
                except FramingError as exc:
                    error = exc
            else:
                raise InfeasibleError("visibility", f"frame {i}: {error}")
        return traj.with_orientations(rot)

    a_max = constraints.max_acceleration
    if a_max is None:
        return traj
    if len(pos) < 3 or second_differences(pos).max() <= a_max:
        return traj
    sphere = None
    if constraints.static_distance:
        radius = constraints.distance_radius or float(np.linalg.norm(pos[0] - focus[0]))
        sphere = (focus, radius)
    return traj.with_positions(_limit_acceleration(pos, a_max, sphere))


def _active(constraints: ConstraintSet) -> list:
    flags = {
        "static_location": constraints.static_location,
        "static_distance": constraints.static_distance,
        "visibility": constraints.visibility_throughout,
        "max_acceleration": constraints.max_acceleration is not None,
    }
    return [name for name in CONSTRAINT_ORDER if flags[name]]


def check_constraints(traj: CameraTrajectory, subject: SubjectTrajectory, instr: SimInstruction,
                      aspect: float = 1.0) -> dict:
    """Residuals of every active constraint (zero or below limit when satisfied)."""
    c = instr.constraints
    focus = focus_points(instr, subject)
    pos = traj.positions
    report = {}
    if c.static_location:
        report["static_location"] = float(np.max(np.linalg.norm(pos - pos[0], axis=1)))
    if c.static_distance:
        radius = c.distance_radius or float(np.linalg.norm(pos[0] - focus[0]))
        report["static_distance"] = float(np.max(np.abs(np.linalg.norm(pos - focus, axis=1) - radius)))
    if c.visibility_throughout:
        ndc, depth = project(pos, traj.orientations, traj.fovs, focus, aspect)
        visible = (depth > 0) & np.all(np.abs(ndc) <= 1.0, axis=1)
        report["visibility"] = float(np.mean(visible))
    if c.max_acceleration is not None:
        dd = second_differences(pos)
        report["max_acceleration"] = float(dd.max()) if len(dd) else 0.0
    return report


def _violations(report: dict, instr: SimInstruction) -> list:
    bad = []
    if report.get("static_location", 0.0) > 1e-9:
        bad.append("static_location")
    if report.get("static_distance", 0.0) > 1e-3:
        bad.append("static_distance")
    if report.get("visibility", 1.0) < 1.0:
        bad.append("visibility")
    a_max = instr.constraints.max_acceleration
    if a_max is not None and report.get("max_acceleration", 0.0) > a_max + 1e-9:
        bad.append("max_acceleration")
    return bad


def simulate(instr: SimInstruction, subject: SubjectTrajectory, config: Optional[Config] = None,
             frame_rate: Optional[float] = None) -> CameraTrajectory:
    """Interpolate, apply the active constraint passes in order, then re-run
    the geometric passes once and verify everything."""
    config = config or Config()
    traj = interpolate(instr, subject, config, frame_rate)
    focus = focus_points(instr, subject)
    active = _active(instr.constraints)
    for name in active:
        traj = enforce_constraint(traj, subject, name, instr.constraints, focus, config.aspect)
    if "max_acceleration" in active:
        for name in active:
            if name != "max_acceleration":
                traj = enforce_constraint(traj, subject, name, instr.constraints, focus, config.aspect)
    bad = _violations(check_constraints(traj, subject, instr, config.aspect), instr)
    if bad:
        raise InfeasibleError(bad[0], "constraint violated after the final re-check")
    return traj


class CameraSimulator(BaseEstimator, TransformerMixin):
    """Stateless transformer: ``transform`` maps (instruction, subject) pairs
    to camera trajectories."""

    def __init__(self, config: Optional[Config] = None):
        self.config = config

    def fit(self, X=None, y=None):
        return self

    def transform(self, X) -> list:
        return [simulate(instr, subject, self.config) for instr, subject in X]


class MotionKind(str, Enum):
    STATIONARY = "stationary"
    LINE_WALK = "line_walk"
    TURN_IN_PLACE = "turn_in_place"
    ARC_WALK = "arc_walk"


@dataclass(frozen=True)
class SubjectMotionModel:
    """Parametric subject motion.

    Recognised params: ``speed`` (m/frame), ``max_speed`` (m/frame),
    ``turn_rate`` (rad/frame), ``heading`` (rad), ``center`` (3-vector),
    ``dims`` (width, length, height). Missing values are drawn from
    ``seed``.
    """

    kind: MotionKind = MotionKind.STATIONARY
    params: dict = field(default_factory=dict)
    seed: int = 0


DEFAULT_DIMS = (0.5, 0.3, 1.7)


def _facing(heading: float) -> np.ndarray:
    c, s = math.cos(heading), math.sin(heading)
    return np.array([[c, s, 0.0], [s, -c, 0.0], [0.0, 0.0, 1.0]])


def generate_subject_motion(model: SubjectMotionModel, frames: int) -> SubjectTrajectory:
    if int(frames) != frames or frames < 1:
        raise ValueError("frames must be a positive integer")
    kind = MotionKind(model.kind)
    params = dict(model.params)
    known = {"speed", "max_speed", "turn_rate", "heading", "center", "dims"}
    unknown = set(params) - known
    if unknown:
        raise ValueError(f"unknown motion params: {sorted(unknown)}")
    rng = np.random.default_rng(model.seed)
    dims = np.asarray(params.get("dims", DEFAULT_DIMS), float)
    if dims.shape != (3,) or np.any(dims <= 0):
        raise ValueError("dims must be three positive numbers")
    center = np.asarray(params.get("center", (0.0, 0.0, dims[2] / 2)), float)
    heading = float(params["heading"]) if "heading" in params else float(rng.uniform(-math.pi, math.pi))
    max_speed = float(params.get("max_speed", 0.04))
    if max_speed <= 0:
        raise ValueError("max_speed must be positive")
    speed = float(params["speed"]) if "speed" in params else float(rng.uniform(0.5, 1.0) * max_speed)
    if speed < 0 or speed > max_speed:
        raise ValueError("speed must lie in [0, max_speed]")
    if "turn_rate" in params:
        turn_rate = float(params["turn_rate"])
    else:
        turn_rate = float(rng.uniform(0.01, 0.05) * rng.choice([-1.0, 1.0]))

    n = int(frames)
    headings = np.full(n, heading)
    centers = np.repeat(center[None], n, axis=0)
    if kind in (MotionKind.TURN_IN_PLACE, MotionKind.ARC_WALK):
        headings = heading + turn_rate * np.arange(n)
    if kind in (MotionKind.LINE_WALK, MotionKind.ARC_WALK):
        steps = speed * np.stack([np.cos(headings[:-1]), np.sin(headings[:-1]), np.zeros(n - 1)], axis=1)
        centers = center + np.vstack([np.zeros((1, 3)), np.cumsum(steps, axis=0)])
    facing = np.stack([_facing(h) for h in headings])
    return SubjectTrajectory(centers, np.repeat(dims[None], n, axis=0), facing)
