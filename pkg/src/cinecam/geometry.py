"""Pinhole camera helpers shared by the compiler and the simulator."""
from __future__ import annotations

import math

import numpy as np

from .pose import CameraPose, wrap_angle


class FramingError(ValueError):
    """A target point cannot be framed as requested."""


def camera_basis(orientation) -> np.ndarray:
    """Rows are (right, up, forward) in world coordinates. Vectorised over
    leading dimensions of ``orientation``."""
    rot = np.asarray(orientation, dtype=float)
    yaw, pitch, roll = rot[..., 0], rot[..., 1], rot[..., 2]
    cy, sy = np.cos(yaw), np.sin(yaw)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cr, sr = np.cos(roll), np.sin(roll)
    zero = np.zeros_like(yaw)
    forward = np.stack([cp * cy, -cp * sy, -sp], axis=-1)
    right0 = np.stack([-sy, -cy, zero], axis=-1)
    up0 = np.stack([sp * cy, -sp * sy, cp], axis=-1)
    right = cr[..., None] * right0 + sr[..., None] * up0
    up = -sr[..., None] * right0 + cr[..., None] * up0
    return np.stack([right, up, forward], axis=-2)


def forward_vector(orientation) -> np.ndarray:
    return camera_basis(orientation)[..., 2, :]


def direction_angles(direction) -> tuple:
    """(yaw, pitch) that point the camera forward axis along ``direction``."""
    d = np.asarray(direction, dtype=float)
    horiz = math.hypot(d[0], d[1])
    if horiz == 0.0 and d[2] == 0.0:
        raise FramingError("cannot aim along a zero vector")
    return math.atan2(-d[1], d[0]), math.atan2(-d[2], horiz)


def look_at(position, target, fov: float, roll: float = 0.0) -> CameraPose:
    yaw, pitch = direction_angles(np.asarray(target, float) - np.asarray(position, float))
    return CameraPose(position, (yaw, pitch, roll), fov)


def project(position, orientation, fov, points, aspect: float = 1.0):
    """Project world points into normalized device coordinates.

    Returns ``(ndc, depth)`` where ``ndc[..., 0]`` grows to the right and
    ``ndc[..., 1]`` grows upward; the visible frame is ``|ndc| <= 1``.
    Broadcasts over matching leading dimensions.
    """
    basis = camera_basis(orientation)
    rel = np.asarray(points, float) - np.asarray(position, float)
    cam = np.einsum("...ij,...j->...i", basis, rel)
    depth = cam[..., 2]
    half = np.tan(np.asarray(fov, float) / 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = cam[..., 0] / (depth * half * aspect)
        y = cam[..., 1] / (depth * half)
    return np.stack([x, y], axis=-1), depth


def project_pose(pose: CameraPose, point, aspect: float = 1.0):
    ndc, depth = project(pose.position, pose.orientation, pose.fov, point, aspect)
    return ndc, float(depth)


def in_frustum(ndc, depth) -> np.ndarray:
    ndc = np.asarray(ndc)
    return (np.asarray(depth) > 0) & np.all(np.abs(ndc) <= 1.0, axis=-1)


def aim_at_ndc(position, target, ndc, fov: float, roll: float = 0.0,
               aspect: float = 1.0, pitch_hint: float | None = None) -> tuple:
    """Exact (yaw, pitch) placing ``target`` at ``ndc`` for a camera at ``position``.

    Roll is kept fixed. When two pitch solutions exist the one closest to
    ``pitch_hint`` (default: the direct look-at pitch) is returned.
    """
    d = np.asarray(target, float) - np.asarray(position, float)
    dist = float(np.linalg.norm(d))
    if dist == 0.0:
        raise FramingError("target coincides with the camera")
    d = d / dist
    half = math.tan(fov / 2)
    # desired direction in the rolled camera frame, then undo the roll
    xr, yr = ndc[0] * half * aspect, ndc[1] * half
    cr, sr = math.cos(roll), math.sin(roll)
    wr, wu, wf = cr * xr - sr * yr, sr * xr + cr * yr, 1.0
    norm = math.sqrt(wr * wr + wu * wu + wf * wf)
    wr, wu, wf = wr / norm, wu / norm, wf / norm

    # vertical component of d fixes pitch: wu*cos(p) - wf*sin(p) = d_z
    amp = math.hypot(wu, wf)
    if abs(d[2]) > amp + 1e-12:
        raise FramingError("requested framing is unreachable by rotation")
    delta = math.atan2(wf, wu)
    base = math.acos(max(-1.0, min(1.0, d[2] / amp)))
    candidates = [base - delta, -base - delta]
    if pitch_hint is None:
        pitch_hint = direction_angles(d)[1]
    valid = [p for p in (float(wrap_angle(c)) for c in candidates) if abs(p) <= math.pi / 2]
    if not valid:
        raise FramingError("no pitch solution within [-pi/2, pi/2]")
    pitch = min(valid, key=lambda p: abs(wrap_angle(p - pitch_hint)))

    a = wu * math.sin(pitch) + wf * math.cos(pitch)
    heading = math.atan2(-d[1], d[0])
    yaw = float(wrap_angle(heading - math.atan2(wr, a)))
    return yaw, pitch


def rotation_angle(orient_a, orient_b) -> float:
    """Geodesic angle between two camera orientations."""
    ra = camera_basis(orient_a)
    rb = camera_basis(orient_b)
    cos_angle = (np.trace(ra @ rb.T) - 1.0) / 2.0
    return float(math.acos(max(-1.0, min(1.0, cos_angle))))
