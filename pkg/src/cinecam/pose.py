"""Camera and subject value types plus the composite pose discrepancy.

Conventions used throughout the package:

* World frame is right-handed with +z up; positions are in meters.
* Camera orientation is an Euler triple ``(yaw, pitch, roll)`` in radians.
  At zero orientation the camera looks along +x with +z up. Positive yaw
  turns the view to the right (clockwise seen from above), positive pitch
  tilts the view downward, positive roll turns the image clockwise.
* ``fov`` is the vertical field of view in radians.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

TAN_CLAMP = math.pi / 2 - 1e-3
DEFAULT_EPSILON = 1.0
FACING_TOL = 1e-6


def wrap_angle(theta):
    """Map angles to (-pi, pi]. Works on scalars and arrays."""
    arr = np.asarray(theta, dtype=float)
    folded = np.pi - np.mod(np.pi - arr, 2 * np.pi)
    folded = np.where(folded <= -np.pi, np.pi, folded)
    # in-range values pass through untouched so wrapping is idempotent bit for bit
    wrapped = np.where((arr > -np.pi) & (arr <= np.pi), arr, folded)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def _vec3(values, name: str) -> tuple:
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must have 3 components, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return tuple(float(v) for v in arr)


def _orthonormal(axes, name: str) -> tuple:
    mat = np.asarray(axes, dtype=float)
    if mat.shape != (3, 3):
        raise ValueError(f"{name} must be three 3-vectors")
    if not np.allclose(mat @ mat.T, np.eye(3), atol=FACING_TOL):
        raise ValueError(f"{name} must be orthonormal within {FACING_TOL}")
    return tuple(tuple(float(v) for v in row) for row in mat)


@dataclass(frozen=True)
class CameraPose:
    position: tuple
    orientation: tuple
    fov: float

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3(self.position, "position"))
        rot = _vec3(self.orientation, "orientation")
        object.__setattr__(self, "orientation", tuple(wrap_angle(a) for a in rot))
        fov = float(self.fov)
        if not 0.0 < fov < math.pi:
            raise ValueError(f"fov must lie in (0, pi), got {fov}")
        object.__setattr__(self, "fov", fov)

    @property
    def yaw(self) -> float:
        return self.orientation[0]

    @property
    def pitch(self) -> float:
        return self.orientation[1]

    @property
    def roll(self) -> float:
        return self.orientation[2]

    def pos_array(self) -> np.ndarray:
        return np.array(self.position)

    def rot_array(self) -> np.ndarray:
        return np.array(self.orientation)

    def replace(self, **changes) -> "CameraPose":
        values = {"position": self.position, "orientation": self.orientation, "fov": self.fov}
        values.update(changes)
        return CameraPose(**values)


@dataclass(frozen=True)
class BoundingBox:
    """Oriented box. ``axes`` rows are (forward, right, up) of the subject."""

    center: tuple
    half_extents: tuple
    axes: tuple = ((1.0, 0.0, 0.0), (0.0, -1.0, 0.0), (0.0, 0.0, 1.0))

    def __post_init__(self):
        object.__setattr__(self, "center", _vec3(self.center, "center"))
        half = _vec3(self.half_extents, "half_extents")
        if min(half) <= 0:
            raise ValueError("half_extents must be positive")
        object.__setattr__(self, "half_extents", half)
        object.__setattr__(self, "axes", _orthonormal(self.axes, "axes"))

    def axes_array(self) -> np.ndarray:
        return np.array(self.axes)

    def corners(self) -> np.ndarray:
        signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)])
        return np.array(self.center) + (signs * np.array(self.half_extents)) @ self.axes_array()

    def placed(self, subject: "SubjectState") -> "BoundingBox":
        """Treat this box as subject-local and place it in the world."""
        facing = subject.facing_array()
        center = np.array(subject.center) + np.array(self.center) @ facing
        axes = self.axes_array() @ facing
        return BoundingBox(center, self.half_extents, axes)


@dataclass(frozen=True)
class SubjectState:
    """Volumetric subject sample. ``dims`` is (width, length, height);
    ``facing`` rows are (forward, right, up)."""

    center: tuple
    dims: tuple
    facing: tuple = ((1.0, 0.0, 0.0), (0.0, -1.0, 0.0), (0.0, 0.0, 1.0))

    def __post_init__(self):
        object.__setattr__(self, "center", _vec3(self.center, "center"))
        dims = _vec3(self.dims, "dims")
        if min(dims) <= 0:
            raise ValueError("dims must be strictly positive")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "facing", _orthonormal(self.facing, "facing"))

    def facing_array(self) -> np.ndarray:
        return np.array(self.facing)

    def volume_box(self) -> BoundingBox:
        """Subject-local box enclosing the whole subject (the VBox)."""
        width, length, height = self.dims
        return BoundingBox((0.0, 0.0, 0.0), (length / 2, width / 2, height / 2), np.eye(3))

    def attention_box(self) -> BoundingBox:
        """Subject-local head-sized box at the top of the volume (the ABox)."""
        width, length, height = self.dims
        head = 0.15 * height
        return BoundingBox(
            (0.0, 0.0, height / 2 - head / 2),
            (min(length, 0.25) / 2, min(width, 0.2) / 2, head / 2),
            np.eye(3),
        )


class CameraTrajectory:
    """Ordered camera samples stored column-wise as read-only arrays."""

    def __init__(self, positions, orientations, fovs, frame_rate: float = 30.0):
        positions = np.array(positions, dtype=float).reshape(-1, 3)
        orientations = wrap_angle(np.array(orientations, dtype=float).reshape(-1, 3))
        fovs = np.array(fovs, dtype=float).reshape(-1)
        n = len(positions)
        if n < 1:
            raise ValueError("trajectory needs at least one frame")
        if orientations.shape != (n, 3) or fovs.shape != (n,):
            raise ValueError("positions, orientations and fovs must have matching lengths")
        if not (np.all(np.isfinite(positions)) and np.all(np.isfinite(orientations))):
            raise ValueError("trajectory values must be finite")
        if np.any(fovs <= 0) or np.any(fovs >= math.pi):
            raise ValueError("fov must lie in (0, pi)")
        if not frame_rate > 0:
            raise ValueError("frame_rate must be positive")
        for arr in (positions, orientations, fovs):
            arr.flags.writeable = False
        self.positions = positions
        self.orientations = orientations
        self.fovs = fovs
        self.frame_rate = float(frame_rate)

    @classmethod
    def from_poses(cls, poses: Iterable[CameraPose], frame_rate: float = 30.0) -> "CameraTrajectory":
        poses = list(poses)
        if not poses:
            raise ValueError("trajectory needs at least one frame")
        return cls(
            [p.position for p in poses],
            [p.orientation for p in poses],
            [p.fov for p in poses],
            frame_rate,
        )

    def __len__(self) -> int:
        return len(self.positions)

    def __getitem__(self, i: int) -> CameraPose:
        return CameraPose(self.positions[i], self.orientations[i], self.fovs[i])

    @property
    def frames(self) -> list:
        return [self[i] for i in range(len(self))]

    def take(self, indices: Sequence[int]) -> "CameraTrajectory":
        idx = np.asarray(indices, dtype=int)
        return CameraTrajectory(self.positions[idx], self.orientations[idx], self.fovs[idx], self.frame_rate)

    def with_positions(self, positions) -> "CameraTrajectory":
        return CameraTrajectory(positions, self.orientations, self.fovs, self.frame_rate)

    def with_orientations(self, orientations) -> "CameraTrajectory":
        return CameraTrajectory(self.positions, orientations, self.fovs, self.frame_rate)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CameraTrajectory):
            return NotImplemented
        return (
            self.frame_rate == other.frame_rate
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.orientations, other.orientations)
            and np.array_equal(self.fovs, other.fovs)
        )

    def __repr__(self) -> str:
        return f"CameraTrajectory(frames={len(self)}, frame_rate={self.frame_rate})"


class SubjectTrajectory:
    """Ordered subject samples: centers (N, 3), dims (N, 3), facing (N, 3, 3)."""

    def __init__(self, centers, dims, facing):
        centers = np.array(centers, dtype=float).reshape(-1, 3)
        dims = np.array(dims, dtype=float).reshape(-1, 3)
        facing = np.array(facing, dtype=float).reshape(-1, 3, 3)
        n = len(centers)
        if n < 1:
            raise ValueError("subject trajectory needs at least one frame")
        if dims.shape != (n, 3) or facing.shape != (n, 3, 3):
            raise ValueError("centers, dims and facing must have matching lengths")
        if np.any(dims <= 0):
            raise ValueError("dims must be strictly positive")
        gram = np.einsum("nij,nkj->nik", facing, facing)
        if not np.allclose(gram, np.eye(3), atol=FACING_TOL):
            raise ValueError("facing vectors must be orthonormal")
        for arr in (centers, dims, facing):
            arr.flags.writeable = False
        self.centers = centers
        self.dims = dims
        self.facing = facing

    @classmethod
    def from_states(cls, states: Iterable[SubjectState]) -> "SubjectTrajectory":
        states = list(states)
        if not states:
            raise ValueError("subject trajectory needs at least one frame")
        return cls([s.center for s in states], [s.dims for s in states], [s.facing for s in states])

    @classmethod
    def constant(cls, state: SubjectState, frames: int) -> "SubjectTrajectory":
        return cls.from_states([state] * frames)

    def __len__(self) -> int:
        return len(self.centers)

    def __getitem__(self, i: int) -> SubjectState:
        return SubjectState(self.centers[i], self.dims[i], self.facing[i])

    @property
    def frames(self) -> list:
        return [self[i] for i in range(len(self))]

    def take(self, indices: Sequence[int]) -> "SubjectTrajectory":
        idx = np.asarray(indices, dtype=int)
        return SubjectTrajectory(self.centers[idx], self.dims[idx], self.facing[idx])

    def is_static(self) -> bool:
        return bool(
            np.all(self.centers == self.centers[0])
            and np.all(self.dims == self.dims[0])
            and np.all(self.facing == self.facing[0])
        )

    def local_to_world(self, offset) -> np.ndarray:
        """World positions (N, 3) of a subject-local point at every frame."""
        offset = np.asarray(offset, dtype=float)
        return self.centers + np.einsum("j,njk->nk", offset, self.facing)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SubjectTrajectory):
            return NotImplemented
        return (
            np.array_equal(self.centers, other.centers)
            and np.array_equal(self.dims, other.dims)
            and np.array_equal(self.facing, other.facing)
        )

    def __repr__(self) -> str:
        return f"SubjectTrajectory(frames={len(self)}, static={self.is_static()})"


@dataclass(frozen=True)
class DiscrepancyParams:
    epsilon: float = DEFAULT_EPSILON
    normalized: bool = True

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError("epsilon must be a positive finite number")

    @property
    def baseline(self) -> float:
        """Value of the discrepancy between identical poses, verbatim form."""
        return 3.0 * float(np.tan(min(math.pi / (4.0 + self.epsilon), TAN_CLAMP)))


def angle_direction(theta: float, axis_index: int) -> np.ndarray:
    """Unit vector obtained by rotating a reference vector about an axis.

    For axis ``i`` (1-based) the reference is the next canonical basis
    vector, so the inner product of two results on the same axis equals
    ``cos(a - b)``.
    """
    if axis_index not in (1, 2, 3):
        raise ValueError("axis_index must be 1, 2 or 3")
    i = axis_index - 1
    j, k = (i + 1) % 3, (i + 2) % 3
    out = np.zeros(3)
    out[j] = math.cos(theta)
    out[k] = math.sin(theta)
    return out


def angular_term(theta_hat, theta, epsilon: float = DEFAULT_EPSILON):
    """tan(pi/(4+eps) + 1 - <n(theta_hat), n(theta)>) with the argument clamped
    to [0, pi/2 - 1e-3]. Vectorised over array inputs."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    inner = np.cos(np.asarray(theta_hat, dtype=float) - np.asarray(theta, dtype=float))
    # (1 - inner) first so a zero error reproduces the baseline bit for bit
    arg = np.clip(math.pi / (4.0 + epsilon) + (1.0 - inner), 0.0, TAN_CLAMP)
    out = np.tan(arg)
    return float(out) if np.ndim(out) == 0 else out


def discrepancy_arrays(pos, rot, pos_hat, rot_hat, params: DiscrepancyParams = DiscrepancyParams()):
    """Row-wise discrepancy on raw arrays of shape (..., 3).

    Rows need not be valid poses, which lets the losses feed pose
    differences through the same formula.
    """
    pos = np.asarray(pos, dtype=float)
    pos_hat = np.asarray(pos_hat, dtype=float)
    trans = np.sqrt(np.sum((pos - pos_hat) ** 2, axis=-1))
    ang = np.sum(angular_term(rot_hat, rot, params.epsilon), axis=-1)
    out = trans + ang
    if params.normalized:
        out = out - params.baseline
        # ties at zero error can land a few ulps below zero
        out = np.maximum(out, 0.0)
    return out


def pose_discrepancy(c: CameraPose, c_hat: CameraPose, params: DiscrepancyParams = DiscrepancyParams()) -> float:
    return float(
        discrepancy_arrays(
            np.array(c.position), np.array(c.orientation),
            np.array(c_hat.position), np.array(c_hat.orientation), params,
        )
    )
