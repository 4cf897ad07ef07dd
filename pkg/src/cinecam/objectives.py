"""Training objectives as plain functions over trajectories and embeddings,
plus the progressive schedules and the corruption used for denoising."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .pose import CameraTrajectory, DiscrepancyParams, discrepancy_arrays, wrap_angle


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 8.0
    beta: float = 20.0
    gamma: float = 50.0
    lam: float = 5.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "lam"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and non-negative")


class ScheduleShape(str, Enum):
    LINEAR = "linear"


@dataclass(frozen=True)
class ScheduleSpec:
    start_value: float
    end_value: float
    total_steps: int
    shape: ScheduleShape = ScheduleShape.LINEAR

    def __post_init__(self):
        if int(self.total_steps) != self.total_steps or self.total_steps < 1:
            raise ValueError("total_steps must be a positive integer")


def masking_schedule(total_steps: int) -> ScheduleSpec:
    return ScheduleSpec(0.1, 0.8, total_steps)


def noise_schedule(total_steps: int) -> ScheduleSpec:
    return ScheduleSpec(1.0, 0.0, total_steps)


def teacher_forcing_schedule(total_steps: int) -> ScheduleSpec:
    return ScheduleSpec(0.7, 1.0, total_steps)


def _check_pair(c: CameraTrajectory, c_hat: CameraTrajectory, min_len: int = 1) -> None:
    if len(c) != len(c_hat):
        raise ValueError(f"trajectory lengths differ: {len(c)} vs {len(c_hat)}")
    if len(c) < min_len:
        raise ValueError(f"need at least {min_len} frames")


def init_loss(c: CameraTrajectory, c_hat: CameraTrajectory,
              params: DiscrepancyParams = DiscrepancyParams()) -> float:
    if len(c) < 1 or len(c_hat) < 1:
        raise ValueError("empty trajectory")
    return float(discrepancy_arrays(c.positions[0], c.orientations[0],
                                    c_hat.positions[0], c_hat.orientations[0], params))


def rel_loss(c: CameraTrajectory, c_hat: CameraTrajectory,
             params: DiscrepancyParams = DiscrepancyParams()) -> float:
    """Sum over frames of the discrepancy between offsets from frame 0."""
    _check_pair(c, c_hat)
    dp, dr = c.positions - c.positions[0], c.orientations - c.orientations[0]
    dp_hat, dr_hat = c_hat.positions - c_hat.positions[0], c_hat.orientations - c_hat.orientations[0]
    return float(np.sum(discrepancy_arrays(dp, dr, dp_hat, dr_hat, params)))


def speed_loss(c: CameraTrajectory, c_hat: CameraTrajectory,
               params: DiscrepancyParams = DiscrepancyParams()) -> float:
    """Sum over consecutive frames of the discrepancy between pose deltas."""
    _check_pair(c, c_hat, min_len=2)
    dp, dr = np.diff(c.positions, axis=0), np.diff(c.orientations, axis=0)
    dp_hat, dr_hat = np.diff(c_hat.positions, axis=0), np.diff(c_hat.orientations, axis=0)
    return float(np.sum(discrepancy_arrays(dp, dr, dp_hat, dr_hat, params)))


def _cosine(a, b) -> float:
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("cosine similarity of a zero-norm vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def clip_loss(enc: dict, target: dict) -> float:
    """Sum of (1 - cosine) over the ``high`` and ``low`` embedding pairs."""
    return sum(1.0 - _cosine(enc[k], target[k]) for k in ("high", "low"))


def cycle_loss(enc_high, reenc_high) -> float:
    return 1.0 - _cosine(enc_high, reenc_high)


def total_loss(init: float, rel: float, speed: float, clip: float, cycle: float,
               weights: LossWeights = LossWeights()) -> float:
    parts = (init, rel, speed, clip, cycle)
    if any(not math.isfinite(p) or p < 0 for p in parts):
        raise ValueError("loss components must be finite and non-negative")
    return init + weights.alpha * rel + weights.beta * speed + weights.gamma * clip + weights.lam * cycle


def schedule_value(spec: ScheduleSpec, step: int) -> float:
    if not 0 <= step < spec.total_steps:
        raise ValueError(f"step {step} outside [0, {spec.total_steps})")
    if spec.total_steps == 1 or step == 0:
        return float(spec.start_value)
    if step == spec.total_steps - 1:
        return float(spec.end_value)
    frac = step / (spec.total_steps - 1)
    return float(spec.start_value + frac * (spec.end_value - spec.start_value))


def fuse_teacher(enc, target, ratio: float) -> np.ndarray:
    """Convex blend of encoder output and target embedding."""
    enc = np.asarray(enc, dtype=float)
    target = np.asarray(target, dtype=float)
    if enc.shape != target.shape:
        raise ValueError(f"dimension mismatch: {enc.shape} vs {target.shape}")
    if not 0.0 <= ratio <= 1.0:
        raise ValueError("ratio must lie in [0, 1]")
    if ratio == 0.0:
        return enc.copy()
    if ratio == 1.0:
        return target.copy()
    return (1.0 - ratio) * enc + ratio * target


def corrupt_trajectory(traj: CameraTrajectory, mask_ratio: float, noise_ratio: float,
                       noise_scale: float = 1.0, seed: int = 0):
    """Mask a seeded subset of frames and jitter the rest.

    Returns ``(corrupted, mask)``. Masked frames keep their values; the
    boolean ``mask`` marks them. Unmasked positions and angles get uniform
    noise in ``[-noise_ratio * noise_scale, +noise_ratio * noise_scale]``.
    """
    if not (0.0 <= mask_ratio <= 1.0 and 0.0 <= noise_ratio <= 1.0):
        raise ValueError("ratios must lie in [0, 1]")
    if noise_scale < 0:
        raise ValueError("noise_scale must be non-negative")
    n = len(traj)
    rng = np.random.default_rng(seed)
    n_masked = int(math.floor(mask_ratio * n + 0.5))
    mask = np.zeros(n, dtype=bool)
    mask[rng.permutation(n)[:n_masked]] = True
    amp = noise_ratio * noise_scale
    pos_noise = rng.uniform(-amp, amp, size=(n, 3)) if amp > 0 else np.zeros((n, 3))
    rot_noise = rng.uniform(-amp, amp, size=(n, 3)) if amp > 0 else np.zeros((n, 3))
    pos_noise[mask] = 0.0
    rot_noise[mask] = 0.0
    if amp == 0:
        return traj, mask
    corrupted = CameraTrajectory(
        traj.positions + pos_noise,
        wrap_angle(traj.orientations + rot_noise),
        traj.fovs,
        traj.frame_rate,
    )
    return corrupted, mask
