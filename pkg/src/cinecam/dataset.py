"""Paired dataset records: JSON-Lines IO, windowing and balance reporting.

One record per line::

    {"v": 1, "id": ..., "prompt": ..., "scd": "<dsl line>",
     "instruction": {...}, "subject": [{center, dims, facing}, ...],
     "camera": [{pos, rot, fov}, ...], "subset": "static" | "dynamic",
     "frame_rate": 30.0}

Floats are written with Python's shortest round-trip repr, so reading a
file back reproduces every value bit for bit.
"""
from __future__ import annotations

import json
import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Optional

import numpy as np

from .compiler import ConstraintSet, Interpolation, SimInstruction
from .pose import CameraPose, CameraTrajectory, SubjectTrajectory
from .scl import Easing, ScdError, ScdRecord, format_scd, parse_scd

SCHEMA_VERSION = 1
WINDOW = 30
IMBALANCE_TOLERANCE = 0.02
_FIELDS = ("v", "id", "prompt", "scd", "instruction", "subject", "camera", "subset", "frame_rate")


class DatasetError(ValueError):
    """Schema or invariant failure; carries the line number and record id when known."""

    def __init__(self, message: str, line: Optional[int] = None, record_id: Optional[str] = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if record_id is not None:
            where.append(f"id {record_id!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.record_id = record_id


class Subset(str, Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"


@dataclass(frozen=True, eq=False)
class DatasetRecord:
    id: str
    prompt: Optional[str]
    scd: ScdRecord
    instruction: SimInstruction
    subject: SubjectTrajectory
    camera: CameraTrajectory
    subset: Subset

    def __post_init__(self):
        object.__setattr__(self, "subset", Subset(self.subset))

    def problems(self) -> list:
        out = []
        if len(self.subject) != len(self.camera):
            out.append(f"subject has {len(self.subject)} frames, camera has {len(self.camera)}")
        if self.instruction.frames != len(self.camera):
            out.append(f"instruction expects {self.instruction.frames} frames, camera has {len(self.camera)}")
        expected = Subset.STATIC if self.subject.is_static() else Subset.DYNAMIC
        if self.subset != expected:
            out.append(f"subset is {self.subset.value!r} but the subject trajectory is {expected.value}")
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, DatasetRecord):
            return NotImplemented
        return (
            self.id == other.id
            and self.prompt == other.prompt
            and self.scd == other.scd
            and self.instruction == other.instruction
            and self.subject == other.subject
            and self.camera == other.camera
            and self.subset == other.subset
        )


def subset_of(subject: SubjectTrajectory) -> Subset:
    return Subset.STATIC if subject.is_static() else Subset.DYNAMIC


# ---------------------------------------------------------------- JSON mapping

def _floats(values) -> list:
    return [float(v) for v in np.asarray(values, dtype=float).reshape(-1)]


def pose_to_json(pose: CameraPose) -> dict:
    return {"pos": list(pose.position), "rot": list(pose.orientation), "fov": pose.fov}


def pose_from_json(obj: dict) -> CameraPose:
    return CameraPose(obj["pos"], obj["rot"], obj["fov"])


def constraints_to_json(c: ConstraintSet) -> dict:
    return {
        "static_location": c.static_location,
        "static_distance": c.static_distance,
        "distance_radius": c.distance_radius,
        "visibility_throughout": c.visibility_throughout,
        "max_acceleration": c.max_acceleration,
    }


def instruction_to_json(instr: SimInstruction) -> dict:
    return {
        "start_pose": pose_to_json(instr.start_pose),
        "end_pose": pose_to_json(instr.end_pose),
        "interpolation": instr.interpolation.value,
        "alpha": instr.alpha,
        "easing": instr.easing.value,
        "constraints": constraints_to_json(instr.constraints),
        "frames": instr.frames,
        "focus": [list(f) for f in instr.focus],
    }


def instruction_from_json(obj: dict) -> SimInstruction:
    return SimInstruction(
        start_pose=pose_from_json(obj["start_pose"]),
        end_pose=pose_from_json(obj["end_pose"]),
        interpolation=Interpolation(obj["interpolation"]),
        alpha=float(obj["alpha"]),
        easing=Easing(obj["easing"]),
        constraints=ConstraintSet(**obj["constraints"]),
        frames=int(obj["frames"]),
        focus=tuple(tuple(f) for f in obj.get("focus", ((0.0, 0.0, 0.0), (0.0, 0.0, 0.0)))),
    )


def subject_to_json(subject: SubjectTrajectory) -> list:
    return [
        {"center": _floats(c), "dims": _floats(d), "facing": [_floats(row) for row in f]}
        for c, d, f in zip(subject.centers, subject.dims, subject.facing)
    ]


def subject_from_json(frames: list) -> SubjectTrajectory:
    if not frames:
        raise ValueError("subject trajectory is empty")
    return SubjectTrajectory([f["center"] for f in frames], [f["dims"] for f in frames],
                             [f["facing"] for f in frames])


def camera_to_json(camera: CameraTrajectory) -> list:
    return [
        {"pos": _floats(p), "rot": _floats(r), "fov": float(f)}
        for p, r, f in zip(camera.positions, camera.orientations, camera.fovs)
    ]


def camera_from_json(frames: list, frame_rate: float = 30.0) -> CameraTrajectory:
    if not frames:
        raise ValueError("camera trajectory is empty")
    return CameraTrajectory([f["pos"] for f in frames], [f["rot"] for f in frames],
                            [f["fov"] for f in frames], frame_rate)


def record_to_json(rec: DatasetRecord) -> dict:
    return {
        "v": SCHEMA_VERSION,
        "id": rec.id,
        "prompt": rec.prompt,
        "scd": format_scd(rec.scd),
        "instruction": instruction_to_json(rec.instruction),
        "subject": subject_to_json(rec.subject),
        "camera": camera_to_json(rec.camera),
        "subset": rec.subset.value,
        "frame_rate": rec.camera.frame_rate,
    }


def record_from_json(obj: dict) -> DatasetRecord:
    if not isinstance(obj, dict):
        raise ValueError("record must be a JSON object")
    if obj.get("v") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {obj.get('v')!r}")
    missing = [k for k in _FIELDS if k not in obj and k not in ("prompt", "frame_rate")]
    if missing:
        raise ValueError(f"missing fields {missing}")
    return DatasetRecord(
        id=str(obj["id"]),
        prompt=obj.get("prompt"),
        scd=parse_scd(obj["scd"]),
        instruction=instruction_from_json(obj["instruction"]),
        subject=subject_from_json(obj["subject"]),
        camera=camera_from_json(obj["camera"], float(obj.get("frame_rate", 30.0))),
        subset=Subset(obj["subset"]),
    )


def dumps_record(rec: DatasetRecord) -> str:
    problems = rec.problems()
    if problems:
        raise DatasetError("; ".join(problems), record_id=rec.id)
    return json.dumps(record_to_json(rec), separators=(",", ":"), allow_nan=False)


# ---------------------------------------------------------------- file IO

def write_records(records: Iterable[DatasetRecord], path) -> int:
    """Validate and write records, one JSON object per line.

    Every record is serialized before anything touches the file, so a
    validation failure leaves the destination unchanged.
    """
    lines = [dumps_record(rec) for rec in records]
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")
    return len(lines)


def read_records(path) -> Iterator[DatasetRecord]:
    """Yield validated records. Unknown top-level fields trigger a warning."""
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"invalid JSON ({exc.msg} at column {exc.colno})", line=lineno) from None
            rid = obj.get("id") if isinstance(obj, dict) else None
            extra = sorted(set(obj) - set(_FIELDS)) if isinstance(obj, dict) else []
            if extra:
                warnings.warn(f"line {lineno}: ignoring unknown fields {extra}", stacklevel=2)
            try:
                rec = record_from_json(obj)
            except (KeyError, TypeError, ValueError, ScdError) as exc:
                raise DatasetError(str(exc), line=lineno, record_id=rid) from None
            problems = rec.problems()
            if problems:
                raise DatasetError("; ".join(problems), line=lineno, record_id=rec.id)
            yield rec


# ---------------------------------------------------------------- windowing

def window_indices(length: int, target: int = WINDOW) -> np.ndarray:
    """``target`` evenly spaced indices from 0 to ``length - 1``, rounding half up."""
    if length < target:
        raise ValueError(f"need at least {target} frames, got {length}")
    if target == 1:
        return np.zeros(1, dtype=int)
    i = np.arange(target)
    return (2 * i * (length - 1) + (target - 1)) // (2 * (target - 1))


def window_sample(camera: CameraTrajectory, subject: SubjectTrajectory, target: int = WINDOW,
                  mode: str = "uniform", seed: Optional[int] = None):
    """Cut paired trajectories down to ``target`` frames.

    ``uniform`` keeps evenly spaced frames including both ends; ``random``
    takes a seeded contiguous crop.
    """
    n = len(camera)
    if len(subject) != n:
        raise ValueError("camera and subject lengths differ")
    if n < target:
        raise ValueError(f"need at least {target} frames, got {n}")
    if mode == "uniform":
        idx = window_indices(n, target)
    elif mode == "random":
        start = int(np.random.default_rng(seed).integers(0, n - target + 1))
        idx = np.arange(start, start + target)
    else:
        raise ValueError(f"unknown window mode {mode!r}")
    return camera.take(idx), subject.take(idx)


# ---------------------------------------------------------------- balance

@dataclass
class BalanceReport:
    total: int = 0
    subsets: dict = field(default_factory=lambda: {s.value: 0 for s in Subset})
    shots: dict = field(default_factory=dict)
    movements: dict = field(default_factory=dict)
    total_frames: int = 0

    @property
    def static_share(self) -> float:
        return self.subsets["static"] / self.total if self.total else 0.5

    @property
    def imbalanced(self) -> bool:
        return self.total > 0 and abs(self.static_share - 0.5) > IMBALANCE_TOLERANCE + 1e-12

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "subsets": dict(self.subsets),
            "shots": dict(self.shots),
            "movements": dict(self.movements),
            "total_frames": self.total_frames,
            "static_share": self.static_share,
            "imbalanced": self.imbalanced,
        }


def balance_report(records: Iterable[DatasetRecord]) -> BalanceReport:
    subsets, shots, moves = Counter(), Counter(), Counter()
    total = frames = 0
    for rec in records:
        total += 1
        frames += len(rec.camera)
        subsets[rec.subset.value] += 1
        shots[rec.scd.init.shot.value] += 1
        moves[rec.scd.movement.kind.value] += 1
    report = BalanceReport(total=total, shots=dict(sorted(shots.items())),
                           movements=dict(sorted(moves.items())), total_frames=frames)
    report.subsets.update(subsets)
    return report


def static_count(count: int, split: float) -> int:
    """Number of static records for a requested static share (half rounds up)."""
    if not 0.0 <= split <= 1.0 or not math.isfinite(split):
        raise ValueError("split must lie in [0, 1]")
    return int(math.floor(count * split + 0.5))
