"""Seeded synthetic dataset generation.

Record ``i`` depends only on ``(seed, i)`` and the config, so output is
identical for any worker count once sorted by id.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Optional

import numpy as np

from .compiler import compile_scd, plausible_ends
from .config import Config
from .dataset import DatasetRecord, Subset, static_count
from .geometry import FramingError
from .scl import (CameraAngleSpec, Easing, Elevation, EndpointSpec, FramingCell, MovementKind,
                  MovementSpec, ScdRecord, ShotType, Side)
from .simulator import InfeasibleError, MotionKind, SubjectMotionModel, generate_subject_motion, simulate

MAX_ATTEMPTS = 64

_SHOT_WORDS = {
    "ECU": "an extreme close-up", "CU": "a close-up", "MCU": "a medium close-up",
    "MS": "a medium shot", "FS": "a full shot", "LS": "a long shot",
    "VLS": "a very long shot", "ELS": "an extreme long shot",
}
_MOVE_WORDS = {
    "static": "holds still", "push_in": "pushes in", "pull_out": "pulls out",
    "pan": "pans", "tilt": "tilts", "orbit": "orbits the subject",
    "track": "tracks alongside", "crane": "cranes",
}


def describe(scd: ScdRecord) -> str:
    """Template prompt for a description."""
    init = scd.init
    text = (
        f"Open on {_SHOT_WORDS[init.shot.value]} from a {init.angle.elevation.value.replace('_', ' ')} "
        f"angle on the subject's {init.angle.side.value.replace('_', ' ')} side, subject at "
        f"{init.framing.value.replace('_', ' ')}. The camera {_MOVE_WORDS[scd.movement.kind.value]}"
    )
    if scd.movement.easing != Easing.LINEAR:
        text += f" with {scd.movement.easing.value.replace('_', '-')} timing"
    if scd.end is not None:
        end = scd.end
        text += (
            f", ending on {_SHOT_WORDS[end.shot.value]} from the "
            f"{end.angle.side.value.replace('_', ' ')} side at {end.framing.value.replace('_', ' ')}"
        )
    return text + "."


def _pick(rng, items):
    return items[int(rng.integers(len(items)))]


def random_scd(rng: np.random.Generator, frames: int) -> ScdRecord:
    init = EndpointSpec(
        _pick(rng, list(ShotType)),
        CameraAngleSpec(_pick(rng, list(Elevation)), _pick(rng, list(Side))),
        _pick(rng, list(FramingCell)),
    )
    kind = _pick(rng, list(MovementKind))
    movement = MovementSpec(kind, _pick(rng, list(Easing)), frames)
    end = None if kind == MovementKind.STATIC else _pick(rng, plausible_ends(init, kind))
    return ScdRecord(init, movement, end)


def random_motion(rng: np.random.Generator, static: bool, config: Config) -> SubjectMotionModel:
    dims = (float(rng.uniform(0.4, 0.6)), float(rng.uniform(0.25, 0.35)), float(rng.uniform(1.5, 1.9)))
    params = {"dims": dims, "heading": float(rng.uniform(-np.pi, np.pi)), "max_speed": config.max_speed}
    if static:
        kind = MotionKind.STATIONARY
    else:
        kind = _pick(rng, [MotionKind.LINE_WALK, MotionKind.TURN_IN_PLACE, MotionKind.ARC_WALK])
        params["speed"] = float(rng.uniform(0.25, 1.0) * config.max_speed)
        params["turn_rate"] = float(rng.uniform(0.005, 0.03) * rng.choice([-1.0, 1.0]))
    return SubjectMotionModel(kind, params, int(rng.integers(2**31)))


def record_id(index: int) -> str:
    return f"rec{index:07d}"


def generate_record(index: int, subset: Subset, seed: int, config: Optional[Config] = None) -> DatasetRecord:
    """Draw, compile and simulate one record, redrawing on infeasible plans."""
    config = config or Config()
    last_error = None
    for attempt in range(MAX_ATTEMPTS):
        rng = np.random.default_rng(np.random.SeedSequence([seed, index, attempt]))
        scd = random_scd(rng, config.frames)
        model = random_motion(rng, subset == Subset.STATIC, config)
        subject = generate_subject_motion(model, config.frames)
        if subject.is_static() != (subset == Subset.STATIC):
            continue
        try:
            instr = compile_scd(scd, subject, config=config, seed=int(rng.integers(2**31)))
            camera = simulate(instr, subject, config)
        except (InfeasibleError, FramingError) as exc:
            last_error = exc
            continue
        return DatasetRecord(record_id(index), describe(scd), scd, instr, subject, camera, subset)
    raise InfeasibleError("generate", f"record {index}: no feasible draw in {MAX_ATTEMPTS} attempts ({last_error})")


def subset_plan(count: int, split: float, seed: int) -> list:
    """Exactly ``static_count(count, split)`` static labels in seeded order."""
    n_static = static_count(count, split)
    labels = np.array([Subset.STATIC] * n_static + [Subset.DYNAMIC] * (count - n_static), dtype=object)
    order = np.random.default_rng(np.random.SeedSequence([seed, count])).permutation(count)
    return list(labels[order])


def _job(args):
    return generate_record(*args)


def generate_records(count: int, split: float = 0.5, seed: int = 0, config: Optional[Config] = None,
                     jobs: int = 1) -> list:
    if count < 0:
        raise ValueError("count must be non-negative")
    config = config or Config()
    tasks = [(i, label, seed, config) for i, label in enumerate(subset_plan(count, split, seed))]
    if jobs > 1 and count > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_job, tasks, chunksize=max(1, count // (4 * jobs))))
    else:
        records = [_job(t) for t in tasks]
    return sorted(records, key=lambda r: r.id)
