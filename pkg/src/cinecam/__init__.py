"""Cinematic camera trajectories from structured shot descriptions.

Pipeline: a description line (:mod:`cinecam.scl`) is compiled against a
subject into endpoint poses and constraints (:mod:`cinecam.compiler`),
simulated into per-frame camera poses (:mod:`cinecam.simulator`), and
stored as paired records (:mod:`cinecam.dataset`). :mod:`cinecam.metrics`
and :mod:`cinecam.objectives` score generated trajectories.
"""
from .compiler import ShotCompiler, SimInstruction, compile_scd
from .config import Config
from .dataset import DatasetRecord, balance_report, read_records, window_sample, write_records
from .metrics import FrechetDistance, ManifoldMetrics, TrajectoryFeaturizer, clip_score, fid, prdc
from .pose import (BoundingBox, CameraPose, CameraTrajectory, DiscrepancyParams, SubjectState,
                   SubjectTrajectory, pose_discrepancy)
from .scl import ScdRecord, enumerate_scds, format_scd, parse_scd
from .simulator import CameraSimulator, InfeasibleError, simulate

__version__ = "0.1.0"

__all__ = [
    "BoundingBox", "CameraPose", "CameraSimulator", "CameraTrajectory", "Config", "DatasetRecord",
    "DiscrepancyParams", "FrechetDistance", "InfeasibleError", "ManifoldMetrics", "ScdRecord",
    "ShotCompiler", "SimInstruction", "SubjectState", "SubjectTrajectory", "TrajectoryFeaturizer",
    "balance_report", "clip_score", "compile_scd", "enumerate_scds", "fid", "format_scd", "parse_scd",
    "pose_discrepancy", "prdc", "read_records", "simulate", "window_sample", "write_records",
]
