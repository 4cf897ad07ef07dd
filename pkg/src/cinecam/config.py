"""Run-wide settings. Loaded from JSON; every key is optional."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

DEFAULT_POLAR_DEG = {
    "worms_eye": 165.0,
    "low": 120.0,
    "eye_level": 90.0,
    "high": 60.0,
    "birds_eye": 15.0,
}


@dataclass
class Config:
    polar_deg: dict = field(default_factory=lambda: dict(DEFAULT_POLAR_DEG))
    sector_deg: float = 45.0
    fov_deg: float = 45.0
    aspect: float = 1.0
    ndc_tolerance: float = 0.02
    orientation_budget_deg: float = 25.0
    a_max: float = 0.05
    alpha: float = 0.5
    frames: int = 30
    frame_rate: float = 30.0
    epsilon: float = 1.0
    k: int = 5
    loss_weights: tuple = (8.0, 20.0, 50.0, 5.0)
    clip_scale: float = 100.0
    max_speed: float = 0.04

    def __post_init__(self):
        self.loss_weights = tuple(float(w) for w in self.loss_weights)
        self.validate()

    def validate(self) -> None:
        missing = set(DEFAULT_POLAR_DEG) - set(self.polar_deg)
        if missing:
            raise ValueError(f"polar_deg is missing {sorted(missing)}")
        for name, deg in self.polar_deg.items():
            if not 0.0 < float(deg) < 180.0:
                raise ValueError(f"polar_deg[{name}] must lie strictly between 0 and 180")
        if not 0.0 < self.fov_deg < 180.0:
            raise ValueError("fov_deg must lie in (0, 180)")
        positive = ("aspect", "ndc_tolerance", "orientation_budget_deg", "a_max",
                    "frame_rate", "epsilon", "clip_scale", "max_speed", "sector_deg")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if int(self.frames) != self.frames or self.frames < 1:
            raise ValueError("frames must be a positive integer")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be a positive integer")
        if len(self.loss_weights) != 4 or min(self.loss_weights) < 0:
            raise ValueError("loss_weights must be four non-negative numbers")

    @property
    def fov(self) -> float:
        return math.radians(self.fov_deg)

    @property
    def orientation_budget(self) -> float:
        return math.radians(self.orientation_budget_deg)

    def polar(self, elevation: str) -> float:
        return math.radians(float(self.polar_deg[elevation]))

    def updated(self, **overrides) -> "Config":
        values = asdict(self)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return Config(**values)

    @classmethod
    def load(cls, path) -> "Config":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)
