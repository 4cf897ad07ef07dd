"""Standardized cinematographic descriptions: value types, a line grammar,
a parser/formatter pair and an exhaustive enumerator.

Canonical line form::

    shot=CU angle=eye_level side=front frame=center; move=orbit ease=ease_in_out dur=30 -> shot=LS angle=high side=left frame=middle_left

The ``-> endpoint`` tail is optional, as are ``ease=`` and ``dur=`` in the
movement segment. The formatter always writes ``ease`` and ``dur``.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Optional


class ShotType(str, Enum):
    ECU = "ECU"
    CU = "CU"
    MCU = "MCU"
    MS = "MS"
    FS = "FS"
    LS = "LS"
    VLS = "VLS"
    ELS = "ELS"


class Elevation(str, Enum):
    WORMS_EYE = "worms_eye"
    LOW = "low"
    EYE_LEVEL = "eye_level"
    HIGH = "high"
    BIRDS_EYE = "birds_eye"


class Side(str, Enum):
    FRONT = "front"
    FRONT_LEFT = "front_left"
    LEFT = "left"
    BACK_LEFT = "back_left"
    BACK = "back"
    BACK_RIGHT = "back_right"
    RIGHT = "right"
    FRONT_RIGHT = "front_right"


class FramingCell(str, Enum):
    TOP_LEFT = "top_left"
    TOP_CENTER = "top_center"
    TOP_RIGHT = "top_right"
    MIDDLE_LEFT = "middle_left"
    CENTER = "center"
    MIDDLE_RIGHT = "middle_right"
    BOTTOM_LEFT = "bottom_left"
    BOTTOM_CENTER = "bottom_center"
    BOTTOM_RIGHT = "bottom_right"


class MovementKind(str, Enum):
    STATIC = "static"
    PUSH_IN = "push_in"
    PULL_OUT = "pull_out"
    PAN = "pan"
    TILT = "tilt"
    ORBIT = "orbit"
    TRACK = "track"
    CRANE = "crane"


class Easing(str, Enum):
    LINEAR = "linear"
    EASE_IN = "ease_in"
    EASE_OUT = "ease_out"
    EASE_IN_OUT = "ease_in_out"


DEFAULT_DURATION = 30


class ScdError(ValueError):
    pass


class ScdSyntaxError(ScdError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class UnknownTokenError(ScdError):
    def __init__(self, field_name: str, token: str, offset: int):
        super().__init__(f"unknown {field_name} token {token!r} at byte {offset}")
        self.field = field_name
        self.token = token
        self.offset = offset


class DuplicateKeyError(ScdError):
    def __init__(self, key: str, offset: int):
        super().__init__(f"duplicate key {key!r} at byte {offset}")
        self.key = key
        self.offset = offset


@dataclass(frozen=True)
class CameraAngleSpec:
    elevation: Elevation
    side: Side


@dataclass(frozen=True)
class EndpointSpec:
    shot: ShotType
    angle: CameraAngleSpec
    framing: FramingCell


@dataclass(frozen=True)
class MovementSpec:
    kind: MovementKind
    easing: Easing = Easing.LINEAR
    duration_frames: int = DEFAULT_DURATION


@dataclass(frozen=True)
class ScdRecord:
    init: EndpointSpec
    movement: MovementSpec
    end: Optional[EndpointSpec] = None


def validate_scd(scd: ScdRecord) -> list:
    """Return human-readable invariant violations; empty when valid."""
    problems = []
    for label, ep in (("init", scd.init), ("end", scd.end)):
        if ep is None:
            continue
        checks = (
            ("shot", ep.shot, ShotType),
            ("angle", ep.angle.elevation, Elevation),
            ("side", ep.angle.side, Side),
            ("frame", ep.framing, FramingCell),
        )
        for name, value, enum in checks:
            if not isinstance(value, enum):
                problems.append(f"{label}.{name}: {value!r} is not a {enum.__name__}")
    mv = scd.movement
    if not isinstance(mv.kind, MovementKind):
        problems.append(f"movement.kind: {mv.kind!r} is not a MovementKind")
    if not isinstance(mv.easing, Easing):
        problems.append(f"movement.easing: {mv.easing!r} is not an Easing")
    dur = mv.duration_frames
    if isinstance(dur, bool) or not isinstance(dur, int) or dur < 1:
        problems.append(f"movement.duration_frames: must be a positive integer, got {dur!r}")
    elif mv.kind != MovementKind.STATIC and dur < 2:
        problems.append(f"movement.duration_frames: {mv.kind.value} needs at least 2 frames, got {dur}")
    if mv.kind == MovementKind.STATIC and scd.end is not None and scd.end != scd.init:
        problems.append("end: static movement requires the end endpoint to be absent or equal to init")
    return problems


_ENDPOINT_KEYS = ("shot", "angle", "side", "frame")
_MOVEMENT_KEYS = ("move", "ease", "dur")
_FIELD_ENUMS = {
    "shot": ShotType,
    "angle": Elevation,
    "side": Side,
    "frame": FramingCell,
    "move": MovementKind,
    "ease": Easing,
}
_TOKEN = re.compile(r"\S+")


def _tokens(text: str, start: int, stop: int) -> list:
    """(offset, token) pairs for a segment; rejects anything but single spaces."""
    segment = text[start:stop]
    out = []
    pos = 0
    for m in _TOKEN.finditer(segment):
        gap = segment[pos:m.start()]
        expected_gap = "" if pos == 0 else " "
        if gap != expected_gap:
            raise ScdSyntaxError("unexpected whitespace", _byte_offset(text, start + pos))
        out.append((start + m.start(), m.group()))
        pos = m.end()
    if segment[pos:]:
        raise ScdSyntaxError("unexpected trailing whitespace", _byte_offset(text, start + pos))
    return out


def _byte_offset(text: str, char_index: int) -> int:
    return len(text[:char_index].encode("utf-8"))


def _key_values(text: str, tokens: list, order: tuple, required: int) -> dict:
    seen = {}
    last = -1
    for offset, tok in tokens:
        key, sep, value = tok.partition("=")
        boff = _byte_offset(text, offset)
        if not sep or not key or not value:
            raise ScdSyntaxError(f"expected key=value, got {tok!r}", boff)
        if key in seen:
            raise DuplicateKeyError(key, boff)
        if key not in order:
            raise ScdSyntaxError(f"unknown key {key!r}", boff)
        idx = order.index(key)
        if idx < last:
            raise ScdSyntaxError(f"key {key!r} out of order", boff)
        skipped = [k for k in order[last + 1:min(idx, required)]]
        if skipped:
            raise ScdSyntaxError(f"missing key {skipped[0]!r}", boff)
        seen[key] = (value, _byte_offset(text, offset + len(key) + 1))
        last = idx
    missing = [k for k in order[:required] if k not in seen]
    if missing:
        end = _byte_offset(text, tokens[-1][0] + len(tokens[-1][1])) if tokens else 0
        raise ScdSyntaxError(f"missing key {missing[0]!r}", end)
    return seen


def _enum_value(field_name: str, value: str, offset: int):
    enum = _FIELD_ENUMS[field_name]
    try:
        return enum(value)
    except ValueError:
        raise UnknownTokenError(field_name, value, offset) from None


def _parse_endpoint(text: str, start: int, stop: int) -> EndpointSpec:
    tokens = _tokens(text, start, stop)
    if not tokens:
        raise ScdSyntaxError("empty endpoint", _byte_offset(text, start))
    kv = _key_values(text, tokens, _ENDPOINT_KEYS, required=4)
    vals = {k: _enum_value(k, *kv[k]) for k in _ENDPOINT_KEYS}
    return EndpointSpec(vals["shot"], CameraAngleSpec(vals["angle"], vals["side"]), vals["frame"])


def _parse_movement(text: str, start: int, stop: int) -> MovementSpec:
    tokens = _tokens(text, start, stop)
    if not tokens:
        raise ScdSyntaxError("empty movement", _byte_offset(text, start))
    kv = _key_values(text, tokens, _MOVEMENT_KEYS, required=1)
    kind = _enum_value("move", *kv["move"])
    easing = _enum_value("ease", *kv["ease"]) if "ease" in kv else Easing.LINEAR
    duration = DEFAULT_DURATION
    if "dur" in kv:
        raw, off = kv["dur"]
        if not raw.isdigit() or (len(raw) > 1 and raw[0] == "0"):
            raise ScdSyntaxError(f"dur must be a positive integer, got {raw!r}", off)
        duration = int(raw)
        if duration < 1:
            raise ScdSyntaxError("dur must be a positive integer", off)
    return MovementSpec(kind, easing, duration)


def parse_scd(text: str) -> ScdRecord:
    """Parse one canonical line (a trailing newline is tolerated)."""
    if text.endswith("\n"):
        text = text[:-1]
    if "\n" in text:
        raise ScdSyntaxError("input must be a single line", _byte_offset(text, text.index("\n")))
    semi = text.find(";")
    if semi < 0:
        raise ScdSyntaxError("missing ';' between endpoint and movement", _byte_offset(text, len(text)))
    if text.find(";", semi + 1) >= 0:
        raise ScdSyntaxError("unexpected ';'", _byte_offset(text, text.find(";", semi + 1)))
    if semi + 1 >= len(text) or text[semi + 1] != " ":
        raise ScdSyntaxError("expected a single space after ';'", _byte_offset(text, semi + 1))
    init = _parse_endpoint(text, 0, semi)
    arrow = text.find("->", semi)
    end = None
    if arrow < 0:
        movement = _parse_movement(text, semi + 2, len(text))
    else:
        if text[arrow - 1:arrow] != " " or text[arrow + 2:arrow + 3] != " ":
            raise ScdSyntaxError("'->' must be surrounded by single spaces", _byte_offset(text, arrow))
        movement = _parse_movement(text, semi + 2, arrow - 1)
        end = _parse_endpoint(text, arrow + 3, len(text))
    record = ScdRecord(init, movement, end)
    problems = validate_scd(record)
    if problems:
        raise ScdError("; ".join(problems))
    return record


def _format_endpoint(ep: EndpointSpec) -> str:
    return (
        f"shot={ep.shot.value} angle={ep.angle.elevation.value} "
        f"side={ep.angle.side.value} frame={ep.framing.value}"
    )


def format_scd(scd: ScdRecord) -> str:
    mv = scd.movement
    line = (
        f"{_format_endpoint(scd.init)}; move={mv.kind.value} "
        f"ease={mv.easing.value} dur={mv.duration_frames}"
    )
    if scd.end is not None:
        line += f" -> {_format_endpoint(scd.end)}"
    return line


def _endpoints() -> Iterator[EndpointSpec]:
    for shot, elev, side, cell in itertools.product(ShotType, Elevation, Side, FramingCell):
        yield EndpointSpec(shot, CameraAngleSpec(elev, side), cell)


ENDPOINT_COUNT = len(ShotType) * len(Elevation) * len(Side) * len(FramingCell)


def enumerate_scds(
    include_end: bool = False,
    movement_kinds: Optional[Iterable[MovementKind]] = None,
    frame_count: int = DEFAULT_DURATION,
    easings: Optional[Iterable[Easing]] = None,
) -> Iterator[ScdRecord]:
    """Yield every record once, in declaration order of the enums.

    Static records never carry an end endpoint, so with ``include_end``
    they contribute one record per (init, easing) instead of one per end.
    """
    kinds = list(MovementKind) if movement_kinds is None else [MovementKind(k) for k in movement_kinds]
    eases = list(Easing) if easings is None else [Easing(e) for e in easings]
    if not kinds:
        raise ValueError("movement_kinds must not be empty")
    if not eases:
        raise ValueError("easings must not be empty")
    if frame_count < 2 and any(k != MovementKind.STATIC for k in kinds):
        raise ValueError("moving shots need frame_count >= 2")
    kinds = sorted(set(kinds), key=list(MovementKind).index)
    eases = sorted(set(eases), key=list(Easing).index)
    for init in _endpoints():
        for kind in kinds:
            for ease in eases:
                movement = MovementSpec(kind, ease, frame_count)
                if include_end and kind != MovementKind.STATIC:
                    for end in _endpoints():
                        yield ScdRecord(init, movement, end)
                else:
                    yield ScdRecord(init, movement, None)


def count_scds(include_end: bool = False, movement_kinds=None, easings=None) -> int:
    """Closed-form size of :func:`enumerate_scds` for the same arguments."""
    kinds = set(MovementKind) if movement_kinds is None else {MovementKind(k) for k in movement_kinds}
    n_ease = len(Easing) if easings is None else len({Easing(e) for e in easings})
    moving = len(kinds - {MovementKind.STATIC})
    static = len(kinds) - moving
    per_init = n_ease * (static + moving * (ENDPOINT_COUNT if include_end else 1))
    return ENDPOINT_COUNT * per_init
