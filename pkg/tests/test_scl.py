import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cinecam.scl import (CameraAngleSpec, DuplicateKeyError, Easing, Elevation, EndpointSpec, FramingCell,
                         MovementKind, MovementSpec, ScdError, ScdRecord, ScdSyntaxError, ShotType, Side,
                         UnknownTokenError, count_scds, enumerate_scds, format_scd, parse_scd, validate_scd)

FULL = ("shot=CU angle=eye_level side=front frame=center; move=orbit ease=ease_in_out dur=30 "
        "-> shot=LS angle=high side=left frame=middle_left")

endpoints = st.builds(
    EndpointSpec,
    st.sampled_from(ShotType),
    st.builds(CameraAngleSpec, st.sampled_from(Elevation), st.sampled_from(Side)),
    st.sampled_from(FramingCell),
)


@st.composite
def records(draw):
    kind = draw(st.sampled_from(MovementKind))
    dur = draw(st.integers(1 if kind == MovementKind.STATIC else 2, 600))
    movement = MovementSpec(kind, draw(st.sampled_from(Easing)), dur)
    init = draw(endpoints)
    if kind == MovementKind.STATIC:
        end = draw(st.sampled_from([None, init]))
    else:
        end = draw(st.one_of(st.none(), endpoints))
    return ScdRecord(init, movement, end)


def test_parse_full_line():
    rec = parse_scd(FULL)
    assert rec.init == EndpointSpec(ShotType.CU, CameraAngleSpec(Elevation.EYE_LEVEL, Side.FRONT), FramingCell.CENTER)
    assert rec.movement == MovementSpec(MovementKind.ORBIT, Easing.EASE_IN_OUT, 30)
    assert rec.end.framing == FramingCell.MIDDLE_LEFT
    assert format_scd(rec) == FULL


def test_parse_defaults_and_absent_end():
    rec = parse_scd("shot=ECU angle=low side=back frame=top_right; move=static")
    assert rec.end is None
    assert rec.movement == MovementSpec(MovementKind.STATIC, Easing.LINEAR, 30)
    assert "->" not in format_scd(rec)
    assert parse_scd(format_scd(rec) + "\n") == rec


def test_unknown_token_names_field():
    with pytest.raises(UnknownTokenError) as info:
        parse_scd("shot=XXL angle=low side=back frame=top_right; move=static")
    assert info.value.field == "shot"
    assert info.value.token == "XXL"
    assert info.value.offset == 5


@pytest.mark.parametrize("line, error", [
    ("shot=CU angle=low side=back frame=center move=static", ScdSyntaxError),
    ("shot=CU shot=CU angle=low side=back frame=center; move=static", DuplicateKeyError),
    ("shot=CU angle=low side=back frame=center; move=pan dur=0", ScdSyntaxError),
    ("shot=CU angle=low side=back frame=center;move=static", ScdSyntaxError),
    ("shot=CU angle=low side=back frame=center; move=static; move=pan", ScdSyntaxError),
    ("shot=CU angle=low side=back frame=center; move=pan ease=jerky", UnknownTokenError),
])
def test_malformed_lines_are_rejected(line, error):
    with pytest.raises(error):
        parse_scd(line)


def test_syntax_error_reports_byte_offset():
    with pytest.raises(ScdSyntaxError) as info:
        parse_scd("shot=CU angle=low side=back frame=center")
    assert info.value.offset == len("shot=CU angle=low side=back frame=center")


def test_validate_examples():
    init = parse_scd(FULL).init
    other = parse_scd(FULL).end
    assert validate_scd(parse_scd(FULL)) == []
    bad_static = ScdRecord(init, MovementSpec(MovementKind.STATIC), other)
    assert len(validate_scd(bad_static)) == 1
    short_orbit = ScdRecord(init, MovementSpec(MovementKind.ORBIT, Easing.LINEAR, 1))
    problems = validate_scd(short_orbit)
    assert len(problems) == 1 and "dur" in problems[0]
    with pytest.raises(ScdError):
        parse_scd("shot=CU angle=low side=back frame=center; move=orbit dur=1")


@given(records())
def test_parse_format_roundtrip(rec):
    line = format_scd(rec)
    assert format_scd(rec) == line
    assert "\n" not in line
    assert parse_scd(line) == rec


def test_enumerator_counts():
    assert count_scds() == 92160
    assert count_scds(movement_kinds=["orbit"], easings=["linear"]) == 2880
    assert sum(1 for _ in enumerate_scds(movement_kinds=["pan"], easings=["ease_in"])) == 2880
    with pytest.raises(ValueError):
        list(enumerate_scds(movement_kinds=[]))


def test_enumerator_is_exhaustive_without_duplicates():
    recs = list(enumerate_scds(movement_kinds=["tilt", "static"], easings=["linear", "ease_out"]))
    assert len(set(recs)) == len(recs) == count_scds(movement_kinds=["tilt", "static"], easings=["linear", "ease_out"])
    first = recs[0]
    assert first.init.shot == ShotType.ECU and first.movement.kind == MovementKind.STATIC


def test_enumerator_with_ends_matches_closed_form():
    stream = enumerate_scds(include_end=True, movement_kinds=["crane"], easings=["linear"])
    head = list(itertools.islice(stream, 2880 + 3))
    assert all(r.end is not None for r in head)
    assert count_scds(include_end=True, movement_kinds=["crane"], easings=["linear"]) == 2880 * 2880
    static = list(enumerate_scds(include_end=True, movement_kinds=["static"], easings=["linear"]))
    assert len(static) == 2880 and all(r.end is None for r in static)


def test_enumerated_records_roundtrip():
    for rec in enumerate_scds(movement_kinds=["orbit"], easings=["ease_in_out"]):
        assert parse_scd(format_scd(rec)) == rec
