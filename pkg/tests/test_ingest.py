"""Parsing, validation, and the k-way timestamp merge."""

import pytest

from transmat import (
    Event,
    OutOfOrderError,
    ParseError,
    StreamSchema,
    StreamSource,
    merge_streams,
    parse_stream,
    read_events,
)

SCHEMA = StreamSchema(case_field="case", ts_field="ts", end_field="end",
                      class_fields=["ec"])


def ndjson_source(tmp_path, text, name="a.ndjson"):
    path = tmp_path / name
    path.write_text(text)
    return StreamSource(source_id=name, format="ndjson", path=str(path))


def csv_source(tmp_path, text, name="a.csv"):
    path = tmp_path / name
    path.write_text(text)
    return StreamSource(source_id=name, format="csv", path=str(path))


def test_ndjson_basic(tmp_path):
    source = ndjson_source(tmp_path, '{"case":"◊","ts":5,"ec":"c"}\n')
    [event] = list(parse_stream(source, SCHEMA))
    assert event == Event(case_id="◊", timestamp=5,
                          attributes=[("ec", "c")], is_end=False)


def test_csv_matches_ndjson(tmp_path):
    source = csv_source(tmp_path, "case,ts,ec\n◊,5,c\n")
    [event] = list(parse_stream(source, SCHEMA))
    assert event == Event(case_id="◊", timestamp=5,
                          attributes=[("ec", "c")], is_end=False)


def test_blank_lines_skipped(tmp_path):
    source = ndjson_source(tmp_path, '\n{"case":"c1","ts":1,"ec":"a"}\n\n')
    assert len(list(parse_stream(source, SCHEMA))) == 1


def test_missing_case_field(tmp_path):
    source = ndjson_source(tmp_path, '{"ts":1,"ec":"a"}\n')
    with pytest.raises(ParseError) as err:
        list(parse_stream(source, SCHEMA))
    assert err.value.line_no == 1
    assert "case" in err.value.reason


def test_invalid_json_reports_line(tmp_path):
    source = ndjson_source(
        tmp_path, '{"case":"c1","ts":1,"ec":"a"}\nnot json\n')
    with pytest.raises(ParseError) as err:
        list(parse_stream(source, SCHEMA))
    assert err.value.line_no == 2


def test_non_strict_skips_and_continues(tmp_path, caplog):
    source = ndjson_source(
        tmp_path,
        '{"case":"c1","ts":1,"ec":"a"}\n'
        'broken\n'
        '{"case":"c1","ts":2,"ec":"b"}\n')
    with caplog.at_level("WARNING"):
        events = list(parse_stream(source, SCHEMA, strict=False))
    assert [e.timestamp for e in events] == [1, 2]
    assert any("2" in rec.getMessage() for rec in caplog.records)


def test_integer_case_id_coerced(tmp_path):
    source = ndjson_source(tmp_path, '{"case":7,"ts":1,"ec":"a"}\n')
    [event] = list(parse_stream(source, SCHEMA))
    assert event.case_id == "7"


def test_empty_case_id_rejected(tmp_path):
    source = ndjson_source(tmp_path, '{"case":"","ts":1,"ec":"a"}\n')
    with pytest.raises(ParseError):
        list(parse_stream(source, SCHEMA))


def test_string_timestamp_coerced(tmp_path):
    source = ndjson_source(tmp_path, '{"case":"c1","ts":" 42 ","ec":"a"}\n')
    [event] = list(parse_stream(source, SCHEMA))
    assert event.timestamp == 42


@pytest.mark.parametrize("ts", ['"x"', "-1", "1.5", "true"])
def test_bad_timestamps_rejected(tmp_path, ts):
    source = ndjson_source(tmp_path, f'{{"case":"c1","ts":{ts},"ec":"a"}}\n')
    with pytest.raises(ParseError):
        list(parse_stream(source, SCHEMA))


def test_position_timestamp_when_no_ts_field(tmp_path):
    schema = StreamSchema(case_field="case", class_fields=["ec"])
    source = ndjson_source(
        tmp_path, '{"case":"c1","ec":"a"}\n{"case":"c1","ec":"b"}\n')
    events = list(parse_stream(source, schema))
    assert [e.timestamp for e in events] == [0, 1]


@pytest.mark.parametrize("raw,expected", [
    ("true", True), ("false", False), ("1", True), ("0", False),
    ('"yes"', True), ('"no"', False), ('"1"', True), ('""', False),
])
def test_end_marker_forms(tmp_path, raw, expected):
    source = ndjson_source(
        tmp_path, f'{{"case":"c1","ts":1,"end":{raw},"ec":"a"}}\n')
    [event] = list(parse_stream(source, SCHEMA))
    assert event.is_end is expected


def test_end_marker_garbage_rejected(tmp_path):
    source = ndjson_source(
        tmp_path, '{"case":"c1","ts":1,"end":"maybe","ec":"a"}\n')
    with pytest.raises(ParseError):
        list(parse_stream(source, SCHEMA))


def test_attributes_keep_record_order_and_skip_reserved(tmp_path):
    source = ndjson_source(
        tmp_path, '{"z":"last?","case":"c1","ts":1,"ec":"a","n":3}\n')
    [event] = list(parse_stream(source, SCHEMA))
    assert event.attributes == [("z", "last?"), ("ec", "a"), ("n", "3")]


def test_non_string_attributes_become_json(tmp_path):
    source = ndjson_source(
        tmp_path, '{"case":"c1","ts":1,"ec":"a","meta":{"p":1}}\n')
    [event] = list(parse_stream(source, SCHEMA))
    assert ("meta", '{"p":1}') in event.attributes


def test_csv_duplicate_header_rejected(tmp_path):
    source = csv_source(tmp_path, "case,ts,ts\nc1,1,2\n")
    with pytest.raises(ParseError) as err:
        list(parse_stream(source, SCHEMA))
    assert err.value.line_no == 1


def test_csv_ragged_row_rejected(tmp_path):
    source = csv_source(tmp_path, "case,ts,ec\nc1,1\n")
    with pytest.raises(ParseError) as err:
        list(parse_stream(source, SCHEMA))
    assert err.value.line_no == 2


def test_unknown_format_rejected():
    with pytest.raises(ValueError):
        StreamSource(source_id="x", format="xml", path="x.xml")


def events_at(times, source="s"):
    return [Event(f"{source}{i}", t, [("ec", "a")]) for i, t in enumerate(times)]


def test_merge_orders_by_timestamp():
    merged = list(merge_streams([("A", events_at([1, 3])),
                                 ("B", events_at([2]))]))
    assert [e.timestamp for e in merged] == [1, 2, 3]


def test_merge_tie_breaks_by_source_id():
    a = [Event("a0", 1, [("ec", "a")])]
    b = [Event("b0", 1, [("ec", "b")])]
    merged = list(merge_streams([("B", b), ("A", a)]))
    assert [e.case_id for e in merged] == ["a0", "b0"]


def test_merge_tie_breaks_by_position_within_source():
    events = events_at([5, 5, 5])
    merged = list(merge_streams([("A", events)]))
    assert merged == events


def test_single_stream_is_identity():
    events = events_at([1, 2, 2, 4])
    assert list(merge_streams([("A", events)])) == events


def test_merge_rejects_duplicate_source_ids():
    with pytest.raises(ValueError):
        list(merge_streams([("A", []), ("A", [])]))


def test_out_of_order_raises_by_default():
    with pytest.raises(OutOfOrderError) as err:
        list(merge_streams([("A", events_at([3, 1]))]))
    assert err.value.source_id == "A"
    assert err.value.position == 1


def test_reorder_horizon_repairs_local_jitter():
    merged = list(merge_streams([("A", events_at([2, 1, 3]))],
                                reorder_horizon=2))
    assert [e.timestamp for e in merged] == [1, 2, 3]


def test_reorder_horizon_keeps_tie_arrival_order():
    events = events_at([4, 4, 1])
    merged = list(merge_streams([("A", events)], reorder_horizon=4))
    assert [e.case_id for e in merged] == ["s2", "s0", "s1"]


def test_inversion_beyond_horizon_still_raises():
    times = [10, 11, 12, 13, 1]
    with pytest.raises(OutOfOrderError):
        list(merge_streams([("A", events_at(times))], reorder_horizon=2))


def test_read_events_merges_files(tmp_path):
    a = ndjson_source(tmp_path, '{"case":"c1","ts":1,"ec":"a"}\n'
                                '{"case":"c1","ts":3,"ec":"b"}\n', "a.ndjson")
    b = ndjson_source(tmp_path, '{"case":"c2","ts":2,"ec":"a"}\n', "b.ndjson")
    events = list(read_events([a, b], SCHEMA))
    assert [(e.case_id, e.timestamp) for e in events] == [
        ("c1", 1), ("c2", 2), ("c1", 3)]
