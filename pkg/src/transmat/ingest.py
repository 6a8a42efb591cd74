"""Event stream parsing and k-way timestamp merge.

Supports NDJSON (one JSON object per line) and RFC-4180 CSV with a header
row.  Multiple per-source logs are merged into one timestamp-ordered
stream; ties are broken by source id and then by within-source position so
the merged output is fully deterministic.
"""

from __future__ import annotations

import csv
import heapq
import json
import logging
import sys
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import OutOfOrderError, ParseError
from .events import Event

logger = logging.getLogger(__name__)

FORMATS = ("ndjson", "csv")

_TRUE_STRINGS = frozenset({"1", "true", "yes"})
_FALSE_STRINGS = frozenset({"", "0", "false", "no"})


@dataclass
class StreamSchema:
    """Field mapping for one log layout.

    ``ts_field`` is optional: without it, each event's timestamp is its
    0-based position in the source (the merge only needs order, not wall
    time).  ``end_field`` is optional; when set, a truthy value marks the
    final event of a case, and absence of the field means "not an end".
    ``class_fields`` are the attribute names whose values form the event
    class label.
    """

    case_field: str
    ts_field: str | None = None
    end_field: str | None = None
    class_fields: list[str] = field(default_factory=list)


@dataclass
class StreamSource:
    """One input log: an id (unique across a merge), a format, a path.

    ``path`` may be ``"-"`` for standard input.
    """

    source_id: str
    format: str
    path: str

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ValueError(f"unknown stream format {self.format!r}")


def parse_stream(
    source: StreamSource, schema: StreamSchema, strict: bool = True
) -> Iterator[Event]:
    """Parse one source into events, in file order.

    Malformed records raise ``ParseError`` with their line number when
    ``strict``; otherwise they are logged with the line number and
    skipped.
    """
    if source.path == "-":
        yield from _parse_lines(sys.stdin, source, schema, strict)
    else:
        with open(source.path, encoding="utf-8", newline="") as fh:
            yield from _parse_lines(fh, source, schema, strict)


def _parse_lines(fh, source: StreamSource, schema: StreamSchema, strict: bool):
    if source.format == "ndjson":
        records = _ndjson_records(fh)
    else:
        records = _csv_records(fh)
    position = 0
    # Per-line problems arrive as ParseError *values* so that one bad line
    # does not kill the generator when we want to skip and keep reading.
    for line_no, record in records:
        if not isinstance(record, ParseError):
            try:
                yield _build_event(record, line_no, schema, position)
                position += 1
                continue
            except ParseError as err:
                record = err
        if strict:
            raise record
        logger.warning(
            "%s:%s skipped: %s", source.source_id, record.line_no, record.reason
        )


def _ndjson_records(fh) -> Iterator[tuple[int, dict | ParseError]]:
    for line_no, line in enumerate(fh, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as err:
            yield line_no, ParseError(line_no, f"invalid JSON: {err.msg}")
            continue
        if not isinstance(record, dict):
            yield line_no, ParseError(line_no, "record is not a JSON object")
            continue
        yield line_no, record


def _csv_records(fh) -> Iterator[tuple[int, dict | ParseError]]:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        return
    if len(set(header)) != len(header):
        # A broken header makes every row unreadable: fatal even when
        # non-strict parsing would skip individual records.
        raise ParseError(1, "duplicate column names in header")
    width = len(header)
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != width:
            yield line_no, ParseError(
                line_no, f"expected {width} columns, got {len(row)}"
            )
            continue
        yield line_no, dict(zip(header, row))


def _build_event(
    record: dict, line_no: int, schema: StreamSchema, position: int
) -> Event:
    if schema.case_field not in record:
        raise ParseError(line_no, f"missing case field {schema.case_field!r}")
    case_id = record[schema.case_field]
    if isinstance(case_id, int) and not isinstance(case_id, bool):
        case_id = str(case_id)
    if not isinstance(case_id, str) or not case_id:
        raise ParseError(line_no, "case id must be a non-empty string")

    if schema.ts_field is not None:
        if schema.ts_field not in record:
            raise ParseError(line_no, f"missing timestamp field {schema.ts_field!r}")
        timestamp = _parse_timestamp(record[schema.ts_field], line_no)
    else:
        timestamp = position

    is_end = False
    if schema.end_field is not None and schema.end_field in record:
        is_end = _parse_end_marker(record[schema.end_field], line_no)

    reserved = {schema.case_field, schema.ts_field, schema.end_field}
    attributes = [
        (name, _attribute_value(value))
        for name, value in record.items()
        if name not in reserved
    ]
    return Event(
        case_id=case_id, timestamp=timestamp, attributes=attributes, is_end=is_end
    )


def _parse_timestamp(value, line_no: int) -> int:
    if isinstance(value, bool):
        raise ParseError(line_no, "timestamp must be a non-negative integer")
    if isinstance(value, str):
        try:
            value = int(value.strip())
        except ValueError:
            raise ParseError(line_no, f"invalid timestamp {value!r}") from None
    if not isinstance(value, int):
        raise ParseError(line_no, "timestamp must be a non-negative integer")
    if value < 0:
        raise ParseError(line_no, f"negative timestamp {value}")
    return value


def _parse_end_marker(value, line_no: int) -> bool:
    if isinstance(value, bool):
        return value
    if value is None:
        return False
    if isinstance(value, int):
        return value != 0
    if isinstance(value, str):
        lowered = value.strip().lower()
        if lowered in _TRUE_STRINGS:
            return True
        if lowered in _FALSE_STRINGS:
            return False
    raise ParseError(line_no, f"invalid end marker {value!r}")


def _attribute_value(value) -> str:
    if isinstance(value, str):
        return value
    return json.dumps(value, ensure_ascii=False, separators=(",", ":"))


def merge_streams(
    streams: Iterable[tuple[str, Iterable[Event]]], reorder_horizon: int = 0
) -> Iterator[Event]:
    """K-way merge of per-source event streams by timestamp.

    Each input stream must be individually non-decreasing in timestamp.
    With ``reorder_horizon == 0`` (the default) any inversion raises
    ``OutOfOrderError``.  A positive horizon buffers up to that many events
    per stream and repairs inversions whose displacement fits the buffer;
    inversions beyond it still raise.

    Equal timestamps are ordered by (source id, within-source position),
    so the merge is deterministic.
    """
    streams = list(streams)
    seen_ids = set()
    for source_id, _ in streams:
        if source_id in seen_ids:
            raise ValueError(f"duplicate source id {source_id!r}")
        seen_ids.add(source_id)
    keyed = [
        _keyed_stream(source_id, events, reorder_horizon)
        for source_id, events in streams
    ]
    for _, _, _, event in heapq.merge(*keyed):
        yield event


def _keyed_stream(source_id: str, events: Iterable[Event], horizon: int):
    """Yield (ts, source_id, position, event), enforcing or repairing order."""
    if horizon < 0:
        raise ValueError(f"reorder_horizon must be >= 0, got {horizon}")
    if horizon == 0:
        last = None
        for position, event in enumerate(events):
            if last is not None and event.timestamp < last:
                raise OutOfOrderError(source_id, position)
            last = event.timestamp
            yield event.timestamp, source_id, position, event
        return

    # Bounded repair: hold back up to `horizon` events in a min-heap keyed by
    # (timestamp, arrival index); the arrival index keeps equal timestamps
    # stable.  An event still out of order after buffering is unrepairable.
    buffer: list[tuple[int, int, Event]] = []
    emitted = 0
    last = None
    for arrival, event in enumerate(events):
        heapq.heappush(buffer, (event.timestamp, arrival, event))
        if len(buffer) > horizon:
            ts, arrival_idx, ev = heapq.heappop(buffer)
            if last is not None and ts < last:
                raise OutOfOrderError(source_id, arrival_idx)
            last = ts
            yield ts, source_id, emitted, ev
            emitted += 1
    while buffer:
        ts, arrival_idx, ev = heapq.heappop(buffer)
        if last is not None and ts < last:
            raise OutOfOrderError(source_id, arrival_idx)
        last = ts
        yield ts, source_id, emitted, ev
        emitted += 1


def read_events(
    sources: Iterable[StreamSource],
    schema: StreamSchema,
    strict: bool = True,
    reorder_horizon: int = 0,
) -> Iterator[Event]:
    """Parse and merge several sources into one ordered event stream."""
    streams = [
        (source.source_id, parse_stream(source, schema, strict=strict))
        for source in sources
    ]
    return merge_streams(streams, reorder_horizon=reorder_horizon)
