"""Streaming engine: per-case state table plus a sliding transition window.

Every incoming event is turned into one transition: (previous class of its
case, current class), or (start token, class) for a case's first event.
The transition enters a FIFO window of the last ``window_size`` transitions
whose occurrence counts form the emitted matrix.  A hash map from open
case id to its last class makes each update O(1) regardless of how many
cases are interleaved.

Case ends (explicit marker, idle eviction, or end-of-input flush) emit one
extra transition into the end token and remove the case from the table.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Iterator, Sequence

from .errors import UnknownCaseError
from .events import Event, derive_event_class
from .registry import END, OTHER, START, Vocabulary


class FeatureFrame:
    """Per-event output: the emitted transition and the window matrix.

    ``cells`` holds the nonzero matrix entries as ``((row, col), count)``
    pairs in arbitrary order (it is a snapshot of the window's count map);
    ``entries`` is the canonical ``(row, col, count)`` view sorted by
    (row, col), computed on first access.  ``cells`` is None when the
    engine runs with matrix emission disabled.
    """

    __slots__ = ("seq", "case_id", "timestamp", "transition", "cells", "_entries")

    def __init__(
        self,
        seq: int,
        case_id: str,
        timestamp: int,
        transition: tuple[int, int],
        cells: list[tuple[tuple[int, int], int]] | None,
    ):
        self.seq = seq
        self.case_id = case_id
        self.timestamp = timestamp
        self.transition = transition
        self.cells = cells
        self._entries = None

    @property
    def entries(self) -> list[tuple[int, int, int]] | None:
        if self._entries is None and self.cells is not None:
            self._entries = [
                (ij[0], ij[1], count) for ij, count in sorted(self.cells)
            ]
        return self._entries

    def counts(self) -> dict[tuple[int, int], int] | None:
        """The window matrix as a (row, col) -> count map."""
        return None if self.cells is None else dict(self.cells)

    def window_mass(self) -> int:
        """Sum of all matrix entries (= transitions in the window)."""
        return 0 if self.cells is None else sum(c for _, c in self.cells)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureFrame):
            return NotImplemented
        return (
            self.seq == other.seq
            and self.case_id == other.case_id
            and self.timestamp == other.timestamp
            and tuple(self.transition) == tuple(other.transition)
            and self.counts() == other.counts()
        )

    def __repr__(self) -> str:
        return (
            f"FeatureFrame(seq={self.seq}, case_id={self.case_id!r}, "
            f"timestamp={self.timestamp}, transition={self.transition}, "
            f"nnz={len(self.cells) if self.cells is not None else None})"
        )


class Engine:
    """Folds an ordered event stream into feature frames.

    One instance is strictly single-threaded: its state is mutated by one
    consumer of one ordered stream.  It may be handed between threads, but
    never shared mutably.
    """

    def __init__(
        self,
        vocab: Vocabulary,
        window_size: int,
        class_fields: Sequence[str],
        emit_matrices: bool = True,
    ):
        if window_size < 1:
            raise ValueError(f"window_size must be >= 1, got {window_size}")
        if not class_fields:
            raise ValueError("class_fields must be non-empty")
        self.vocab = vocab
        self.window_size = window_size
        self.class_fields = list(class_fields)
        self.emit_matrices = emit_matrices
        self._open: dict[str, list[int]] = {}  # case_id -> [class_id, last_seen]
        self._buffer: deque[tuple[int, int]] = deque()
        self._counts: dict[tuple[int, int], int] = {}
        self._seq = 0
        self._last_ts: int | None = None
        self._single_field = class_fields[0] if len(class_fields) == 1 else None
        self._class_index = vocab.index

    @property
    def open_case_count(self) -> int:
        return len(self._open)

    @property
    def frames_emitted(self) -> int:
        return self._seq

    def open_cases(self) -> dict[str, tuple[int, int]]:
        """Snapshot of the case table: case_id -> (last class id, last seen)."""
        return {cid: (rec[0], rec[1]) for cid, rec in self._open.items()}

    def process_event(self, event: Event) -> list[FeatureFrame]:
        """Advance on one event; returns its frame, plus an end frame if the
        event carries the end-of-case marker."""
        # Hot path: inlined label derivation and window push.
        ts = event.timestamp
        self._last_ts = ts
        field = self._single_field
        if field is not None:
            # Inlined single-field derive_event_class; last occurrence wins,
            # matching dict(attributes) semantics.
            label = None
            for name, value in event.attributes:
                if name == field:
                    label = value
            if label is None:
                label = derive_event_class(event.attributes, self.class_fields)
            elif "\\" in label or "|" in label:
                label = label.replace("\\", "\\\\").replace("|", "\\|")
        else:
            label = derive_event_class(event.attributes, self.class_fields)
        cls = self._class_index.get(label, OTHER)

        case_id = event.case_id
        rec = self._open.get(case_id)
        if rec is None:
            transition = (START, cls)
            self._open[case_id] = [cls, ts]
        else:
            transition = (rec[0], cls)
            rec[0] = cls
            rec[1] = ts

        frames = [self._push(transition, case_id, ts)]
        if event.is_end:
            frames.append(self._close(case_id, ts))
        return frames

    def close_case(self, case_id: str, at: int) -> FeatureFrame:
        """Emit the end-token transition for an open case and forget it.

        Raises:
            UnknownCaseError: the case is not currently open.
        """
        if case_id not in self._open:
            raise UnknownCaseError(case_id)
        return self._close(case_id, at)

    def evict_idle(self, now: int, idle_timeout: int) -> list[FeatureFrame]:
        """Close every case idle for more than ``idle_timeout``.

        Cases are closed in ascending (last seen, case id) order; the end
        frames carry ``now`` as their timestamp.  Scans the whole case
        table, so callers should invoke it on timestamp advances rather
        than per event.
        """
        if idle_timeout <= 0:
            raise ValueError(f"idle_timeout must be > 0, got {idle_timeout}")
        expired = sorted(
            (rec[1], cid)
            for cid, rec in self._open.items()
            if now - rec[1] > idle_timeout
        )
        return [self._close(cid, now) for _, cid in expired]

    def flush(self, at: int | None = None) -> list[FeatureFrame]:
        """Close all open cases (end-of-input), oldest first.

        ``at`` defaults to the last timestamp the engine has seen.
        """
        if at is None:
            at = self._last_ts if self._last_ts is not None else 0
        remaining = sorted((rec[1], cid) for cid, rec in self._open.items())
        return [self._close(cid, at) for _, cid in remaining]

    def _close(self, case_id: str, at: int) -> FeatureFrame:
        rec = self._open.pop(case_id)
        return self._push((rec[0], END), case_id, at)

    def _push(
        self, transition: tuple[int, int], case_id: str, ts: int
    ) -> FeatureFrame:
        counts = self._counts
        buffer = self._buffer
        buffer.append(transition)
        counts[transition] = counts.get(transition, 0) + 1
        if len(buffer) > self.window_size:
            oldest = buffer.popleft()
            remaining = counts[oldest] - 1
            if remaining:
                counts[oldest] = remaining
            else:
                del counts[oldest]
        seq = self._seq
        self._seq = seq + 1
        cells = list(counts.items()) if self.emit_matrices else None
        return FeatureFrame(seq, case_id, ts, transition, cells)


def run_stream(
    events: Iterable[Event],
    vocab: Vocabulary,
    window_size: int,
    class_fields: Sequence[str],
    idle_timeout: int | None = None,
    flush: bool = False,
    emit_matrices: bool = True,
) -> Iterator[FeatureFrame]:
    """Fold a timestamp-ordered event stream into feature frames.

    Frame sequence numbers are dense and start at 0.  When ``idle_timeout``
    is set, idle cases are evicted whenever the stream timestamp advances,
    before the advancing event is processed.  With ``flush``, all cases
    still open at end-of-input are closed with end frames.
    """
    engine = Engine(
        vocab, window_size, class_fields, emit_matrices=emit_matrices
    )
    last_ts: int | None = None
    for event in events:
        if (
            idle_timeout is not None
            and last_ts is not None
            and event.timestamp > last_ts
        ):
            yield from engine.evict_idle(event.timestamp, idle_timeout)
        last_ts = event.timestamp
        yield from engine.process_event(event)
    if flush:
        yield from engine.flush()
