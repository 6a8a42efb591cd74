"""Feature frame serialization: sparse NDJSON and dense CSV.

Sparse NDJSON is the default output: one JSON object per frame with the
nonzero matrix entries sorted by (row, col).  Dense CSV flattens the full
matrix row-major (row = transition source, col = destination) into dim^2
columns.  Both formats round-trip exactly and decode to identical
matrices.  With ``normalize``, counts are divided by the window size and
written with 9 significant digits.
"""

from __future__ import annotations

import csv
import json
import math
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, Iterator

from .engine import FeatureFrame
from .errors import FormatError

SPARSE_NDJSON = "sparse-ndjson"
DENSE_CSV = "dense-csv"
FRAME_FORMATS = (SPARSE_NDJSON, DENSE_CSV)

_DENSE_META_COLUMNS = ["seq", "case", "ts", "tr_from", "tr_to"]


@contextmanager
def _open_sink(sink):
    if hasattr(sink, "write"):
        yield sink
    elif sink == "-":
        yield sys.stdout
    else:
        with open(sink, "w", encoding="utf-8", newline="") as fh:
            yield fh


@contextmanager
def _open_source(source):
    if hasattr(source, "read"):
        yield source
    elif source == "-":
        yield sys.stdin
    else:
        with open(source, encoding="utf-8", newline="") as fh:
            yield fh


def write_frames(
    frames: Iterable[FeatureFrame],
    sink,
    format: str = SPARSE_NDJSON,
    *,
    dim: int | None = None,
    window_size: int | None = None,
    normalize: bool = False,
) -> int:
    """Serialize frames to ``sink`` (a path, ``"-"`` for stdout, or a file
    object).  Dense CSV requires ``dim``; ``normalize`` requires
    ``window_size``.  Returns the number of frames written."""
    if format not in FRAME_FORMATS:
        raise ValueError(f"unknown frame format {format!r}")
    if normalize and not window_size:
        raise ValueError("normalize requires window_size")
    if format == DENSE_CSV and not dim:
        raise ValueError("dense-csv requires dim")
    with _open_sink(sink) as fh:
        if format == SPARSE_NDJSON:
            return _write_sparse(frames, fh, window_size if normalize else None)
        return _write_dense(frames, fh, dim, window_size if normalize else None)


def _cell_value(count: int, divisor: int | None) -> str:
    if divisor is None:
        return str(count)
    return format(count / divisor, ".9g")


def _write_sparse(frames, fh, divisor) -> int:
    written = 0
    for frame in frames:
        entries = frame.entries
        if entries is None:
            raise ValueError("frame has no matrix (emission was disabled)")
        cells = ",".join(
            f"[{i},{j},{_cell_value(c, divisor)}]" for i, j, c in entries
        )
        case = json.dumps(frame.case_id, ensure_ascii=False)
        fh.write(
            f'{{"seq":{frame.seq},"case":{case},"ts":{frame.timestamp},'
            f'"tr":[{frame.transition[0]},{frame.transition[1]}],"m":[{cells}]}}\n'
        )
        written += 1
    return written


def _write_dense(frames, fh, dim, divisor) -> int:
    writer = csv.writer(fh, lineterminator="\n")
    header = _DENSE_META_COLUMNS + [
        f"m{r}_{c}" for r in range(dim) for c in range(dim)
    ]
    writer.writerow(header)
    written = 0
    for frame in frames:
        if frame.cells is None:
            raise ValueError("frame has no matrix (emission was disabled)")
        row = ["0"] * (dim * dim)
        for (i, j), count in frame.cells:
            if i >= dim or j >= dim:
                raise ValueError(
                    f"matrix entry ({i},{j}) out of range for dim={dim}"
                )
            row[i * dim + j] = _cell_value(count, divisor)
        writer.writerow(
            [
                frame.seq,
                frame.case_id,
                frame.timestamp,
                frame.transition[0],
                frame.transition[1],
            ]
            + row
        )
        written += 1
    return written


def read_frames(source, format: str = SPARSE_NDJSON) -> Iterator[FeatureFrame]:
    """Deserialize frames from ``source`` (inverse of :func:`write_frames`).

    Validates structure; in particular, sparse entry lists must be strictly
    sorted by (row, col).  Raises ``FormatError`` with the offending line.
    """
    if format not in FRAME_FORMATS:
        raise ValueError(f"unknown frame format {format!r}")
    with _open_source(source) as fh:
        if format == SPARSE_NDJSON:
            yield from _read_sparse(fh)
        else:
            yield from _read_dense(fh)


def _read_sparse(fh) -> Iterator[FeatureFrame]:
    for line_no, line in enumerate(fh, start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as err:
            raise FormatError(line_no, f"invalid JSON: {err.msg}")
        if not isinstance(doc, dict):
            raise FormatError(line_no, "frame is not a JSON object")
        try:
            seq = doc["seq"]
            case_id = doc["case"]
            ts = doc["ts"]
            tr = doc["tr"]
            m = doc["m"]
        except KeyError as err:
            raise FormatError(line_no, f"missing key {err.args[0]!r}") from None
        if (
            not isinstance(tr, list)
            or len(tr) != 2
            or not all(isinstance(x, int) for x in tr)
        ):
            raise FormatError(line_no, "tr must be a pair of integers")
        if not isinstance(m, list):
            raise FormatError(line_no, "m must be a list")
        cells = []
        previous = None
        for entry in m:
            if not isinstance(entry, list) or len(entry) != 3:
                raise FormatError(line_no, "m entries must be [row, col, count]")
            i, j, count = entry
            if not isinstance(i, int) or not isinstance(j, int) or i < 0 or j < 0:
                raise FormatError(line_no, "m indices must be non-negative integers")
            if not isinstance(count, (int, float)) or count <= 0:
                raise FormatError(line_no, "m counts must be positive numbers")
            if previous is not None and (i, j) <= previous:
                raise FormatError(line_no, "m entries not sorted by (row, col)")
            previous = (i, j)
            cells.append(((i, j), count))
        yield FeatureFrame(seq, case_id, ts, (tr[0], tr[1]), cells)


def _read_dense(fh) -> Iterator[FeatureFrame]:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        return
    if header[: len(_DENSE_META_COLUMNS)] != _DENSE_META_COLUMNS:
        raise FormatError(1, f"expected header starting with {_DENSE_META_COLUMNS}")
    n_cells = len(header) - len(_DENSE_META_COLUMNS)
    dim = math.isqrt(n_cells)
    if dim * dim != n_cells or n_cells == 0:
        raise FormatError(1, f"{n_cells} matrix columns is not a square")
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise FormatError(line_no, "wrong number of columns")
        try:
            seq = int(row[0])
            ts = int(row[2])
            tr = (int(row[3]), int(row[4]))
        except ValueError as err:
            raise FormatError(line_no, str(err)) from None
        cells = []
        for flat, text in enumerate(row[5:]):
            value = _parse_cell(text, line_no)
            if value:
                cells.append(((flat // dim, flat % dim), value))
        yield FeatureFrame(seq, row[1], ts, tr, cells)


def _parse_cell(text: str, line_no: int):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise FormatError(line_no, f"invalid matrix cell {text!r}") from None
