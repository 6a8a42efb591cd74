"""Frame serialization: formats, validation, and round-trips."""

import io

import numpy as np
import pytest

from transmat import (
    DENSE_CSV,
    FeatureFrame,
    FormatError,
    SPARSE_NDJSON,
    read_frames,
    write_frames,
)

from oracle import random_frames


def frame(seq=17, case="c42", ts=123, tr=(3, 4), cells=None):
    if cells is None:
        cells = [((3, 4), 1), ((0, 3), 2)]  # deliberately unsorted
    return FeatureFrame(seq, case, ts, tr, cells)


def test_sparse_line_layout():
    sink = io.StringIO()
    write_frames([frame()], sink, SPARSE_NDJSON)
    assert sink.getvalue() == (
        '{"seq":17,"case":"c42","ts":123,"tr":[3,4],"m":[[0,3,2],[3,4,1]]}\n'
    )


def test_sparse_entries_sorted_by_row_then_col():
    sink = io.StringIO()
    cells = [((2, 0), 1), ((0, 5), 1), ((0, 1), 1)]
    write_frames([frame(cells=cells)], sink, SPARSE_NDJSON)
    assert '"m":[[0,1,1],[0,5,1],[2,0,1]]' in sink.getvalue()


def test_sparse_case_id_json_escaped():
    sink = io.StringIO()
    write_frames([frame(case='he said "hi"')], sink, SPARSE_NDJSON)
    [read_back] = list(read_frames(io.StringIO(sink.getvalue())))
    assert read_back.case_id == 'he said "hi"'


def test_normalized_cell_formatting():
    sink = io.StringIO()
    cells = [((0, 3), 2), ((3, 4), 1)]
    write_frames([frame(cells=cells)], sink, SPARSE_NDJSON,
                 window_size=3, normalize=True)
    assert "0.666666667" in sink.getvalue()
    assert "0.333333333" in sink.getvalue()


def test_normalize_requires_window_size():
    with pytest.raises(ValueError):
        write_frames([frame()], io.StringIO(), SPARSE_NDJSON, normalize=True)


def test_dense_layout():
    sink = io.StringIO()
    write_frames([frame(cells=[((0, 3), 1)])], sink, DENSE_CSV, dim=4)
    lines = sink.getvalue().splitlines()
    header = lines[0].split(",")
    assert header[:5] == ["seq", "case", "ts", "tr_from", "tr_to"]
    assert len(header) == 5 + 16
    assert header[5] == "m0_0" and header[-1] == "m3_3"
    row = lines[1].split(",")
    matrix = row[5:]
    assert matrix[3] == "1"
    assert all(cell == "0" for k, cell in enumerate(matrix) if k != 3)


def test_dense_requires_dim():
    with pytest.raises(ValueError):
        write_frames([frame()], io.StringIO(), DENSE_CSV)


def test_dense_rejects_out_of_range_cell():
    with pytest.raises(ValueError):
        write_frames([frame(cells=[((9, 9), 1)])], io.StringIO(),
                     DENSE_CSV, dim=4)


def test_unknown_format_rejected():
    with pytest.raises(ValueError):
        write_frames([frame()], io.StringIO(), "parquet")
    with pytest.raises(ValueError):
        list(read_frames(io.StringIO(""), "parquet"))


def test_frames_without_matrices_rejected():
    bare = FeatureFrame(0, "c", 0, (0, 3), None)
    with pytest.raises(ValueError):
        write_frames([bare], io.StringIO(), SPARSE_NDJSON)


def test_empty_input_yields_nothing():
    assert list(read_frames(io.StringIO(""), SPARSE_NDJSON)) == []
    assert list(read_frames(io.StringIO(""), DENSE_CSV)) == []


def test_read_sparse_rejects_unsorted_entries():
    line = '{"seq":0,"case":"c","ts":0,"tr":[0,3],"m":[[3,4,1],[0,3,2]]}\n'
    with pytest.raises(FormatError) as err:
        list(read_frames(io.StringIO(line)))
    assert "sorted" in err.value.reason


def test_read_sparse_rejects_duplicate_entries():
    line = '{"seq":0,"case":"c","ts":0,"tr":[0,3],"m":[[0,3,1],[0,3,1]]}\n'
    with pytest.raises(FormatError):
        list(read_frames(io.StringIO(line)))


def test_read_sparse_rejects_nonpositive_count():
    line = '{"seq":0,"case":"c","ts":0,"tr":[0,3],"m":[[0,3,0]]}\n'
    with pytest.raises(FormatError):
        list(read_frames(io.StringIO(line)))


def test_read_sparse_rejects_bad_transition():
    line = '{"seq":0,"case":"c","ts":0,"tr":[0],"m":[]}\n'
    with pytest.raises(FormatError):
        list(read_frames(io.StringIO(line)))


def test_read_sparse_reports_line_number():
    text = ('{"seq":0,"case":"c","ts":0,"tr":[0,3],"m":[]}\n'
            'garbage\n')
    with pytest.raises(FormatError) as err:
        list(read_frames(io.StringIO(text)))
    assert err.value.line_no == 2


def test_read_sparse_missing_key():
    line = '{"seq":0,"case":"c","ts":0,"m":[]}\n'
    with pytest.raises(FormatError) as err:
        list(read_frames(io.StringIO(line)))
    assert "tr" in err.value.reason


def test_read_dense_rejects_bad_header():
    with pytest.raises(FormatError):
        list(read_frames(io.StringIO("a,b,c\n"), DENSE_CSV))


def test_read_dense_rejects_non_square_matrix():
    text = "seq,case,ts,tr_from,tr_to,m0_0,m0_1\n"
    with pytest.raises(FormatError):
        list(read_frames(io.StringIO(text), DENSE_CSV))


def test_round_trip_100_random_frames_both_formats():
    rng = np.random.default_rng(99)
    frames = random_frames(rng, 100, dim=6)
    sparse, dense = io.StringIO(), io.StringIO()
    write_frames(frames, sparse, SPARSE_NDJSON)
    write_frames(frames, dense, DENSE_CSV, dim=6)
    from_sparse = list(read_frames(io.StringIO(sparse.getvalue())))
    from_dense = list(read_frames(io.StringIO(dense.getvalue()), DENSE_CSV))
    assert from_sparse == frames
    assert from_dense == frames
    assert from_sparse == from_dense


def test_normalized_sparse_reads_back_as_fractions():
    sink = io.StringIO()
    write_frames([frame(cells=[((0, 3), 2)])], sink, SPARSE_NDJSON,
                 window_size=4, normalize=True)
    [read_back] = list(read_frames(io.StringIO(sink.getvalue())))
    assert read_back.counts() == {(0, 3): 0.5}


def test_write_returns_frame_count():
    rng = np.random.default_rng(7)
    frames = random_frames(rng, 23, dim=5)
    assert write_frames(frames, io.StringIO(), SPARSE_NDJSON) == 23
    assert write_frames(frames, io.StringIO(), DENSE_CSV, dim=5) == 23


def test_path_sink_and_source(tmp_path):
    rng = np.random.default_rng(3)
    frames = random_frames(rng, 10, dim=4)
    path = tmp_path / "frames.ndjson"
    write_frames(frames, str(path), SPARSE_NDJSON)
    assert list(read_frames(str(path))) == frames
