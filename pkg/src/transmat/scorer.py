"""Baseline streaming anomaly scorer and ROC/AUC evaluation.

The scorer keeps a one-pass running mean of the window matrices
(normalized by the window size) and scores each frame by its Euclidean
distance to that mean.  During warmup the profile learns and scores are
reported as 0; after warmup the profile is frozen unless
``update_after_warmup`` is set.  A case's score is the maximum over its
events, and sets of labeled cases are evaluated with rank-based AUC.
"""

from __future__ import annotations

import csv
import json
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

from .engine import FeatureFrame
from .errors import DimensionMismatchError, FormatError, SingleClassError


@dataclass(slots=True)
class ScoreRecord:
    """Per-frame outlier score."""

    seq: int
    case_id: str
    score: float


class RunningProfile:
    """One-pass (Welford) mean and variance over dim x dim matrices."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.dim = dim
        self.count = 0
        self.mean = np.zeros((dim, dim))
        self._m2 = np.zeros((dim, dim))

    def update(self, matrix: np.ndarray) -> None:
        if matrix.shape != (self.dim, self.dim):
            raise DimensionMismatchError(
                f"expected {(self.dim, self.dim)}, got {matrix.shape}"
            )
        self.count += 1
        delta = matrix - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (matrix - self.mean)

    def variance(self) -> np.ndarray:
        """Population variance per matrix cell (zeros before any update)."""
        if self.count == 0:
            return np.zeros((self.dim, self.dim))
        return np.maximum(self._m2, 0.0) / self.count


def frame_matrix(frame: FeatureFrame, dim: int) -> np.ndarray:
    """Dense dim x dim count matrix of a frame.

    Raises:
        DimensionMismatchError: an entry lies outside the matrix.
    """
    if frame.cells is None:
        raise ValueError("frame has no matrix (emission was disabled)")
    matrix = np.zeros((dim, dim))
    for (i, j), count in frame.cells:
        if i >= dim or j >= dim:
            raise DimensionMismatchError(
                f"entry ({i},{j}) out of range for dim={dim}"
            )
        matrix[i, j] = count
    return matrix


class StreamScorer:
    """Scores frames by distance between their normalized window matrix and
    the running mean."""

    def __init__(
        self,
        dim: int,
        window_size: int,
        warmup: int = 100,
        update_after_warmup: bool = False,
    ):
        if warmup < 1:
            raise ValueError(f"warmup must be >= 1, got {warmup}")
        if window_size < 1:
            raise ValueError(f"window_size must be >= 1, got {window_size}")
        self.window_size = window_size
        self.warmup = warmup
        self.update_after_warmup = update_after_warmup
        self.profile = RunningProfile(dim)

    def score(self, frame: FeatureFrame) -> ScoreRecord:
        matrix = frame_matrix(frame, self.profile.dim) / self.window_size
        if self.profile.count < self.warmup:
            self.profile.update(matrix)
            value = 0.0
        else:
            value = float(np.linalg.norm(matrix - self.profile.mean))
            if self.update_after_warmup:
                self.profile.update(matrix)
        return ScoreRecord(frame.seq, frame.case_id, value)


def score_frames(
    frames: Iterable[FeatureFrame],
    dim: int,
    window_size: int,
    warmup: int = 100,
    update_after_warmup: bool = False,
) -> Iterator[ScoreRecord]:
    """Score an ordered frame stream with a fresh profile."""
    scorer = StreamScorer(dim, window_size, warmup, update_after_warmup)
    for frame in frames:
        yield scorer.score(frame)


def case_scores(records: Iterable[ScoreRecord]) -> dict[str, float]:
    """Per-case score: the maximum event score of the case."""
    result: dict[str, float] = {}
    for record in records:
        current = result.get(record.case_id)
        if current is None or record.score > current:
            result[record.case_id] = record.score
    return result


def roc_auc(scores: Mapping[str, float], labels: Mapping[str, int]) -> float:
    """Area under the ROC curve via the rank-sum (Mann-Whitney) identity.

    Evaluates over the cases in ``labels`` (values 0 or 1); every labeled
    case must have a score.  Tied scores contribute 1/2.

    Raises:
        SingleClassError: labels contain only one class.
    """
    pairs = []
    n_pos = 0
    for case_id, label in labels.items():
        if label not in (0, 1):
            raise ValueError(f"label for {case_id!r} must be 0 or 1, got {label!r}")
        if case_id not in scores:
            raise ValueError(f"no score for labeled case {case_id!r}")
        pairs.append((scores[case_id], label))
        n_pos += label
    n_neg = len(pairs) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError("both positive and negative labels are required")

    pairs.sort(key=lambda p: p[0])
    rank_sum_pos = 0.0
    i = 0
    while i < len(pairs):
        j = i
        while j < len(pairs) and pairs[j][0] == pairs[i][0]:
            j += 1
        # Ranks are 1-based; a tie group gets the average rank of its span.
        average_rank = (i + 1 + j) / 2
        rank_sum_pos += average_rank * sum(label for _, label in pairs[i:j])
        i = j
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)


@contextmanager
def _open_sink(sink):
    if hasattr(sink, "write"):
        yield sink
    elif sink == "-":
        yield sys.stdout
    else:
        with open(sink, "w", encoding="utf-8", newline="") as fh:
            yield fh


def write_scores(records: Iterable[ScoreRecord], sink) -> int:
    """Write scores as NDJSON lines {"seq","case","score"}."""
    written = 0
    with _open_sink(sink) as fh:
        for record in records:
            case = json.dumps(record.case_id, ensure_ascii=False)
            fh.write(
                f'{{"seq":{record.seq},"case":{case},"score":{record.score!r}}}\n'
            )
            written += 1
    return written


def read_scores(source) -> Iterator[ScoreRecord]:
    """Read NDJSON score records written by :func:`write_scores`."""
    if hasattr(source, "read"):
        fh = source
        close = False
    else:
        fh = open(source, encoding="utf-8")
        close = True
    try:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                yield ScoreRecord(doc["seq"], doc["case"], float(doc["score"]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as err:
                raise FormatError(line_no, f"bad score record: {err}") from None
    finally:
        if close:
            fh.close()


def read_labels(source) -> dict[str, int]:
    """Read a labels CSV (header ``case_id,label``, labels 0/1)."""
    if hasattr(source, "read"):
        fh = source
        close = False
    else:
        fh = open(source, encoding="utf-8", newline="")
        close = True
    try:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return {}
        if header[:2] != ["case_id", "label"]:
            raise FormatError(1, "expected header case_id,label")
        labels = {}
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 2 or row[1] not in ("0", "1"):
                raise FormatError(line_no, f"bad label row {row!r}")
            labels[row[0]] = int(row[1])
        return labels
    finally:
        if close:
            fh.close()
