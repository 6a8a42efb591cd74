"""Event-class vocabulary: reserved tokens plus the top-k visible classes.

Class ids index the rows/columns of the transition matrices.  Ids 0..2 are
reserved for the start token, the end token, and the catch-all "other"
class; the i-th visible label maps to id ``3 + i``.  Labels outside the
visible set are hidden and all map to OTHER.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DuplicateLabelError, EmptyStreamError, VersionMismatchError
from .events import Event, derive_event_class

#: Reserved class ids.
START = 0
END = 1
OTHER = 2
NUM_RESERVED = 3

#: Display labels for the reserved ids; never valid as visible labels.
RESERVED_LABELS = ("<start>", "<end>", "<other>")

VOCAB_FILE_VERSION = 1


@dataclass(frozen=True)
class Vocabulary:
    """Immutable mapping between class labels and matrix indices.

    ``visible`` holds at most ``k`` labels ordered by descending frequency
    (ties broken lexically).  ``dim`` is the matrix dimension including the
    three reserved ids.
    """

    visible: tuple[str, ...]
    k: int
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.visible)) != len(self.visible):
            raise DuplicateLabelError("visible labels are not unique")
        for label in self.visible:
            if label in RESERVED_LABELS:
                raise DuplicateLabelError(
                    f"label {label!r} collides with a reserved token"
                )
        index = {lab: NUM_RESERVED + i for i, lab in enumerate(self.visible)}
        object.__setattr__(self, "_index", index)

    @property
    def dim(self) -> int:
        return len(self.visible) + NUM_RESERVED

    def class_id(self, label: str) -> int:
        """Map a label to its class id; hidden labels map to OTHER."""
        return self._index.get(label, OTHER)

    def label_of(self, class_id: int) -> str:
        """Inverse mapping, using the reserved display labels for ids 0..2."""
        if 0 <= class_id < NUM_RESERVED:
            return RESERVED_LABELS[class_id]
        return self.visible[class_id - NUM_RESERVED]

    @property
    def index(self) -> dict[str, int]:
        """Label -> class id mapping for the visible classes (a live view)."""
        return self._index


def map_class(label: str, vocab: Vocabulary) -> int:
    """Map a class label to its id under ``vocab`` (OTHER when hidden)."""
    return vocab.class_id(label)


def build_vocabulary(
    events: Iterable[Event], k: int, class_fields: Sequence[str]
) -> Vocabulary:
    """Count class labels over a stream and keep the k most frequent.

    Ties on frequency are broken by ascending label so the result does not
    depend on input order.  Raises ``EmptyStreamError`` for an empty stream
    and ``ValueError`` for invalid ``k`` or ``class_fields``.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not class_fields:
        raise ValueError("class_fields must be non-empty")
    counts: Counter[str] = Counter()
    for event in events:
        counts[derive_event_class(event.attributes, class_fields)] += 1
    if not counts:
        raise EmptyStreamError("cannot build a vocabulary from an empty stream")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    visible = tuple(label for label, _ in ranked[:k])
    return Vocabulary(visible=visible, k=k)


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    """Write a vocabulary as versioned JSON (round-trips exactly)."""
    doc = {
        "version": VOCAB_FILE_VERSION,
        "k": vocab.k,
        "visible": list(vocab.visible),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def load_vocabulary(path: str | Path) -> Vocabulary:
    """Read a vocabulary written by :func:`save_vocabulary`.

    Raises:
        VersionMismatchError: unknown ``version`` tag.
        DuplicateLabelError: repeated or reserved labels in the file.
    """
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    version = doc.get("version")
    if version != VOCAB_FILE_VERSION:
        raise VersionMismatchError(
            f"unsupported vocabulary version {version!r} in {path}"
        )
    visible = doc.get("visible")
    if not isinstance(visible, list) or not all(
        isinstance(x, str) for x in visible
    ):
        raise VersionMismatchError(f"malformed vocabulary file {path}")
    return Vocabulary(visible=tuple(visible), k=int(doc.get("k", len(visible))))
