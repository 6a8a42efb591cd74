"""Transition-count matrix features from concurrent event streams.

The pipeline: parse raw event logs (`ingest`), map events to a bounded
class vocabulary (`registry`), fold each event into a sliding window of
case transitions and snapshot the count matrix (`engine`), serialize the
snapshots (`featureio`), and score them against a running profile
(`scorer`).  `synth` generates labeled datasets for end-to-end checks
and `cli` exposes everything as subcommands.
"""

from .engine import Engine, FeatureFrame, run_stream
from .errors import (
    DimensionMismatchError,
    DuplicateLabelError,
    EmptyStreamError,
    FormatError,
    InvalidTemplateError,
    MissingAttributeError,
    OutOfOrderError,
    ParseError,
    SingleClassError,
    TransmatError,
    UnknownCaseError,
    VersionMismatchError,
)
from .events import Event, Transition, derive_event_class
from .featureio import DENSE_CSV, SPARSE_NDJSON, read_frames, write_frames
from .ingest import StreamSchema, StreamSource, merge_streams, parse_stream, read_events
from .registry import (
    END,
    NUM_RESERVED,
    OTHER,
    START,
    Vocabulary,
    build_vocabulary,
    load_vocabulary,
    map_class,
    save_vocabulary,
)
from .scorer import (
    RunningProfile,
    ScoreRecord,
    StreamScorer,
    case_scores,
    frame_matrix,
    read_labels,
    read_scores,
    roc_auc,
    score_frames,
    write_scores,
)
from .synth import TraceTemplate, generate, load_templates

__version__ = "0.1.0"

__all__ = [
    "DENSE_CSV",
    "DimensionMismatchError",
    "DuplicateLabelError",
    "EmptyStreamError",
    "END",
    "Engine",
    "Event",
    "FeatureFrame",
    "FormatError",
    "InvalidTemplateError",
    "MissingAttributeError",
    "NUM_RESERVED",
    "OTHER",
    "OutOfOrderError",
    "ParseError",
    "RunningProfile",
    "SPARSE_NDJSON",
    "START",
    "ScoreRecord",
    "SingleClassError",
    "StreamSchema",
    "StreamScorer",
    "StreamSource",
    "TraceTemplate",
    "Transition",
    "TransmatError",
    "UnknownCaseError",
    "VersionMismatchError",
    "Vocabulary",
    "build_vocabulary",
    "case_scores",
    "derive_event_class",
    "frame_matrix",
    "generate",
    "load_templates",
    "load_vocabulary",
    "map_class",
    "merge_streams",
    "parse_stream",
    "read_events",
    "read_frames",
    "read_labels",
    "read_scores",
    "roc_auc",
    "run_stream",
    "save_vocabulary",
    "score_frames",
    "write_frames",
    "write_scores",
]
