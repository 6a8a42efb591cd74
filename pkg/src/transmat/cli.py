"""Command-line surface tying the pipeline together.

Subcommands: vocab (build the class vocabulary), generate (events ->
feature frames), score (frames -> per-event scores), eval (scores +
labels -> AUC), synth (labeled synthetic dataset), bench (engine
throughput/latency report).

Option precedence: command-line flags override values from an optional
JSON config file (``--config``), which override built-in defaults.  All
artifact-producing subcommands are byte-deterministic for fixed inputs,
flags, and seed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from typing import Sequence

import numpy as np

from . import featureio, synth
from .engine import Engine, run_stream
from .errors import TransmatError
from .events import Event
from .ingest import StreamSchema, StreamSource, read_events
from .registry import (
    Vocabulary,
    build_vocabulary,
    load_vocabulary,
    save_vocabulary,
)
from .scorer import case_scores, read_labels, read_scores, score_frames, write_scores

logger = logging.getLogger(__name__)

DEFAULTS = {
    "window": 200,
    "k": 50,
    "warmup": 100,
    "format": featureio.SPARSE_NDJSON,
    "input_format": "ndjson",
    "case_field": "case",
    "ts_field": "ts",
    "end_field": "end",
    "class_fields": "ec",
    "reorder_horizon": 0,
    "strict": True,
    "flush": False,
    "normalize": False,
    "update_after_warmup": False,
    "idle_timeout": None,
    "seed": 0,
    "cases": 1000,
    "anomaly_rate": 0.05,
    "arrival_rate": 1.0,
    "event_rate": 100.0,
    "events": 1_000_000,
    "emit": True,
}


class _Options:
    """Resolved option values: flag > config file > default."""

    def __init__(self, args: argparse.Namespace):
        self._args = vars(args)
        self._config = {}
        config_path = self._args.get("config")
        if config_path:
            with open(config_path, encoding="utf-8") as fh:
                self._config = json.load(fh)
            if not isinstance(self._config, dict):
                raise TransmatError(f"config {config_path} is not a JSON object")

    def get(self, key: str):
        value = self._args.get(key)
        if value is None:
            value = self._config.get(key, DEFAULTS.get(key))
        return value


def _schema_from(options: _Options) -> StreamSchema:
    ts_field = options.get("ts_field") or None
    end_field = options.get("end_field") or None
    class_fields = options.get("class_fields")
    if isinstance(class_fields, str):
        class_fields = [f for f in class_fields.split(",") if f]
    if not class_fields:
        raise TransmatError("class_fields must name at least one attribute")
    return StreamSchema(
        case_field=options.get("case_field"),
        ts_field=ts_field,
        end_field=end_field,
        class_fields=list(class_fields),
    )


def _sources_from(options: _Options, inputs: list[str]) -> list[StreamSource]:
    fmt = options.get("input_format")
    return [StreamSource(source_id=path, format=fmt, path=path) for path in inputs]


def _add_schema_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", "-i", action="append", required=True,
                        metavar="PATH", help="input log (repeatable; '-' for stdin)")
    parser.add_argument("--input-format", choices=["ndjson", "csv"],
                        help="input format (default ndjson)")
    parser.add_argument("--case-field", help="record field holding the case id")
    parser.add_argument("--ts-field",
                        help="record field holding the integer timestamp "
                             "('' to use record position instead)")
    parser.add_argument("--end-field",
                        help="record field marking end-of-case ('' to disable)")
    parser.add_argument("--class-fields",
                        help="comma-separated attribute names forming the class label")
    parser.add_argument("--reorder-horizon", type=int,
                        help="per-source buffer for repairing timestamp jitter "
                             "(0 = require sorted inputs)")
    parser.add_argument("--strict", action=argparse.BooleanOptionalAction,
                        default=None,
                        help="abort on malformed records (default) or skip them")


def _cmd_vocab(options: _Options) -> int:
    schema = _schema_from(options)
    sources = _sources_from(options, options.get("input"))
    events = read_events(
        sources, schema,
        strict=options.get("strict"),
        reorder_horizon=options.get("reorder_horizon"),
    )
    vocab = build_vocabulary(events, options.get("k"), schema.class_fields)
    save_vocabulary(vocab, options.get("out"))
    logger.info("vocabulary: %d visible classes, dim=%d", len(vocab.visible), vocab.dim)
    return 0


def _cmd_generate(options: _Options) -> int:
    schema = _schema_from(options)
    sources = _sources_from(options, options.get("input"))
    vocab = load_vocabulary(options.get("vocab"))
    events = read_events(
        sources, schema,
        strict=options.get("strict"),
        reorder_horizon=options.get("reorder_horizon"),
    )
    window = options.get("window")
    frames = run_stream(
        events, vocab, window, schema.class_fields,
        idle_timeout=options.get("idle_timeout"),
        flush=options.get("flush"),
    )
    written = featureio.write_frames(
        frames, options.get("out"),
        format=options.get("format"),
        dim=vocab.dim,
        window_size=window,
        normalize=options.get("normalize"),
    )
    logger.info("wrote %d frames", written)
    return 0


def _cmd_score(options: _Options) -> int:
    vocab = load_vocabulary(options.get("vocab"))
    frames = featureio.read_frames(options.get("frames"), options.get("format"))
    records = score_frames(
        frames, vocab.dim, options.get("window"),
        warmup=options.get("warmup"),
        update_after_warmup=options.get("update_after_warmup"),
    )
    written = write_scores(records, options.get("out"))
    logger.info("scored %d frames", written)
    return 0


def _cmd_eval(options: _Options) -> int:
    per_case = case_scores(read_scores(options.get("scores")))
    labels = read_labels(options.get("labels"))
    from .scorer import roc_auc

    auc = roc_auc(per_case, labels)
    positives = sum(labels.values())
    report = {
        "auc": auc,
        "cases": len(labels),
        "positives": positives,
        "negatives": len(labels) - positives,
    }
    out = options.get("out")
    text = json.dumps(report) + "\n"
    if out and out != "-":
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_synth(options: _Options) -> int:
    templates_path = options.get("templates")
    anomaly_path = options.get("anomaly_templates")
    if templates_path:
        templates = synth.load_templates(templates_path)
    else:
        templates = [synth.default_normal_template()]
    if anomaly_path:
        anomaly = synth.load_templates(anomaly_path)[0]
    else:
        anomaly = synth.default_anomaly_template()
    events, labels = synth.generate(
        templates,
        options.get("cases"),
        anomaly,
        options.get("anomaly_rate"),
        options.get("arrival_rate"),
        options.get("seed"),
        event_rate=options.get("event_rate"),
    )
    n_events = synth.write_events_ndjson(events, options.get("out"))
    synth.write_labels_csv(labels, options.get("labels"))
    logger.info("generated %d events over %d cases", n_events, len(labels))
    return 0


def _cmd_bench(options: _Options) -> int:
    report = run_benchmark(
        n_events=options.get("events"),
        n_cases=options.get("cases"),
        k=options.get("k"),
        window_size=options.get("window"),
        emit_matrices=options.get("emit"),
        seed=options.get("seed"),
    )
    sys.stdout.write(json.dumps(report) + "\n")
    return 0


def bench_events(n_events: int, n_cases: int, n_labels: int, seed: int) -> list[Event]:
    """Deterministic in-memory event load for benchmarking.

    Events never carry end markers, so the number of open cases settles at
    ``n_cases`` and stays there.
    """
    rng = np.random.default_rng(seed)
    case_pool = [f"c{i:06d}" for i in range(n_cases)]
    label_pool = [f"class{i:03d}" for i in range(n_labels)]
    # Attribute lists are shared between events: the engine treats them as
    # read-only, and sharing keeps a million-event load compact.
    attrs_pool = [[("ec", label)] for label in label_pool]
    case_idx = rng.integers(0, n_cases, size=n_events).tolist()
    label_idx = rng.integers(0, n_labels, size=n_events).tolist()
    return [
        Event(case_pool[c], ts, attrs_pool[l])
        for ts, (c, l) in enumerate(zip(case_idx, label_idx))
    ]


def run_benchmark(
    n_events: int,
    n_cases: int,
    k: int,
    window_size: int,
    emit_matrices: bool = True,
    seed: int = 0,
    latency_sample: int = 200_000,
) -> dict:
    """Measure single-threaded engine throughput and per-event latency.

    Uses a synthetic load of ``n_events`` events spread over ``n_cases``
    concurrent cases, with ``k + 5`` distinct labels so some traffic maps
    to the catch-all class.  Throughput comes from one untimed-inner-loop
    pass over all events; latency percentiles from an instrumented pass
    over the first ``latency_sample`` events.  Returns a report dict with
    ``events_per_sec``, ``p50_ns``, and ``p99_ns``.
    """
    n_labels = k + 5
    label_pool = [f"class{i:03d}" for i in range(n_labels)]
    vocab = Vocabulary(visible=tuple(label_pool[:k]), k=k)
    events = bench_events(n_events, n_cases, n_labels, seed)

    engine = Engine(vocab, window_size, ["ec"], emit_matrices=emit_matrices)
    process = engine.process_event
    start = time.perf_counter()
    for event in events:
        process(event)
    elapsed = time.perf_counter() - start

    sample = min(latency_sample, n_events)
    engine = Engine(vocab, window_size, ["ec"], emit_matrices=emit_matrices)
    process = engine.process_event
    clock = time.perf_counter_ns
    latencies = []
    append = latencies.append
    for event in events[:sample]:
        t0 = clock()
        process(event)
        append(clock() - t0)
    latencies.sort()

    return {
        "events": n_events,
        "cases": n_cases,
        "k": k,
        "window": window_size,
        "emit_matrices": emit_matrices,
        "elapsed_s": round(elapsed, 6),
        "events_per_sec": round(n_events / elapsed, 1),
        "p50_ns": latencies[sample // 2],
        "p99_ns": latencies[min(sample - 1, int(sample * 0.99))],
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="transmat",
        description="Transition-count matrix features from concurrent event streams.",
    )
    parser.add_argument("--verbose", "-v", action="store_true",
                        help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("vocab", help="count class labels and save the top-k vocabulary")
    _add_schema_flags(p)
    p.add_argument("--k", type=int, help="number of visible classes")
    p.add_argument("--out", "-o", required=True, help="vocabulary JSON path")
    p.add_argument("--config", help="JSON config file")
    p.set_defaults(handler=_cmd_vocab)

    p = sub.add_parser("generate", help="run the engine over event logs")
    _add_schema_flags(p)
    p.add_argument("--vocab", required=True, help="vocabulary JSON from 'vocab'")
    p.add_argument("--window", type=int, help="sliding window size")
    p.add_argument("--idle-timeout", type=int,
                   help="close cases idle for more than this many timestamp units")
    p.add_argument("--flush", action=argparse.BooleanOptionalAction, default=None,
                   help="close all open cases at end of input")
    p.add_argument("--format", choices=list(featureio.FRAME_FORMATS),
                   help="output frame format")
    p.add_argument("--normalize", action=argparse.BooleanOptionalAction,
                   default=None, help="divide counts by the window size")
    p.add_argument("--out", "-o", required=True, help="frames path ('-' for stdout)")
    p.add_argument("--config", help="JSON config file")
    p.set_defaults(handler=_cmd_generate)

    p = sub.add_parser("score", help="score frames against a running profile")
    p.add_argument("--frames", required=True, help="frames file from 'generate'")
    p.add_argument("--format", choices=list(featureio.FRAME_FORMATS),
                   help="frames file format")
    p.add_argument("--vocab", required=True, help="vocabulary JSON (for the dimension)")
    p.add_argument("--window", type=int, help="window size used at generation time")
    p.add_argument("--warmup", type=int, help="frames used to learn the profile")
    p.add_argument("--update-after-warmup", action=argparse.BooleanOptionalAction,
                   default=None, help="keep updating the profile after warmup")
    p.add_argument("--out", "-o", required=True, help="scores NDJSON path")
    p.add_argument("--config", help="JSON config file")
    p.set_defaults(handler=_cmd_score)

    p = sub.add_parser("eval", help="compute case-level AUC from scores and labels")
    p.add_argument("--scores", required=True, help="scores NDJSON from 'score'")
    p.add_argument("--labels", required=True, help="labels CSV (case_id,label)")
    p.add_argument("--out", "-o", help="report JSON path (default stdout)")
    p.add_argument("--config", help="JSON config file")
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("synth", help="generate a labeled synthetic dataset")
    p.add_argument("--cases", type=int, help="number of cases")
    p.add_argument("--anomaly-rate", type=float, help="probability a case is anomalous")
    p.add_argument("--arrival-rate", type=float, help="case arrivals per second")
    p.add_argument("--event-rate", type=float, help="events per second within a case")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--templates", help="JSON file with normal trace templates")
    p.add_argument("--anomaly-templates", help="JSON file with the anomaly template")
    p.add_argument("--out", required=True, help="events NDJSON path")
    p.add_argument("--labels", required=True, help="labels CSV path")
    p.add_argument("--config", help="JSON config file")
    p.set_defaults(handler=_cmd_synth)

    p = sub.add_parser("bench", help="measure engine throughput and latency")
    p.add_argument("--events", type=int, help="number of events")
    p.add_argument("--cases", type=int, help="number of concurrent cases")
    p.add_argument("--k", type=int, help="visible classes")
    p.add_argument("--window", type=int, help="sliding window size")
    p.add_argument("--emit", action=argparse.BooleanOptionalAction, default=None,
                   help="materialize matrix snapshots (default) or measure the "
                        "update path alone")
    p.add_argument("--seed", type=int, help="random seed for the event load")
    p.add_argument("--config", help="JSON config file")
    p.set_defaults(handler=_cmd_bench)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        options = _Options(args)
        return args.handler(options)
    except TransmatError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
