"""Deterministic synthetic generator of concurrent traces with labeled
structural anomalies.

Cases arrive as a Poisson process and each case walks a per-class
transition probability table (a Markov chain with a terminate option)
drawn from either a normal template or, with probability ``anomaly_rate``,
the anomaly template.  Output is the same NDJSON/CSV shape the ingest
stage reads, plus a labels CSV marking anomalous cases.  All randomness
comes from numpy's PCG64 generator seeded explicitly, so outputs are
byte-identical across runs and platforms for a fixed seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidTemplateError

#: Reserved key marking the terminate probability inside a transition row.
TERMINATE = "$end"

_SUM_TOLERANCE = 1e-9


@dataclass
class TraceTemplate:
    """Transition model for one kind of case.

    ``start`` maps class labels to start probabilities; ``transitions``
    maps each class to its next-class distribution, where the reserved
    ``"$end"`` key is the probability of terminating after that class.
    Every row (and ``start``) must sum to 1 within 1e-9.
    """

    name: str
    start: dict[str, float]
    transitions: dict[str, dict[str, float]]

    def validate(self) -> None:
        if not self.start:
            raise InvalidTemplateError(f"{self.name}: empty start distribution")
        self._check_row(f"{self.name}.start", self.start, allow_terminate=False)
        for cls, row in self.transitions.items():
            self._check_row(f"{self.name}.transitions[{cls}]", row, True)
        known = set(self.transitions)
        for cls in self.start:
            if cls not in known:
                raise InvalidTemplateError(
                    f"{self.name}: start class {cls!r} has no transition row"
                )
        for cls, row in self.transitions.items():
            for target in row:
                if target != TERMINATE and target not in known:
                    raise InvalidTemplateError(
                        f"{self.name}: target {target!r} of {cls!r} has no "
                        "transition row"
                    )

    @staticmethod
    def _check_row(name: str, row: dict[str, float], allow_terminate: bool):
        if not row:
            raise InvalidTemplateError(f"{name}: empty distribution")
        total = 0.0
        for key, p in row.items():
            if key == TERMINATE and not allow_terminate:
                raise InvalidTemplateError(f"{name}: {TERMINATE!r} not allowed here")
            if not isinstance(p, (int, float)) or p < 0:
                raise InvalidTemplateError(f"{name}: bad probability {p!r} for {key!r}")
            total += p
        if abs(total - 1.0) > _SUM_TOLERANCE:
            raise InvalidTemplateError(f"{name}: probabilities sum to {total}, not 1")


class _Sampler:
    """Cumulative-probability sampler over a template, fixed label order."""

    def __init__(self, template: TraceTemplate):
        self.start_labels, self.start_cum = self._table(template.start)
        self.rows = {
            cls: self._table(row) for cls, row in template.transitions.items()
        }

    @staticmethod
    def _table(dist: dict[str, float]):
        labels = list(dist)
        cum = np.cumsum([dist[lab] for lab in labels])
        return labels, cum

    @staticmethod
    def _draw(labels, cum, u: float) -> str:
        idx = int(np.searchsorted(cum, u, side="right"))
        return labels[min(idx, len(labels) - 1)]

    def draw_start(self, u: float) -> str:
        return self._draw(self.start_labels, self.start_cum, u)

    def draw_next(self, cls: str, u: float) -> str:
        labels, cum = self.rows[cls]
        return self._draw(labels, cum, u)


def generate(
    templates: Sequence[TraceTemplate],
    n_cases: int,
    anomaly_template: TraceTemplate,
    anomaly_rate: float,
    arrival_rate: float,
    seed: int,
    event_rate: float = 100.0,
    max_case_events: int = 10_000,
) -> tuple[list[dict], list[tuple[str, int]]]:
    """Generate a labeled concurrent event stream.

    Returns (events, labels): events are dicts with keys ``case``, ``ts``
    (integer nanoseconds), ``ec``, and ``end`` on each case's final event,
    globally sorted by timestamp; labels are (case_id, 0/1) pairs in case
    order.  ``arrival_rate`` is cases per second, ``event_rate`` events per
    second within a case.  Fully deterministic for a fixed seed.
    """
    if not 0.0 <= anomaly_rate <= 1.0:
        raise ValueError(f"anomaly_rate must be in [0,1], got {anomaly_rate}")
    if arrival_rate <= 0 or event_rate <= 0:
        raise ValueError("arrival_rate and event_rate must be > 0")
    if not templates:
        raise InvalidTemplateError("at least one normal template is required")
    for template in templates:
        template.validate()
    anomaly_template.validate()

    rng = np.random.default_rng(seed)
    samplers = [_Sampler(t) for t in templates]
    anomaly_sampler = _Sampler(anomaly_template)

    rows: list[tuple[int, str, int, str, bool]] = []  # ts, case, idx, class, end
    labels: list[tuple[str, int]] = []
    arrival = 0.0
    for case_no in range(n_cases):
        arrival += float(rng.exponential(1.0 / arrival_rate))
        is_anomaly = bool(rng.random() < anomaly_rate)
        if is_anomaly:
            sampler = anomaly_sampler
        else:
            sampler = samplers[int(rng.integers(len(samplers)))]
        case_id = f"case{case_no:06d}"
        labels.append((case_id, int(is_anomaly)))

        t = arrival
        cls = sampler.draw_start(float(rng.random()))
        classes = [cls]
        times = [t]
        while len(classes) < max_case_events:
            nxt = sampler.draw_next(cls, float(rng.random()))
            if nxt == TERMINATE:
                break
            t += float(rng.exponential(1.0 / event_rate))
            cls = nxt
            classes.append(cls)
            times.append(t)
        last = len(classes) - 1
        for idx, (cls, when) in enumerate(zip(classes, times)):
            rows.append((int(round(when * 1e9)), case_id, idx, cls, idx == last))

    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    events = []
    for ts, case_id, _, cls, is_end in rows:
        event = {"case": case_id, "ts": ts, "ec": cls}
        if is_end:
            event["end"] = True
        events.append(event)
    return events, labels


def write_events_ndjson(events: Iterable[dict], path: str | Path) -> int:
    """Write generated events as NDJSON (the ingest default schema)."""
    written = 0
    with open(path, "w", encoding="utf-8") as fh:
        for event in events:
            fh.write(json.dumps(event, ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")
            written += 1
    return written


def write_labels_csv(labels: Iterable[tuple[str, int]], path: str | Path) -> int:
    """Write case labels as CSV with header ``case_id,label``."""
    written = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("case_id,label\n")
        for case_id, label in labels:
            fh.write(f"{case_id},{label}\n")
            written += 1
    return written


def load_templates(path: str | Path) -> list[TraceTemplate]:
    """Load templates from JSON: one object or a list of objects with keys
    ``name``, ``start``, ``transitions``."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if isinstance(doc, dict):
        doc = [doc]
    templates = []
    for entry in doc:
        try:
            template = TraceTemplate(
                name=entry["name"],
                start=dict(entry["start"]),
                transitions={k: dict(v) for k, v in entry["transitions"].items()},
            )
        except (KeyError, TypeError, AttributeError) as err:
            raise InvalidTemplateError(f"malformed template file {path}: {err}")
        template.validate()
        templates.append(template)
    return templates


def default_normal_template() -> TraceTemplate:
    """Built-in normal behavior: an 8-class ring (mean ~200 events/case).

    The walk is almost deterministic, so normal window matrices cluster
    tightly and structural deviations stand out.
    """
    classes = [f"n{i}" for i in range(8)]
    transitions = {}
    for i, cls in enumerate(classes):
        transitions[cls] = {
            classes[(i + 1) % 8]: 0.995,
            TERMINATE: 0.005,
        }
    return TraceTemplate(
        name="normal-ring",
        start={"n0": 0.7, "n4": 0.3},
        transitions=transitions,
    )


def default_anomaly_template() -> TraceTemplate:
    """Built-in anomalous behavior: a 4-class cycle with self-loops, fully
    disjoint from the normal ring's transition structure."""
    classes = [f"x{i}" for i in range(4)]
    transitions = {}
    for i, cls in enumerate(classes):
        transitions[cls] = {
            classes[(i + 1) % 4]: 0.55,
            cls: 0.25,
            classes[(i + 3) % 4]: 0.195,
            TERMINATE: 0.005,
        }
    return TraceTemplate(
        name="anomaly-cycle",
        start={"x0": 1.0},
        transitions=transitions,
    )
