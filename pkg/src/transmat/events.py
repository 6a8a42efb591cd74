"""Core domain types: events, event-class labels, and transitions.

An event is one observed activity inside a case (a flow, a process, a
session).  Its class label is derived deterministically from a configured
subset of its attributes; a transition is an ordered pair of class ids for
two consecutive events of the same case.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .errors import MissingAttributeError

#: Separator between attribute values in a derived class label.
LABEL_SEPARATOR = "|"


@dataclass(slots=True)
class Event:
    """One observed activity.

    ``attributes`` is an ordered list of (name, value) pairs; names are
    unique within one event (enforced at parse time).  ``timestamp`` is in
    integer nanoseconds, or a monotone sequence number for sources without
    timestamps.  ``is_end`` marks the final event of a case.
    """

    case_id: str
    timestamp: int
    attributes: list[tuple[str, str]] = field(default_factory=list)
    is_end: bool = False


class Transition(NamedTuple):
    """Ordered pair of class ids: ``src`` directly precedes ``dst``.

    ``src`` is never the end token and ``dst`` is never the start token;
    the engine guarantees this by construction.  Plain ``(src, dst)``
    tuples compare and hash equal to ``Transition`` instances, and the
    engine emits plain tuples on its hot path.
    """

    src: int
    dst: int


def derive_event_class(
    attributes: Sequence[tuple[str, str]], class_fields: Sequence[str]
) -> str:
    """Derive the class label of an event from its attributes.

    The values of ``class_fields`` are taken in ``class_fields`` order and
    joined with ``"|"``.  Literal ``"|"`` and ``"\\"`` inside a value are
    escaped as ``"\\|"`` and ``"\\\\"`` so distinct value tuples can never
    collide.

    Raises:
        MissingAttributeError: a name in ``class_fields`` is absent.
    """
    lookup = dict(attributes)
    parts = []
    for name in class_fields:
        try:
            value = lookup[name]
        except KeyError:
            raise MissingAttributeError(name) from None
        if "\\" in value or "|" in value:
            value = value.replace("\\", "\\\\").replace("|", "\\|")
        parts.append(value)
    return "|".join(parts)
