"""Vocabulary construction, class-id layout, and persistence."""

import json

import pytest

from transmat import (
    DuplicateLabelError,
    EmptyStreamError,
    END,
    Event,
    NUM_RESERVED,
    OTHER,
    START,
    Vocabulary,
    VersionMismatchError,
    build_vocabulary,
    load_vocabulary,
    map_class,
    save_vocabulary,
)


def events_from_labels(labels):
    return [Event(f"c{i}", i, [("ec", lab)]) for i, lab in enumerate(labels)]


def test_reserved_ids_are_fixed():
    assert (START, END, OTHER, NUM_RESERVED) == (0, 1, 2, 3)


def test_visible_ids_follow_reserved_block():
    vocab = Vocabulary(visible=("a", "b"), k=2)
    assert vocab.class_id("a") == 3
    assert vocab.class_id("b") == 4
    assert vocab.dim == 5


def test_unknown_label_maps_to_other():
    vocab = Vocabulary(visible=("a",), k=1)
    assert vocab.class_id("zzz") == OTHER
    assert map_class("zzz", vocab) == OTHER


def test_label_of_round_trips():
    vocab = Vocabulary(visible=("a", "b"), k=2)
    assert vocab.label_of(3) == "a"
    assert vocab.label_of(4) == "b"
    assert vocab.label_of(START) == "<start>"


def test_duplicate_visible_rejected():
    with pytest.raises(DuplicateLabelError):
        Vocabulary(visible=("a", "a"), k=2)


def test_reserved_label_rejected():
    with pytest.raises(DuplicateLabelError):
        Vocabulary(visible=("<other>",), k=1)


def test_build_ranks_by_count():
    labels = ["a"] * 5 + ["b"] * 3 + ["c"]
    vocab = build_vocabulary(events_from_labels(labels), 2, ["ec"])
    assert vocab.visible == ("a", "b")
    assert vocab.class_id("c") == OTHER


def test_build_breaks_ties_lexically():
    labels = ["b", "a", "b", "a"]
    vocab = build_vocabulary(events_from_labels(labels), 1, ["ec"])
    assert vocab.visible == ("a",)


def test_build_with_k_above_distinct_count():
    vocab = build_vocabulary(events_from_labels(["a"]), 10, ["ec"])
    assert vocab.visible == ("a",)
    assert vocab.dim == 4


def test_build_rejects_empty_stream():
    with pytest.raises(EmptyStreamError):
        build_vocabulary([], 5, ["ec"])


def test_build_rejects_bad_k():
    with pytest.raises(ValueError):
        build_vocabulary(events_from_labels(["a"]), 0, ["ec"])


def test_save_load_round_trip(tmp_path):
    vocab = build_vocabulary(events_from_labels(["a", "b", "a"]), 2, ["ec"])
    path = tmp_path / "vocab.json"
    save_vocabulary(vocab, path)
    loaded = load_vocabulary(path)
    assert loaded == vocab
    assert loaded.visible == ("a", "b")
    assert loaded.k == 2


def test_save_is_deterministic(tmp_path):
    vocab = Vocabulary(visible=("a", "b"), k=2)
    p1, p2 = tmp_path / "v1.json", tmp_path / "v2.json"
    save_vocabulary(vocab, p1)
    save_vocabulary(vocab, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_load_rejects_unknown_version(tmp_path):
    path = tmp_path / "vocab.json"
    path.write_text(json.dumps({"version": 99, "k": 1, "visible": ["a"]}))
    with pytest.raises(VersionMismatchError):
        load_vocabulary(path)


def test_load_rejects_duplicate_labels(tmp_path):
    path = tmp_path / "vocab.json"
    path.write_text(json.dumps({"version": 1, "k": 2, "visible": ["a", "a"]}))
    with pytest.raises(DuplicateLabelError):
        load_vocabulary(path)
