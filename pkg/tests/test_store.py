import json

import pytest

from autodidact.store import SCHEMA_VERSION, DocumentStore
from autodidact.errors import StorageFailure


class TestBasics:
    def test_put_get_roundtrip(self, store):
        store.put("courses", "c1", {"title": "x"})
        doc = store.get("courses", "c1")
        assert doc["title"] == "x"
        assert doc["schema_version"] == SCHEMA_VERSION

    def test_missing_is_none(self, store):
        assert store.get("courses", "nope") is None

    def test_keyed_paths_with_slashes(self, store):
        store.put("decks", "user/node", {"a": 1})
        assert store.get("decks", "user/node")["a"] == 1
        assert "user/node" in store.keys("decks")

    def test_unknown_subtree(self, store):
        with pytest.raises(StorageFailure):
            store.put("nope", "k", {})

    def test_overwrite_replaces(self, store):
        store.put("users", "u", {"v": 1})
        store.put("users", "u", {"v": 2})
        assert store.get("users", "u")["v"] == 2

    def test_append_and_read_lines(self, store):
        store.append_line("sessions", "s1", {"event": "open"})
        store.append_line("sessions", "s1", {"event": "advance"})
        assert [e["event"] for e in store.read_lines("sessions", "s1")] == \
            ["open", "advance"]

    def test_scan(self, store):
        store.put("courses", "a", {"n": 1})
        store.put("courses", "b", {"n": 2})
        assert dict((k, d["n"]) for k, d in store.scan("courses")) == {"a": 1, "b": 2}


class Crash(Exception):
    pass


class TestCrashSafety:
    def test_fault_injection_never_leaves_partial_docs(self, tmp_path):
        """Kill the writer at every injection point; documents stay whole."""
        root = tmp_path / "s"
        survived = 0
        for i in range(1000):
            countdown = [i % 7 + 1]

            def hook(point):
                countdown[0] -= 1
                if countdown[0] == 0:
                    raise Crash(point)

            store = DocumentStore(root, fault_hook=hook)
            try:
                store.put("users", "victim", {"attempt": i, "payload": "x" * 100})
                survived += 1
            except Crash:
                pass
            # every visible document parses and is complete
            clean = DocumentStore(root)
            doc = clean.get("users", "victim")
            if doc is not None:
                assert set(doc) == {"attempt", "payload", "schema_version"}
                assert len(doc["payload"]) == 100
            # no orphan temp files are ever listed as documents
            assert all(not k.startswith(".tmp") for k in clean.keys("users"))
        assert survived > 0

    def test_crash_preserves_previous_version(self, tmp_path):
        root = tmp_path / "s"
        DocumentStore(root).put("users", "u", {"version": "old"})

        def hook(point):
            if point == "before_rename":
                raise Crash(point)

        store = DocumentStore(root, fault_hook=hook)
        with pytest.raises(Crash):
            store.put("users", "u", {"version": "new"})
        assert DocumentStore(root).get("users", "u")["version"] == "old"
