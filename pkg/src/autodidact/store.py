"""Embedded on-disk document store with atomic writes.

Documents are JSON files under a fixed directory layout. Every write
goes to a temp file in the same directory and is renamed into place, so
a crash at any point leaves either the old document or the new one,
never a torn file. Every stored document carries a schema_version.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Callable, Iterator

from .errors import StorageFailure

SCHEMA_VERSION = 1

SUBTREES = ("courses", "users", "decks", "sessions", "indexes", "datasets", "reports")


class DocumentStore:
    def __init__(self, root: str | Path, fault_hook: Callable[[str], None] | None = None):
        self.root = Path(root)
        # fault_hook is called at named kill points; tests use it to
        # simulate a crash between filesystem operations.
        self._fault_hook = fault_hook or (lambda point: None)
        for sub in SUBTREES:
            (self.root / sub).mkdir(parents=True, exist_ok=True)

    def _path(self, subtree: str, key: str) -> Path:
        if subtree not in SUBTREES:
            raise StorageFailure(f"unknown subtree {subtree!r}")
        safe = key.replace("/", "__")
        return self.root / subtree / f"{safe}.json"

    def put(self, subtree: str, key: str, doc: dict) -> None:
        doc = dict(doc)
        doc["schema_version"] = SCHEMA_VERSION
        path = self._path(subtree, key)
        data = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")
        self._fault_hook("before_write")
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
                self._fault_hook("mid_write")
                fh.flush()
                os.fsync(fh.fileno())
            self._fault_hook("before_rename")
            os.replace(tmp, path)
            self._fault_hook("after_rename")
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)

    def get(self, subtree: str, key: str) -> dict | None:
        path = self._path(subtree, key)
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def get_bytes(self, subtree: str, key: str) -> bytes | None:
        path = self._path(subtree, key)
        if not path.exists():
            return None
        return path.read_bytes()

    def delete(self, subtree: str, key: str) -> bool:
        path = self._path(subtree, key)
        if path.exists():
            path.unlink()
            return True
        return False

    def keys(self, subtree: str) -> list[str]:
        names = []
        for p in sorted((self.root / subtree).glob("*.json")):
            if not p.name.startswith(".tmp-"):
                names.append(p.stem.replace("__", "/"))
        return names

    def scan(self, subtree: str) -> Iterator[tuple[str, dict]]:
        for key in self.keys(subtree):
            doc = self.get(subtree, key)
            if doc is not None:
                yield key, doc

    def append_line(self, subtree: str, key: str, record: dict) -> None:
        """Append one JSON line (event logs). Line writes are O_APPEND-atomic."""
        path = self._path(subtree, key).with_suffix(".jsonl")
        line = json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n"
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(line)

    def read_lines(self, subtree: str, key: str) -> list[dict]:
        path = self._path(subtree, key).with_suffix(".jsonl")
        if not path.exists():
            return []
        return [json.loads(l) for l in path.read_text(encoding="utf-8").splitlines() if l]
