"""
Persistent score cache.

The cache maps (backend identity, prefix, continuation) to a score. It is an append-only JSON-lines file of
``{"key": <sha256>, "value": <float>}`` records; on load, later records for a key win. Scores are deterministic per
key, so concurrent writers racing on the same key always write the same value.
"""

from __future__ import annotations

import dataclasses
import json
import threading
from hashlib import sha256
from pathlib import Path

from . import base
from ..prompts.render import PromptMeta


def make_key(identity: str, prefix: str, continuation: str, meta: PromptMeta | None = None) -> str:
    """
    Cache key of a request. Backends that read provenance tags also key on them, since their scores are not a
    function of the prompt strings alone.
    """

    parts = [identity, prefix, continuation]
    if meta is not None:
        parts.append(dataclasses.astuple(meta))
    canonical = json.dumps(parts, ensure_ascii=True, separators=(",", ":"))
    return sha256(canonical.encode("utf-8")).hexdigest()


class ScoreCache:
    """
    Thread-safe key -> score store, optionally backed by a file.

    :ivar path: Append-only backing file, or ``None`` for an in-memory cache.
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self.entries: dict[str, float] = {}
        self._lock = threading.Lock()

        if self.path is not None and self.path.exists():
            with open(self.path, encoding="utf-8") as f:
                for line in f:
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        record = json.loads(line)
                        self.entries[record["key"]] = float(record["value"])
                    except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                        # A torn final line from an interrupted run.
                        continue

    def __len__(self):
        return len(self.entries)

    def get(self, key: str) -> float | None:
        with self._lock:
            return self.entries.get(key)

    def put(self, key: str, value: float):
        with self._lock:
            self.entries[key] = value
            if self.path is not None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as f:
                    f.write(json.dumps({"key": key, "value": value}) + "\n")


class CachedBackend(base.Backend):
    """
    Transparent caching wrapper: every result is bit-identical to the wrapped backend's result for the same request.
    Scores are stored exactly as returned (JSON floats round-trip exactly).

    :ivar backend: The wrapped backend; its :attr:`~Backend.calls` counts real evaluations.
    :ivar hits: Requests answered from the cache.
    :ivar misses: Requests forwarded to the wrapped backend.
    """

    def __init__(self, backend: base.Backend, cache: ScoreCache | str | Path | None = None):
        self.backend = backend
        self.cache = cache if isinstance(cache, ScoreCache) else ScoreCache(cache)
        self.hits = 0
        self.misses = 0
        super().__init__(backend.max_workers)

    @property
    def identity(self) -> str:
        return self.backend.identity

    @property
    def reads_meta(self) -> bool:
        return self.backend.reads_meta

    def _score(self, request: base.ScoreRequest) -> float:
        meta = request.meta if self.backend.reads_meta else None
        key = make_key(self.backend.identity, request.prefix, request.continuation, meta)
        value = self.cache.get(key)
        if value is not None:
            with self._calls_lock:
                self.hits += 1
            return value

        value = self.backend.score(request)
        with self._calls_lock:
            self.misses += 1
        self.cache.put(key, value)
        return value
