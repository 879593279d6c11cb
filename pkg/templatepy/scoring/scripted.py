from __future__ import annotations

import json
from collections.abc import Mapping
from pathlib import Path

from . import base
from .. import streams
from ..exceptions import BackendError, ScriptMissError


class ScriptedBackend(base.Backend):
    """
    Exact lookup table from (prefix, continuation) to log-probability. Any request missing from the table is an error,
    which makes this backend the oracle for hand-computed prediction tests.

    :ivar table: The (prefix, continuation) -> logprob mapping.
    """

    def __init__(self, table: Mapping[tuple[str, str], float], max_workers: int = 1):
        self.table = {(prefix, continuation): float(value) for (prefix, continuation), value in table.items()}
        self._digest = streams.content_digest(sorted([p, c, v] for (p, c), v in self.table.items()))[:16]
        super().__init__(max_workers)

    @classmethod
    def from_file(cls, path: str | Path, max_workers: int = 1) -> "ScriptedBackend":
        """
        Load a table from a JSON-lines file of ``{"prefix": ..., "continuation": ..., "logprob": ...}`` records.
        """

        table = {}
        with open(path, encoding="utf-8") as f:
            for line_number, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    entry = json.loads(line)
                    table[(entry["prefix"], entry["continuation"])] = float(entry["logprob"])
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                    raise BackendError(f"{path}:{line_number}: malformed scripted entry ({e}).") from e
        return cls(table, max_workers)

    @property
    def identity(self) -> str:
        return f"scripted:{self._digest}"

    def _score(self, request: base.ScoreRequest) -> float:
        try:
            return self.table[(request.prefix, request.continuation)]
        except KeyError:
            raise ScriptMissError(
                f"no scripted score for prefix={request.prefix!r} continuation={request.continuation!r}."
            ) from None
