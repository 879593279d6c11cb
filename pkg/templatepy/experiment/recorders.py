from __future__ import annotations

import json
import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import TYPE_CHECKING

from tqdm import tqdm

from .records import RunRecord

if TYPE_CHECKING:
    from .evaluation import Evaluation

log = logging.getLogger(__name__)


class Recorder(ABC):
    """
    Base class for all recorders. A Recorder is passed into an Evaluation and is called once for every record the
    evaluation produces, in canonical order.

    :ivar completed: Records already persisted by an earlier run of the same config, which the evaluation replays
        instead of recomputing. ``None`` for recorders that cannot resume.
    """

    def __init__(self):
        self.completed: list[RunRecord] | None = None

    @abstractmethod
    def setup(self, evaluation: Evaluation):
        """
        Called before the first record; the evaluation's plan (cells, run id) is available.
        """

        pass

    @abstractmethod
    def log(self, evaluation: Evaluation, record: RunRecord):
        pass

    def close(self, evaluation: Evaluation):
        """
        Called after the last record, including when the run stops early.
        """

        pass


class MemoryRecorder(Recorder):
    """
    Keeps every record in a list.
    """

    def __init__(self):
        self.records = []
        super().__init__()

    def setup(self, evaluation: Evaluation):
        self.records = []

    def log(self, evaluation: Evaluation, record: RunRecord):
        self.records.append(record)


class JsonlRecorder(Recorder):
    """
    Appends records to a line-delimited results file and writes ``<path>.manifest.json`` when the run closes.

    On setup an existing file is checked line by line against the evaluation's plan. The longest prefix of records that
    match the run id, backend, dataset content, and cell coordinates, and carry no error, is kept and offered for
    replay; the file is truncated after it and everything else is recomputed.

    :ivar path: Results file.
    :ivar resume: Reuse a valid prefix of an existing file; otherwise the file is overwritten.
    """

    def __init__(self, path: str | Path, resume: bool = True):
        self.path = Path(path)
        self.resume = resume
        self._file = None
        self._skip = 0
        self._written = 0
        super().__init__()

    @property
    def manifest_path(self) -> Path:
        return self.path.with_name(self.path.name + ".manifest.json")

    def _valid_prefix(self, evaluation: Evaluation) -> tuple[list[RunRecord], int]:
        expected = evaluation.run_id, evaluation.backend.identity, evaluation.dataset.digest
        records = []
        offset = 0
        with open(self.path, "rb") as f:
            for raw, cell in zip(f, evaluation.cells):
                if not raw.endswith(b"\n"):
                    break
                try:
                    record = RunRecord.from_dict(json.loads(raw))
                    record.validate()
                except (ValueError, TypeError):
                    break
                if record.is_error or record.cell != cell.coordinates:
                    break
                if (record.run_id, record.backend_id, record.dataset_digest) != expected:
                    break
                records.append(record)
                offset += len(raw)
        return records, offset

    def setup(self, evaluation: Evaluation):
        self.completed = []
        if self.resume and self.path.exists():
            self.completed, offset = self._valid_prefix(evaluation)
            with open(self.path, "r+b") as f:
                f.truncate(offset)
            if self.completed:
                log.info(f"Resuming {self.path}: {len(self.completed)} of {len(evaluation.cells)} records kept.")
            self._file = open(self.path, "a", encoding="utf-8")
        else:
            self._file = open(self.path, "w", encoding="utf-8")

        if self.manifest_path.exists():
            self.manifest_path.unlink()
        self._skip = len(self.completed)
        self._written = 0

    def log(self, evaluation: Evaluation, record: RunRecord):
        self._written += 1
        if self._skip:
            self._skip -= 1
            return
        self._file.write(record.to_json() + "\n")
        self._file.flush()

    def close(self, evaluation: Evaluation):
        if self._file is None:
            return
        self._file.close()
        self._file = None

        # Only a run that produced every planned record is manifested.
        if self._written == len(evaluation.cells):
            manifest = evaluation.manifest()
            self.manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


class ProgressRecorder(Recorder):
    """
    Progress bar over evaluation cells.
    """

    def __init__(self, desc: str = "cells", disable: bool = False):
        self.desc = desc
        self.disable = disable
        self._bar = None
        super().__init__()

    def setup(self, evaluation: Evaluation):
        self._bar = tqdm(total=len(evaluation.cells), desc=self.desc, unit="cell", disable=self.disable)

    def log(self, evaluation: Evaluation, record: RunRecord):
        self._bar.update(1)
        if record.is_error:
            self._bar.set_postfix_str("errors recorded")

    def close(self, evaluation: Evaluation):
        if self._bar is not None:
            self._bar.close()
            self._bar = None
