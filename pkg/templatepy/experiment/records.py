"""
Run records: one line-delimited JSON object per evaluated cell.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any

import pandas as pd

from ..exceptions import DatasetError, PredictionError
from ..icl.predict import LabelDistribution, classify


@dataclass(frozen=True)
class RunRecord:
    """
    Outcome of one (method, demonstration seed, template, example) cell, or of one ensemble cell.

    :ivar run_id: Digest of the run config.
    :ivar backend_id: Identity of the scoring backend.
    :ivar dataset_digest: Content digest of the evaluated dataset.
    :ivar method: Base prediction method.
    :ivar demo_seed: Demonstration seed (the ensemble seed for ensemble records), or ``"external"``.
    :ivar template_id: Template of a single-template record; ``None`` for ensemble records.
    :ivar example_id: Evaluated example.
    :ivar gold: Gold class.
    :ivar predicted: Argmax of ``probs``; ``None`` for an error record.
    :ivar probs: Class probabilities; ``None`` for an error record.
    :ivar flags: Scoring adjustments made (e.g. ``boundary_space``), sorted.
    :ivar error: Failure message of an error record.
    :ivar ensemble_size: Number of ensemble members; ``None`` for single-template records.
    :ivar members: Ensemble member template ids, ascending.
    :ivar n_shots: Demonstrations in every prompt of the cell.
    :ivar timing: Wall-clock seconds of the cell, only when timing is recorded.
    """

    run_id: str
    backend_id: str
    dataset_digest: str
    method: str
    demo_seed: int | str
    template_id: int | None
    example_id: int
    gold: int
    predicted: int | None
    probs: tuple[float, ...] | None
    flags: tuple[str, ...] = ()
    error: str | None = None
    ensemble_size: int | None = None
    members: tuple[int, ...] = ()
    n_shots: int = 0
    timing: float | None = None

    @property
    def is_error(self) -> bool:
        return self.error is not None

    @property
    def is_ensemble(self) -> bool:
        return self.ensemble_size is not None

    @property
    def correct(self) -> bool:
        return self.predicted == self.gold

    @property
    def cell(self) -> tuple:
        """
        Coordinates of the cell this record answers.
        """

        return self.method, self.demo_seed, self.template_id, self.ensemble_size, self.members, self.example_id

    def validate(self):
        """
        Check the probability vector and the predicted class, raising :class:`DatasetError` on a corrupt record.
        """

        if self.is_error:
            if self.predicted is not None or self.probs is not None:
                raise DatasetError("an error record must not carry a prediction.")
            return
        if self.probs is None or self.predicted is None:
            raise DatasetError("record has neither a prediction nor an error.")
        try:
            dist = LabelDistribution(self.probs, "ensemble" if self.is_ensemble else self.method)
        except PredictionError as e:
            raise DatasetError(f"invalid probabilities: {e}") from e
        if classify(dist) != self.predicted:
            raise DatasetError(f"predicted class {self.predicted} is not the argmax of {self.probs}.")

    def to_dict(self) -> dict[str, Any]:
        document = asdict(self)
        document["flags"] = list(self.flags)
        document["members"] = list(self.members)
        document["probs"] = None if self.probs is None else list(self.probs)
        if self.timing is None:
            del document["timing"]
        return document

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_dict(cls, document: Mapping[str, Any]) -> "RunRecord":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(document) - known)
        if unknown:
            raise DatasetError(f"unknown record keys {unknown!r}.")
        values = dict(document)
        values["flags"] = tuple(values.get("flags", ()))
        values["members"] = tuple(values.get("members", ()))
        if values.get("probs") is not None:
            values["probs"] = tuple(float(p) for p in values["probs"])
        try:
            return cls(**values)
        except TypeError as e:
            raise DatasetError(f"malformed record: {e}") from None


def iter_records(path: str | Path, validate: bool = True) -> Iterator[RunRecord]:
    """
    Stream the records of a results file, validating every probability vector.
    """

    with open(path, encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = RunRecord.from_dict(json.loads(line))
                if validate:
                    record.validate()
            except json.JSONDecodeError as e:
                raise DatasetError(f"malformed JSON ({e.msg}).", line=line_number, path=str(path)) from None
            except DatasetError as e:
                raise DatasetError(str(e), line=line_number, path=str(path)) from None
            yield record


def read_records(path: str | Path) -> list[RunRecord]:
    return list(iter_records(path))


def records_frame(records: Iterable[RunRecord]) -> pd.DataFrame:
    """
    One row per record with one ``p<c>`` column per class, as exported to CSV.
    """

    rows = []
    for record in records:
        row = record.to_dict()
        probs = row.pop("probs")
        row["flags"] = ",".join(record.flags)
        row["members"] = ",".join(str(member) for member in record.members)
        if probs is not None:
            row.update({f"p{class_index}": p for class_index, p in enumerate(probs)})
        rows.append(row)

    frame = pd.DataFrame(rows)
    for column in ("template_id", "predicted", "ensemble_size"):
        if column in frame:
            frame[column] = pd.array(
                [None if pd.isna(value) else int(value) for value in frame[column]], dtype="Int64"
            )
    return frame
