"""
Labelled example files: one JSON record per line with ``text`` and an integer ``label``.
"""

from __future__ import annotations

import json
from collections.abc import Iterator
from dataclasses import dataclass
from pathlib import Path

from . import streams
from .exceptions import DatasetError


@dataclass(frozen=True)
class Example:
    """
    :ivar text: Input text.
    :ivar label: Gold class index.
    :ivar example_id: Position of the example in its source file (0-based), stable across subsets.
    """

    text: str
    label: int
    example_id: int


@dataclass(frozen=True)
class Dataset:
    """
    Ordered labelled examples plus a content digest. The digest depends on the texts and labels only, never on the
    file path, so reproducibility follows the content.
    """

    examples: tuple[Example, ...]
    digest: str
    name: str = ""

    @classmethod
    def from_pairs(cls, pairs: list[tuple[str, int]], name: str = "") -> "Dataset":
        examples = tuple(Example(text, label, example_id) for example_id, (text, label) in enumerate(pairs))
        return cls(examples, dataset_digest(examples), name)

    def __len__(self):
        return len(self.examples)

    def __iter__(self) -> Iterator[Example]:
        return iter(self.examples)

    def __getitem__(self, index: int) -> Example:
        return self.examples[index]

    @property
    def gold(self) -> dict[int, int]:
        return {example.example_id: example.label for example in self.examples}


def dataset_digest(examples: tuple[Example, ...]) -> str:
    return streams.content_digest([[example.text, example.label] for example in examples])


def read_records(path: str | Path, num_classes: int | None = None) -> list[tuple[str, int]]:
    """
    Parse a labelled record file.

    :param path: File of ``{"text": ..., "label": ...}`` lines; blank lines are skipped.
    :param num_classes: When given, labels must lie in [0, num_classes).

    :return: (text, label) pairs in file order.
    """

    pairs = []
    try:
        f = open(path, encoding="utf-8")
    except OSError as e:
        raise DatasetError(f"cannot open: {e}", path=str(path)) from e

    with f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetError(f"malformed JSON ({e.msg}).", line=line_number, path=str(path)) from None
            if not isinstance(record, dict) or "text" not in record or "label" not in record:
                raise DatasetError("record needs 'text' and 'label' fields.", line=line_number, path=str(path))

            text, label = record["text"], record["label"]
            if not isinstance(text, str):
                raise DatasetError(f"text must be a string, got {text!r}.", line=line_number, path=str(path))
            if isinstance(label, bool) or not isinstance(label, int):
                raise DatasetError(f"label must be an integer, got {label!r}.", line=line_number, path=str(path))
            if label < 0 or (num_classes is not None and label >= num_classes):
                bound = f"[0, {num_classes})" if num_classes is not None else "[0, C)"
                raise DatasetError(f"label {label} outside {bound}.", line=line_number, path=str(path))
            pairs.append((text, label))
    return pairs


def load_dataset(path: str | Path, num_classes: int | None = None) -> Dataset:
    """
    Load a labelled dataset export (e.g. SST-2, DBPedia, AG News, TREC) from a JSON-lines file.
    """

    return Dataset.from_pairs(read_records(path, num_classes), name=Path(path).stem)


def write_dataset(dataset: Dataset, path: str | Path):
    with open(path, "w", encoding="utf-8") as f:
        for example in dataset:
            f.write(json.dumps({"text": example.text, "label": example.label}, ensure_ascii=False) + "\n")
