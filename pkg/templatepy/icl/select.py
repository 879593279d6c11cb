from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .. import streams
from ..datasets import Dataset, Example, read_records
from ..exceptions import DatasetError
from ..prompts.render import Demonstration

SOURCES = ("random", "file")


@dataclass(frozen=True)
class DemonstrationSet:
    """
    Demonstrations in prompt order. Order is data: it is the draw order or the file order, never re-sorted.

    :ivar demos: Demonstrations in prompt order.
    :ivar seed: Seed of a random draw, or ``"external"`` for demonstrations ingested from a file.
    :ivar source: ``random`` or ``file``.
    :ivar example_ids: Source example ids of a random draw (empty for files).
    """

    demos: tuple[Demonstration, ...]
    seed: int | str
    source: str
    example_ids: tuple[int, ...] = ()

    def __post_init__(self):
        if self.source not in SOURCES:
            raise DatasetError(f"unknown demonstration source {self.source!r}.")
        if len(set(self.example_ids)) != len(self.example_ids):
            raise DatasetError(f"demonstration draw repeats an example: {self.example_ids}.")

    def __len__(self):
        return len(self.demos)


def select_random(dataset: Dataset, n: int, seed: int) -> DemonstrationSet:
    """
    Draw n demonstrations uniformly without replacement, in draw order, with no class balancing.

    The draw stream is derived from the seed and the dataset's content digest, so equal content and seed reproduce the
    same demonstrations whatever the file is called, and every backend evaluated with a seed sees the same draw.

    :param dataset: Pool of labelled examples (usually the training split).
    :param n: Number of demonstrations, 0 <= n <= len(dataset).
    :param seed: Selection seed.
    """

    if not isinstance(n, int) or not 0 <= n <= len(dataset):
        raise DatasetError(f"cannot select {n} demonstrations from {len(dataset)} examples.")

    stream = streams.SplitMix64.for_purpose(seed, "demonstrations", dataset.digest)
    indices = stream.sample_indices(len(dataset), n)
    chosen = [dataset[index] for index in indices]
    return DemonstrationSet(
        demos=tuple(Demonstration(example.text, example.label) for example in chosen),
        seed=seed,
        source="random",
        example_ids=tuple(example.example_id for example in chosen),
    )


def load_demonstrations(path: str | Path, num_classes: int | None = None) -> DemonstrationSet:
    """
    Ingest an externally selected demonstration set (e.g. produced by a concept-model or retrieval selector). The file
    uses the dataset schema; order is preserved exactly and an empty file is a valid zero-shot set.
    """

    pairs = read_records(path, num_classes)
    return DemonstrationSet(
        demos=tuple(Demonstration(text, label) for text, label in pairs),
        seed="external",
        source="file",
    )


def select_subset(dataset: Dataset, size: int | None, seed: int) -> list[Example]:
    """
    Seeded evaluation subset. Returned in dataset order so that record order stays canonical.

    :param size: Subset size cap; ``None`` (or a cap at least the dataset size) keeps every example.
    """

    if size is None or size >= len(dataset):
        return list(dataset)
    if size < 1:
        raise DatasetError(f"evaluation subset size must be positive, got {size}.")

    stream = streams.SplitMix64.for_purpose(seed, "evaluation-subset", dataset.digest)
    return [dataset[index] for index in sorted(stream.sample_indices(len(dataset), size))]
