from __future__ import annotations

import logging
import time
from collections.abc import Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from . import records as run_records
from .config import RunConfig
from .recorders import MemoryRecorder, Recorder
from .records import RunRecord
from ..datasets import Example, load_dataset
from ..exceptions import BackendError, ConfigError, DatasetError, GrammarError, PredictionError, RenderError
from ..icl import ensemble, select
from ..icl.predict import classify, predict
from ..prompts.grammar import Template
from ..prompts.render import PromptMeta
from ..scoring.base import Backend
from ..scoring.cache import CachedBackend, ScoreCache
from ..scoring.factory import make_backend

log = logging.getLogger(__name__)

EXTERNAL_SEED = "external"


@dataclass(frozen=True)
class Cell:
    """
    One unit of work: a method applied to one example under one template (or one ensemble of templates) and one set of
    demonstrations.
    """

    method: str
    demo_seed: int | str
    templates: tuple[Template, ...]
    example: Example
    ensemble_size: int | None = None

    @property
    def template_id(self) -> int | None:
        return None if self.ensemble_size is not None else self.templates[0].id

    @property
    def members(self) -> tuple[int, ...]:
        return tuple(template.id for template in self.templates) if self.ensemble_size is not None else ()

    @property
    def coordinates(self) -> tuple:
        return self.method, self.demo_seed, self.template_id, self.ensemble_size, self.members, self.example.example_id


class Evaluation:
    """
    A full evaluation: methods x demonstration seeds x templates x examples, plus optional Template Ensembles.

    Records come out in canonical order whatever the worker count: single-template cells ordered by (method,
    demonstration seed, template id, example id), then ensemble cells ordered by (method, size, seed, example id).

    Parameters
    ----------
    config: RunConfig
        What to evaluate.
    backend: Backend
        Scoring backend; built from ``config.backend`` when omitted. It is wrapped in a :class:`CachedBackend` when the
        config names a cache file.
    workers: int
        Cells evaluated concurrently.
    recorders: list[Recorder]
        Receive every record in canonical order.
    """

    def __init__(
            self,
            config: RunConfig,
            backend: Backend = None,
            workers: int = 1,
            recorders: list[Recorder] = None,
    ):
        if workers < 1:
            raise ConfigError(f"workers must be positive, got {workers}.")

        self.config = config
        self.workers = workers
        self.recorders = recorders if recorders is not None else []
        self.run_id = config.digest

        self.grammar = config.load_grammar()
        self.dataset = load_dataset(config.dataset_path, self.grammar.num_classes)
        self.examples = select.select_subset(self.dataset, config.eval_subset_size, config.run_seed)
        self.train = (
            load_dataset(config.train_path, self.grammar.num_classes) if config.train_path is not None else self.dataset
        )

        # The backend defaults to the one the config describes.
        if backend is None:
            backend = make_backend(config.backend, gold=self.dataset.gold)
        if config.cache_path is not None:
            backend = CachedBackend(backend, ScoreCache(config.cache_path))
        self.backend = backend

        self._external = None
        if config.demonstrations_path is not None:
            self._external = select.load_demonstrations(config.demonstrations_path, self.grammar.num_classes)
        self.demonstrations: dict[int | str, select.DemonstrationSet] = {}
        self.cells = self.plan()
        self.errors = 0

    @property
    def demo_seeds(self) -> tuple[int | str, ...]:
        return (EXTERNAL_SEED,) if self._external is not None else self.config.demo_seeds

    def demonstrations_for(self, seed: int | str) -> select.DemonstrationSet:
        if seed not in self.demonstrations:
            if self._external is not None:
                self.demonstrations[seed] = self._external
            else:
                try:
                    self.demonstrations[seed] = select.select_random(self.train, self.config.n_shots, seed)
                except DatasetError as e:
                    raise ConfigError(f"n_shots: {e}") from e
        return self.demonstrations[seed]

    def plan(self) -> list[Cell]:
        """
        Every cell of the run in canonical order. Demonstrations are drawn here, before any scoring.
        """

        config = self.config
        cells = []
        for method in config.methods:
            for seed in self.demo_seeds:
                self.demonstrations_for(seed)
                pool = config.templates.pool(self.grammar, config.templates_per_seed, config.run_seed, seed)
                for template in pool:
                    cells.extend(Cell(method, seed, (template,), example) for example in self.examples)

        if config.ensemble is not None:
            sizes = config.ensemble.all_sizes
            pools = {}
            for seed in config.ensemble.seeds:
                self.demonstrations_for(seed)
                try:
                    pools[seed] = ensemble.ensemble_pool(self.grammar, sizes[-1], config.run_seed, seed)
                except GrammarError as e:
                    raise ConfigError(f"ensemble: {e}") from e

            for method in config.ensemble.methods or config.methods:
                for size in sizes:
                    for seed in config.ensemble.seeds:
                        members = tuple(sorted(pools[seed][:size], key=lambda template: template.id))
                        cells.extend(Cell(method, seed, members, example, size) for example in self.examples)
        return cells

    def evaluate(self, cell: Cell) -> RunRecord:
        """
        Evaluate one cell. Rendering and scoring failures produce an error record instead of raising.
        """

        demos = self.demonstrations_for(cell.demo_seed).demos
        meta = PromptMeta(example_id=cell.example.example_id, seed=cell.demo_seed)
        start = time.perf_counter()
        prediction = None
        error = None
        try:
            if cell.ensemble_size is not None:
                prediction = ensemble.ensemble_predict(
                    self.backend, cell.templates, demos, cell.example.text, self.grammar, cell.method,
                    self.config.cf_tokens, meta,
                )
            else:
                prediction = predict(
                    cell.method, self.backend, cell.templates[0], demos, cell.example.text, self.grammar,
                    self.config.cf_tokens, meta,
                )
        except (BackendError, PredictionError, RenderError) as e:
            error = f"{type(e).__name__}: {e}"
            log.warning(f"Cell {cell.coordinates} failed: {error}")

        elapsed = time.perf_counter() - start
        return RunRecord(
            run_id=self.run_id,
            backend_id=self.backend.identity,
            dataset_digest=self.dataset.digest,
            method=cell.method,
            demo_seed=cell.demo_seed,
            template_id=cell.template_id,
            example_id=cell.example.example_id,
            gold=cell.example.label,
            predicted=None if prediction is None else classify(prediction.distribution),
            probs=None if prediction is None else prediction.distribution.probs,
            flags=() if prediction is None else tuple(sorted(prediction.flags)),
            error=error,
            ensemble_size=cell.ensemble_size,
            members=cell.members,
            n_shots=len(demos),
            timing=round(elapsed, 6) if self.config.record_timing else None,
        )

    def _completed(self) -> list[RunRecord]:
        # A record is only replayed if every resuming recorder already holds it.
        prefixes = [recorder.completed for recorder in self.recorders if recorder.completed is not None]
        return min(prefixes, key=len) if prefixes else []

    def _emit(self, record: RunRecord):
        if record.is_error:
            self.errors += 1
        for recorder in self.recorders:
            recorder.log(self, record)

    def run(self) -> Iterator[RunRecord]:
        """
        Evaluate every cell and yield the records in canonical order, replaying records a recorder already holds.
        """

        self.errors = 0
        for recorder in self.recorders:
            recorder.setup(self)

        try:
            completed = self._completed()
            pending = self.cells[len(completed):]
            log.info(f"Run {self.run_id[:12]}: {len(self.cells)} cells, {len(completed)} already recorded, "
                     f"{self.workers} worker(s).")

            for record in completed:
                self._emit(record)
                yield record

            if self.workers == 1:
                for cell in pending:
                    record = self.evaluate(cell)
                    self._emit(record)
                    yield record
            else:
                # Score in bounded windows so an abandoned run stops early.
                window = self.workers * 8
                with ThreadPoolExecutor(max_workers=self.workers) as pool:
                    for start in range(0, len(pending), window):
                        for record in pool.map(self.evaluate, pending[start:start + window]):
                            self._emit(record)
                            yield record
        finally:
            for recorder in self.recorders:
                recorder.close(self)

        if self.errors:
            log.warning(f"{self.errors} cell(s) failed; re-run the same config to retry them.")

    def manifest(self) -> dict[str, Any]:
        """
        Run metadata written next to a completed results file. Contains nothing that varies between identical runs.
        """

        return {
            "run_id": self.run_id,
            "config": self.config.to_dict(),
            "backend_id": self.backend.identity,
            "dataset_digest": self.dataset.digest,
            "grammar_digest": self.grammar.digest,
            "dataset_size": len(self.dataset),
            "eval_subset_size": self.config.eval_subset_size,
            "examples_evaluated": len(self.examples),
            "records": len(self.cells),
            "errors": self.errors,
        }

    def to_csv(self, file_path: str | Path, fp_accuracy: int = 6):
        """
        Save the records kept by a MemoryRecorder to a .csv file, one probability column per class.

        :param file_path: Destination of the .csv file.
        :param fp_accuracy: Digits after the decimal point for probabilities.
        """

        for recorder in self.recorders:
            if isinstance(recorder, MemoryRecorder):
                frame = run_records.records_frame(recorder.records)
                frame.to_csv(file_path, index=False, float_format=f"%.{fp_accuracy}f")
                return
        raise ConfigError("to_csv() needs a MemoryRecorder among the evaluation's recorders.")


def run_evaluation(
        config: RunConfig,
        backend: Backend = None,
        workers: int = 1,
        recorders: Sequence[Recorder] = None,
) -> Iterator[RunRecord]:
    """
    Stream the records of a full evaluation in canonical order.
    """

    return Evaluation(config, backend, workers, list(recorders) if recorders is not None else None).run()
