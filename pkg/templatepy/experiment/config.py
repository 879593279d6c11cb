from __future__ import annotations

import json
from collections.abc import Mapping
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from .. import streams
from ..exceptions import ConfigError, GrammarError
from ..icl.predict import DEFAULT_CF_TOKENS, METHODS
from ..prompts.grammar import PRESETS, ComponentSet, Template, load_grammar, load_preset, sample_templates
from ..scoring.factory import BackendSpec

# Fields that change where results are stored, never what they are.
NON_IDENTITY_FIELDS = ("cache_path",)


def _reject_unknown(cls, document: Mapping[str, Any], where: str):
    if not isinstance(document, Mapping):
        raise ConfigError(f"{where}: expected an object, got {type(document).__name__}.")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(document) - known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown!r}.")


@dataclass(frozen=True)
class TemplateSource:
    """
    Where the single-template pools come from.

    :ivar ids: Explicit template ids; overrides sampling when given.
    :ivar seed: Seed of the template draw; defaults to one derived from the run seed.
    :ivar per_seed: Draw a fresh pool for every demonstration seed instead of sharing one pool across seeds.
    """

    ids: tuple[int, ...] | None = None
    seed: int | None = None
    per_seed: bool = False

    def __post_init__(self):
        if self.ids is not None:
            ids = tuple(self.ids)
            if len(ids) == 0:
                raise ConfigError("templates.ids must not be empty.")
            if len(set(ids)) != len(ids):
                raise ConfigError(f"templates.ids repeats an id: {ids}.")
            object.__setattr__(self, "ids", ids)

    @classmethod
    def from_dict(cls, document: Mapping[str, Any]) -> "TemplateSource":
        _reject_unknown(cls, document, "templates")
        return cls(**document)

    def pool(self, grammar: ComponentSet, k: int, run_seed: int, demo_seed: int | str) -> list[Template]:
        """
        Templates evaluated with one demonstration seed, in ascending id order.
        """

        try:
            if self.ids is not None:
                return sorted((Template.from_id(grammar, template_id) for template_id in self.ids),
                              key=lambda template: template.id)
            seed = self.seed if self.seed is not None else streams.derive_seed(run_seed, "templates")
            if self.per_seed:
                seed = streams.derive_seed(seed, "templates-per-seed", demo_seed)
            return sorted(sample_templates(grammar, k, seed), key=lambda template: template.id)
        except GrammarError as e:
            raise ConfigError(f"templates: {e}") from e


@dataclass(frozen=True)
class EnsembleConfig:
    """
    Template Ensemble evaluation.

    :ivar size: Ensemble size N.
    :ivar seeds: Ensemble seeds; each seed draws its own member pool and demonstrations.
    :ivar sizes: Extra sizes for an ensemble-size curve; members of a smaller ensemble are a prefix of the largest pool.
    :ivar methods: Base methods to ensemble; defaults to the run's methods.
    """

    size: int = 5
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    sizes: tuple[int, ...] = ()
    methods: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(self.seeds))
        object.__setattr__(self, "sizes", tuple(self.sizes))
        if self.methods is not None:
            object.__setattr__(self, "methods", tuple(self.methods))

        if any(size < 1 for size in self.all_sizes):
            raise ConfigError(f"ensemble sizes must be positive, got {self.all_sizes}.")
        if len(self.seeds) == 0 or len(set(self.seeds)) != len(self.seeds):
            raise ConfigError(f"ensemble.seeds must be non-empty and distinct, got {self.seeds}.")
        if self.methods is not None and (not self.methods or set(self.methods) - set(METHODS)):
            raise ConfigError(f"ensemble.methods must be a non-empty subset of {METHODS}, got {self.methods}.")

    @property
    def all_sizes(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.sizes) | {self.size}))

    @classmethod
    def from_dict(cls, document: Mapping[str, Any]) -> "EnsembleConfig":
        _reject_unknown(cls, document, "ensemble")
        return cls(**document)


@dataclass(frozen=True)
class RunConfig:
    """
    Everything that determines the records of a run. Its digest is the run id.

    :ivar backend: Scoring backend.
    :ivar dataset_path: Evaluated dataset (JSON lines of text and label).
    :ivar grammar: Grammar file path, or the name of a shipped preset.
    :ivar n_shots: Demonstrations per prompt.
    :ivar methods: Prediction methods to run.
    :ivar demo_seeds: Demonstration selection seeds.
    :ivar templates_per_seed: Templates evaluated per demonstration seed.
    :ivar templates: Template pool source.
    :ivar cf_tokens: Content-free inputs for calibration.
    :ivar ensemble: Optional Template Ensemble evaluation.
    :ivar eval_subset_size: Optional cap on the number of evaluated examples (seeded draw).
    :ivar run_seed: Root of every random draw.
    :ivar train_path: Demonstration pool; defaults to the evaluated dataset.
    :ivar demonstrations_path: Fixed demonstration file shared by every seed; replaces random selection.
    :ivar cache_path: Persistent score cache.
    :ivar record_timing: Write per-cell wall-clock time into records (makes outputs run-dependent).
    """

    backend: BackendSpec
    dataset_path: str
    grammar: str
    n_shots: int = 0
    methods: tuple[str, ...] = ("direct",)
    demo_seeds: tuple[int, ...] = (0, 1, 2)
    templates_per_seed: int = 10
    templates: TemplateSource = field(default_factory=TemplateSource)
    cf_tokens: tuple[str, ...] = DEFAULT_CF_TOKENS
    ensemble: EnsembleConfig | None = None
    eval_subset_size: int | None = None
    run_seed: int = 0
    train_path: str | None = None
    demonstrations_path: str | None = None
    cache_path: str | None = None
    record_timing: bool = False

    def __post_init__(self):
        for name in ("methods", "demo_seeds", "cf_tokens"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

        if not self.methods:
            raise ConfigError("methods must not be empty.")
        if set(self.methods) - set(METHODS) or len(set(self.methods)) != len(self.methods):
            raise ConfigError(f"methods must be distinct names from {METHODS}, got {self.methods}.")
        if not isinstance(self.n_shots, int) or self.n_shots < 0:
            raise ConfigError(f"n_shots must be a non-negative integer, got {self.n_shots!r}.")
        if not self.demo_seeds or len(set(self.demo_seeds)) != len(self.demo_seeds):
            raise ConfigError(f"demo_seeds must be non-empty and distinct, got {self.demo_seeds}.")
        if self.templates_per_seed < 1:
            raise ConfigError(f"templates_per_seed must be positive, got {self.templates_per_seed}.")
        if not self.cf_tokens:
            raise ConfigError("cf_tokens must not be empty.")
        if self.eval_subset_size is not None and self.eval_subset_size < 1:
            raise ConfigError(f"eval_subset_size must be positive, got {self.eval_subset_size}.")

    @classmethod
    def from_dict(cls, document: Mapping[str, Any], base_dir: str | Path | None = None) -> "RunConfig":
        """
        Build a config from a parsed JSON document.

        :param document: Config mapping; nested ``backend``, ``templates`` and ``ensemble`` objects are parsed too.
        :param base_dir: Directory relative file paths are resolved against (the config file's directory).
        """

        _reject_unknown(cls, document, "config")
        for required in ("backend", "dataset_path", "grammar"):
            if required not in document:
                raise ConfigError(f"config: missing {required!r}.")

        values = dict(document)
        values["backend"] = BackendSpec.from_dict(values["backend"])
        if "templates" in values:
            values["templates"] = TemplateSource.from_dict(values["templates"])
        if values.get("ensemble") is not None:
            values["ensemble"] = EnsembleConfig.from_dict(values["ensemble"])

        if base_dir is not None:
            for name in ("dataset_path", "train_path", "demonstrations_path", "cache_path"):
                if values.get(name) is not None:
                    values[name] = str(Path(base_dir) / values[name])
            if values["grammar"] not in PRESETS:
                values["grammar"] = str(Path(base_dir) / values["grammar"])
        return cls(**values)

    @classmethod
    def from_json(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            document = json.loads(path.read_text(encoding="utf-8"))
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: malformed JSON ({e.msg}).") from None
        return cls.from_dict(document, base_dir=path.parent)

    def to_dict(self) -> dict[str, Any]:
        document = asdict(self)
        # Tuples become lists.
        return json.loads(json.dumps(document))

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    @property
    def digest(self) -> str:
        document = self.to_dict()
        for name in NON_IDENTITY_FIELDS:
            document.pop(name)
        return streams.content_digest(document)

    def load_grammar(self) -> ComponentSet:
        if self.grammar in PRESETS and not Path(self.grammar).exists():
            return load_preset(self.grammar)
        return load_grammar(self.grammar)
