from __future__ import annotations

import importlib.resources
import itertools
import json
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .. import streams
from ..exceptions import GrammarError

PLACEHOLDER = "{}"
COMPONENTS = ("input_verbalizer", "output_verbalizer", "intra_separator", "inter_separator")
LIST_FIELDS = ("input_verbalizers", "output_verbalizers", "intra_separators", "inter_separators")
METADATA_FIELDS = ("description", "label_words_source")
PRESETS = ("sst2", "dbpedia", "agnews", "trec")


@dataclass(frozen=True)
class ComponentSet:
    r"""
    The template grammar of one classification task: option lists for the four template components plus the label
    words that name each class.

    Any combination of one option from each list is a valid template, so a grammar with :math:`|I|` input verbalizers,
    :math:`|O|` output verbalizers, and :math:`|S_a|`, :math:`|S_e|` intra/inter separators describes
    :math:`|I| \cdot |O| \cdot |S_a| \cdot |S_e|` templates.

    Parameters
    ----------
    task_name: str
        Name of the task (e.g. ``"sst2"``).
    input_verbalizers: tuple[str, ...]
        Patterns wrapping the input text; each contains exactly one ``{}``.
    output_verbalizers: tuple[str, ...]
        Patterns wrapping the label word; each contains exactly one ``{}``.
    intra_separators: tuple[str, ...]
        Strings joining the input to the output inside one demonstration.
    inter_separators: tuple[str, ...]
        Strings joining consecutive demonstrations.
    label_words: tuple[str, ...]
        Surface form of each class, indexed by class id.
    description: str
        Free-form note carried over from the grammar file.
    label_words_source: str
        Where the label words come from, when they are a documented choice rather than part of the grammar.
    """

    task_name: str
    input_verbalizers: tuple[str, ...]
    output_verbalizers: tuple[str, ...]
    intra_separators: tuple[str, ...]
    inter_separators: tuple[str, ...]
    label_words: tuple[str, ...]
    description: str = ""
    label_words_source: str = ""

    def __post_init__(self):
        if not isinstance(self.task_name, str) or not self.task_name:
            raise GrammarError("must be a non-empty string.", field="task_name")

        for name in (*LIST_FIELDS, "label_words"):
            options = getattr(self, name)
            if not isinstance(options, (list, tuple)) or not all(isinstance(option, str) for option in options):
                raise GrammarError("must be a list of strings.", field=name)
            object.__setattr__(self, name, tuple(options))
            options = getattr(self, name)

            if len(options) == 0:
                raise GrammarError("must not be empty.", field=name)
            duplicates = sorted({option for option in options if options.count(option) > 1})
            if duplicates:
                raise GrammarError(f"duplicate options {duplicates!r}.", field=name)

        for name in ("input_verbalizers", "output_verbalizers"):
            for pattern in getattr(self, name):
                if pattern.count(PLACEHOLDER) != 1:
                    raise GrammarError(
                        f"pattern {pattern!r} must contain exactly one {PLACEHOLDER!r} placeholder.", field=name
                    )

    # ---------------------------------
    # ALTERNATE INSTANTIATION FUNCTIONS
    # ---------------------------------
    @classmethod
    def from_dict(cls, document: Mapping[str, Any]) -> "ComponentSet":
        """
        Build a grammar from a parsed grammar document. All six grammar keys are required; ``description`` and
        ``label_words_source`` are optional metadata.
        """

        if not isinstance(document, Mapping):
            raise GrammarError(f"grammar document must be a JSON object, got {type(document).__name__}.")

        allowed = {"task_name", *LIST_FIELDS, "label_words", *METADATA_FIELDS}
        unknown = sorted(set(document) - allowed)
        if unknown:
            raise GrammarError(f"unknown keys {unknown!r}.")
        for key in ("task_name", *LIST_FIELDS, "label_words"):
            if key not in document:
                raise GrammarError("missing from grammar document.", field=key)

        return cls(
            task_name=document["task_name"],
            input_verbalizers=document["input_verbalizers"],
            output_verbalizers=document["output_verbalizers"],
            intra_separators=document["intra_separators"],
            inter_separators=document["inter_separators"],
            label_words=document["label_words"],
            description=document.get("description", ""),
            label_words_source=document.get("label_words_source", ""),
        )

    @classmethod
    def from_json(cls, text: str) -> "ComponentSet":
        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            raise GrammarError(f"malformed grammar document: {e}") from e
        return cls.from_dict(document)

    # ----------
    # PROPERTIES
    # ----------
    @property
    def num_classes(self) -> int:
        return len(self.label_words)

    @property
    def radices(self) -> tuple[int, int, int, int]:
        """
        Number of options per component, in canonical digit order.
        """

        return (
            len(self.input_verbalizers),
            len(self.output_verbalizers),
            len(self.intra_separators),
            len(self.inter_separators),
        )

    @property
    def template_count(self) -> int:
        count = 1
        for radix in self.radices:
            count *= radix
        return count

    def options(self, component: str) -> tuple[str, ...]:
        """
        Option list for one of the four component names in :data:`COMPONENTS`.
        """

        return getattr(self, LIST_FIELDS[COMPONENTS.index(component)])

    def positions(self, template: "Template") -> tuple[int, int, int, int]:
        """
        Indices of a template's four components within this grammar.
        """

        try:
            return tuple(
                self.options(component).index(getattr(template, component)) for component in COMPONENTS
            )
        except ValueError:
            raise GrammarError(f"template {describe_template(template)} does not belong to grammar "
                               f"{self.task_name!r}.") from None

    def template(self, template_id: int) -> "Template":
        return Template.from_id(self, template_id)

    def label_word(self, class_index: int) -> str:
        if not 0 <= class_index < self.num_classes:
            raise GrammarError(f"class index {class_index} outside [0, {self.num_classes}).", field="label_words")
        return self.label_words[class_index]

    def to_dict(self) -> dict[str, Any]:
        document = {
            "task_name": self.task_name,
            "input_verbalizers": list(self.input_verbalizers),
            "output_verbalizers": list(self.output_verbalizers),
            "intra_separators": list(self.intra_separators),
            "inter_separators": list(self.inter_separators),
            "label_words": list(self.label_words),
        }
        if self.description:
            document["description"] = self.description
        if self.label_words_source:
            document["label_words_source"] = self.label_words_source
        return document

    @property
    def digest(self) -> str:
        return streams.content_digest(self.to_dict())


@dataclass(frozen=True)
class Template:
    """
    One concrete template: a choice of input verbalizer, output verbalizer, intra-separator, and inter-separator.

    :ivar id: Canonical mixed-radix index of the four component positions within the parent grammar (digit order:
        input verbalizer, output verbalizer, intra, inter; last digit fastest).
    """

    input_verbalizer: str
    output_verbalizer: str
    intra_separator: str
    inter_separator: str
    id: int

    @classmethod
    def from_id(cls, grammar: ComponentSet, template_id: int) -> "Template":
        """
        Decode a canonical id back into its components.
        """

        if not isinstance(template_id, int) or not 0 <= template_id < grammar.template_count:
            raise GrammarError(f"template id {template_id!r} outside [0, {grammar.template_count}).")

        digits = []
        remainder = template_id
        for radix in reversed(grammar.radices):
            remainder, digit = divmod(remainder, radix)
            digits.append(digit)
        i, o, a, e = reversed(digits)

        return cls(
            input_verbalizer=grammar.input_verbalizers[i],
            output_verbalizer=grammar.output_verbalizers[o],
            intra_separator=grammar.intra_separators[a],
            inter_separator=grammar.inter_separators[e],
            id=template_id,
        )

    @property
    def components(self) -> tuple[str, str, str, str]:
        return self.input_verbalizer, self.output_verbalizer, self.intra_separator, self.inter_separator


def encode_positions(grammar: ComponentSet, positions: tuple[int, int, int, int]) -> int:
    template_id = 0
    for position, radix in zip(positions, grammar.radices):
        template_id = template_id * radix + position
    return template_id


def load_grammar(source: str | Path | Mapping[str, Any]) -> ComponentSet:
    """
    Load and validate a grammar from a JSON file path or an already-parsed document.

    :param source: Path to a grammar JSON file, or a mapping with the grammar keys.

    :return: Validated grammar.
    """

    if isinstance(source, Mapping):
        return ComponentSet.from_dict(source)

    path = Path(source)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise GrammarError(f"cannot read grammar file {path}: {e}") from e
    return ComponentSet.from_json(text)


def load_preset(name: str) -> ComponentSet:
    """
    Load one of the shipped grammars (``sst2``, ``dbpedia``, ``agnews``, ``trec``).
    """

    if name not in PRESETS:
        raise GrammarError(f"unknown preset {name!r}, expected one of {PRESETS}.")
    with importlib.resources.files("templatepy.resources").joinpath(f"{name}.json").open(encoding="utf-8") as f:
        return ComponentSet.from_json(f.read())


def list_presets() -> tuple[str, ...]:
    return PRESETS


def dump_grammar(grammar: ComponentSet, path: str | Path | None = None) -> str:
    """
    Serialise a grammar to JSON; ``json`` escapes control characters so separators such as ``"\\n"`` round-trip
    exactly.
    """

    text = json.dumps(grammar.to_dict(), indent=2, ensure_ascii=False) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def enumerate_templates(grammar: ComponentSet) -> list[Template]:
    """
    Every template of a grammar in canonical id order.
    """

    templates = []
    for template_id, components in enumerate(itertools.product(
            grammar.input_verbalizers,
            grammar.output_verbalizers,
            grammar.intra_separators,
            grammar.inter_separators,
    )):
        templates.append(Template(*components, id=template_id))
    return templates


def sample_templates(grammar: ComponentSet, k: int, seed: int) -> list[Template]:
    """
    Draw k distinct templates uniformly without replacement.

    The draw is a seeded Fisher-Yates shuffle of the canonical id range driven by a splitmix64 stream, so identical
    (grammar, k, seed) produce the identical ordered list on every platform.

    :param grammar: Grammar to sample from.
    :param k: Number of templates, 1 <= k <= template count.
    :param seed: Seed of the splitmix64 stream.

    :return: Templates in draw order.
    """

    total = grammar.template_count
    if not isinstance(k, int) or not 1 <= k <= total:
        raise GrammarError(f"cannot sample k={k} templates from a grammar with {total} templates.")

    stream = streams.SplitMix64(seed)
    return [Template.from_id(grammar, template_id) for template_id in stream.sample_indices(total, k)]


def describe_template(template: Template) -> str:
    """
    Escape-visible one-line form of a template, e.g. ``#12 'text: {}' 'It was {}.' ' ' '\\n\\n'``.
    """

    return f"#{template.id} " + " ".join(repr(component) for component in template.components)
