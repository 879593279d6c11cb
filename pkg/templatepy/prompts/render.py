from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, replace
from typing import Literal

from .grammar import PLACEHOLDER, ComponentSet, Template
from ..exceptions import RenderError

Mode = Literal["direct", "channel", "content_free"]
MODES: tuple[str, ...] = ("direct", "channel", "content_free")


@dataclass(frozen=True)
class Demonstration:
    """
    A labelled example placed in the prompt context.

    :ivar text: Input text.
    :ivar class_index: Class id of the demonstration's label.
    """

    text: str
    class_index: int


@dataclass(frozen=True)
class PromptMeta:
    """
    Provenance tags attached to a rendered prompt. Real backends ignore them; synthetic backends may read them.
    """

    template_id: int | None = None
    example_id: int | None = None
    class_index: int | None = None
    seed: int | str | None = None
    mode: str | None = None


@dataclass(frozen=True)
class RenderedPrompt:
    """
    An exact (prefix, continuation) pair ready for scoring. ``prefix + continuation`` is the full scored sequence.
    """

    prefix: str
    continuation: str
    mode: str
    meta: PromptMeta = PromptMeta()

    def __post_init__(self):
        if not self.continuation:
            raise RenderError(f"rendered {self.mode} prompt has an empty continuation.")

    @property
    def text(self) -> str:
        return self.prefix + self.continuation


def split_pattern(pattern: str) -> tuple[str, str]:
    """
    Split a verbalizer pattern around its placeholder into (text before, text after).
    """

    head, _, tail = pattern.partition(PLACEHOLDER)
    return head, tail


def fill(pattern: str, value: str) -> str:
    head, tail = split_pattern(pattern)
    return head + value + tail


def _check_class(grammar: ComponentSet, class_index: int, what: str = "class index"):
    if not isinstance(class_index, int) or not 0 <= class_index < grammar.num_classes:
        raise RenderError(f"{what} {class_index!r} outside [0, {grammar.num_classes}) for grammar "
                          f"{grammar.task_name!r}.")


def _context(blocks: list[str], inter: str, test_block: str) -> str:
    # Zero demonstrations drop both the demonstration block and its trailing inter-separator.
    if not blocks:
        return test_block
    return inter.join(blocks) + inter + test_block


def _demo_blocks(template: Template, demos: Sequence[Demonstration], grammar: ComponentSet, channel: bool) -> list[str]:
    blocks = []
    for demo in demos:
        _check_class(grammar, demo.class_index, what="demonstration class index")
        source = fill(template.input_verbalizer, demo.text)
        target = fill(template.output_verbalizer, grammar.label_words[demo.class_index])
        if channel:
            blocks.append(target + template.intra_separator + source)
        else:
            blocks.append(source + template.intra_separator + target)
    return blocks


def render_direct(
        template: Template,
        demos: Sequence[Demonstration],
        test_text: str,
        class_index: int,
        grammar: ComponentSet,
        meta: PromptMeta = PromptMeta(),
        *,  # Hides parameters beneath this from the user.
        _mode: str = "direct",
) -> RenderedPrompt:
    r"""
    Render a prompt scoring :math:`P(y \mid x)`: demonstrations in input-then-output order followed by the test input
    and the output verbalizer up to its placeholder. The continuation is the label word plus any text the output
    verbalizer has after its placeholder.

    Strings are used verbatim: no whitespace is inserted, stripped, or normalised.

    Parameters
    ----------
    template: Template
        Template to apply.
    demos: Sequence[Demonstration]
        Demonstrations in prompt order; may be empty.
    test_text: str
        Test input.
    class_index: int
        Class whose label word forms the continuation.
    grammar: ComponentSet
        Grammar supplying the label words.
    meta: PromptMeta
        Provenance tags; ``class_index`` and ``mode`` are filled in here.

    Returns
    -------
    prompt: RenderedPrompt
        Prefix shared by every class and a class-specific continuation.
    """

    _check_class(grammar, class_index)
    output_head, output_tail = split_pattern(template.output_verbalizer)

    blocks = _demo_blocks(template, demos, grammar, channel=False)
    test_block = fill(template.input_verbalizer, test_text) + template.intra_separator + output_head

    return RenderedPrompt(
        prefix=_context(blocks, template.inter_separator, test_block),
        continuation=grammar.label_words[class_index] + output_tail,
        mode=_mode,
        meta=replace(meta, template_id=template.id, class_index=class_index, mode=_mode),
    )


def render_channel(
        template: Template,
        demos: Sequence[Demonstration],
        test_text: str,
        class_index: int,
        grammar: ComponentSet,
        meta: PromptMeta = PromptMeta(),
) -> RenderedPrompt:
    r"""
    Render a prompt scoring :math:`P(x \mid y)`. Every block is flipped to output-then-input order; the test block
    ends with the input verbalizer up to its placeholder and the continuation is the test input plus the verbalizer's
    suffix. The continuation is identical for every class, only the prefix changes.

    Output-first block order is the convention of noisy-channel prompting.
    """

    _check_class(grammar, class_index)
    input_head, input_tail = split_pattern(template.input_verbalizer)

    blocks = _demo_blocks(template, demos, grammar, channel=True)
    test_block = (
            fill(template.output_verbalizer, grammar.label_words[class_index]) + template.intra_separator + input_head
    )

    return RenderedPrompt(
        prefix=_context(blocks, template.inter_separator, test_block),
        continuation=test_text + input_tail,
        mode="channel",
        meta=replace(meta, template_id=template.id, class_index=class_index, mode="channel"),
    )


def render_content_free(
        template: Template,
        demos: Sequence[Demonstration],
        cf_token: str,
        class_index: int,
        grammar: ComponentSet,
        meta: PromptMeta = PromptMeta(),
) -> RenderedPrompt:
    """
    Same as :func:`render_direct` with the test input replaced by a content-free token (which may be empty).
    """

    return render_direct(template, demos, cf_token, class_index, grammar, meta, _mode="content_free")


def render(
        mode: str,
        template: Template,
        demos: Sequence[Demonstration],
        text: str,
        class_index: int,
        grammar: ComponentSet,
        meta: PromptMeta = PromptMeta(),
) -> RenderedPrompt:
    match mode:
        case "direct":
            return render_direct(template, demos, text, class_index, grammar, meta)
        case "channel":
            return render_channel(template, demos, text, class_index, grammar, meta)
        case "content_free":
            return render_content_free(template, demos, text, class_index, grammar, meta)
        case _:
            raise RenderError(f"{mode!r} is not a rendering mode, expected one of {MODES}.")
