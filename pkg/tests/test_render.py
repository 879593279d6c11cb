import json

import pytest

from conftest import FIXTURES
from templatepy.exceptions import RenderError
from templatepy.prompts import Demonstration, PromptMeta, load_preset, render, render_channel, render_direct

GOLDEN = json.loads((FIXTURES / "render_golden.json").read_text(encoding="utf-8"))


@pytest.mark.parametrize("case", GOLDEN, ids=[f"{c['grammar']}-{c['mode']}-{c['template']}" for c in GOLDEN])
def test_golden_rendering(case):
    grammar = load_preset(case["grammar"])
    demos = [Demonstration(text, label) for text, label in case["demos"]]
    prompt = render(case["mode"], grammar.template(case["template"]), demos, case["text"], case["class_index"], grammar)
    assert prompt.prefix == case["prefix"]
    assert prompt.continuation == case["continuation"]
    assert prompt.mode == case["mode"]


def test_direct_prefix_is_shared_by_all_classes(sst2):
    template = sst2.template(95)
    demos = [Demonstration("fine", 1)]
    prompts = [render_direct(template, demos, "test", c, sst2) for c in range(2)]
    assert prompts[0].prefix == prompts[1].prefix
    assert prompts[0].continuation != prompts[1].continuation


def test_channel_continuation_is_shared_by_all_classes(sst2):
    template = sst2.template(95)
    prompts = [render_channel(template, [], "test", c, sst2) for c in range(2)]
    assert prompts[0].continuation == prompts[1].continuation == "test"
    assert prompts[0].prefix != prompts[1].prefix


def test_meta_is_tagged(sst2):
    prompt = render_direct(sst2.template(3), [], "x", 1, sst2, PromptMeta(example_id=4, seed=0))
    assert prompt.meta == PromptMeta(template_id=3, example_id=4, class_index=1, seed=0, mode="direct")


def test_strings_are_used_verbatim(sst2):
    prompt = render_direct(sst2.template(0), [], "  padded\t", 0, sst2)
    assert prompt.prefix == "input:   padded\t output: "


@pytest.mark.parametrize("class_index", [-1, 2])
def test_invalid_class_index(sst2, class_index):
    with pytest.raises(RenderError):
        render_direct(sst2.template(0), [], "x", class_index, sst2)


def test_invalid_demonstration_class(sst2):
    with pytest.raises(RenderError):
        render_direct(sst2.template(0), [Demonstration("x", 5)], "y", 0, sst2)


def test_unknown_mode(sst2):
    with pytest.raises(RenderError):
        render("noisy", sst2.template(0), [], "x", 0, sst2)


def test_empty_channel_continuation_is_rejected(sst2):
    # "input: {}" has nothing after the placeholder, so an empty input leaves nothing to score.
    with pytest.raises(RenderError):
        render_channel(sst2.template(0), [], "", 0, sst2)
