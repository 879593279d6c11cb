"""
Template grammars and prompt rendering.
"""

# Grammar.
from .grammar import (
    PLACEHOLDER, ComponentSet, Template, describe_template, dump_grammar, encode_positions, enumerate_templates,
    list_presets, load_grammar, load_preset, sample_templates
)

# Rendering.
from .render import (
    Demonstration, PromptMeta, RenderedPrompt, render, render_channel, render_content_free, render_direct
)
