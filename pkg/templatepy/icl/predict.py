from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np
import scipy as sp

from ..exceptions import BatchScoreError, BoundaryError, PredictionError
from ..prompts.grammar import ComponentSet, Template
from ..prompts.render import (
    Demonstration, PromptMeta, RenderedPrompt, render_channel, render_content_free, render_direct
)
from ..scoring.base import Backend, ScoreRequest

log = logging.getLogger(__name__)

METHODS = ("direct", "channel", "calibration")
DISTRIBUTION_METHODS = (*METHODS, "ensemble")
DEFAULT_CF_TOKENS = ("N/A",)
NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class LabelDistribution:
    """
    Normalised probability vector over the classes of a task.

    :ivar probs: One probability per class; non-negative and summing to 1 within 1e-9.
    :ivar method: Method that produced it: ``direct``, ``channel``, ``calibration``, or ``ensemble``.
    """

    probs: tuple[float, ...]
    method: str

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "probs", probs)

        if self.method not in DISTRIBUTION_METHODS:
            raise PredictionError(f"unknown distribution method {self.method!r}.")
        if len(probs) == 0:
            raise PredictionError("a label distribution needs at least one class.")
        if any(not math.isfinite(p) or p < 0 for p in probs):
            raise PredictionError(f"probabilities must be finite and non-negative, got {probs}.")
        if abs(math.fsum(probs) - 1.0) > NORMALIZATION_TOL:
            raise PredictionError(f"probabilities sum to {math.fsum(probs)!r}, not 1.")

    @classmethod
    def from_scores(cls, scores: Sequence[float], method: str) -> "LabelDistribution":
        """
        Softmax over per-class log scores. The argmax of the result equals the argmax of the scores.
        """

        return cls(tuple(sp.special.softmax(np.asarray(scores, dtype=float))), method)

    @property
    def num_classes(self) -> int:
        return len(self.probs)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)


@dataclass(frozen=True)
class Prediction:
    """
    A label distribution together with the adjustments made while scoring it (e.g. ``boundary_space``).
    """

    distribution: LabelDistribution
    flags: frozenset[str] = field(default_factory=frozenset)


def classify(dist: LabelDistribution) -> int:
    """
    Index of the most probable class; ties break to the lowest index.
    """

    return int(np.argmax(dist.as_array()))


def adjust_boundary(prefix: str, continuation: str) -> tuple[str, str] | None:
    """
    Move one space across the prefix/continuation boundary so that a tokenizer which attaches leading spaces to words
    no longer splits a token across it. A leading space of the continuation moves into the prefix; otherwise a trailing
    space of the prefix moves into the continuation.

    :return: The adjusted (prefix, continuation), or ``None`` when there is no boundary space to move.
    """

    if continuation.startswith(" ") and len(continuation) > 1:
        return prefix + " ", continuation[1:]
    if prefix.endswith(" "):
        return prefix[:-1], " " + continuation
    return None


def score_prompts(backend: Backend, prompts: Sequence[RenderedPrompt]) -> tuple[list[float], frozenset[str]]:
    """
    Score rendered prompts, retrying each prompt whose continuation boundary splits a token once with a boundary space
    moved (see :func:`adjust_boundary`).

    :return: Scores in prompt order and the set of adjustment flags raised.
    """

    requests = [ScoreRequest.from_prompt(prompt) for prompt in prompts]
    try:
        return backend.score_batch(requests), frozenset()
    except BatchScoreError as e:
        if not isinstance(e.cause, BoundaryError):
            raise

    scores = []
    flags = set()
    for request in requests:
        try:
            scores.append(backend.score(request))
        except BoundaryError:
            adjusted = adjust_boundary(request.prefix, request.continuation)
            if adjusted is None:
                raise
            log.debug(f"Moved a boundary space for template {request.meta.template_id}, "
                      f"class {request.meta.class_index}.")
            scores.append(backend.score(ScoreRequest(*adjusted, request.meta)))
            flags.add("boundary_space")
    return scores, frozenset(flags)


def _direct(backend, template, demos, test_text, grammar, meta) -> Prediction:
    prompts = [
        render_direct(template, demos, test_text, class_index, grammar, meta)
        for class_index in range(grammar.num_classes)
    ]
    scores, flags = score_prompts(backend, prompts)
    return Prediction(LabelDistribution.from_scores(scores, "direct"), flags)


def _channel(backend, template, demos, test_text, grammar, meta) -> Prediction:
    prompts = [
        render_channel(template, demos, test_text, class_index, grammar, meta)
        for class_index in range(grammar.num_classes)
    ]
    scores, flags = score_prompts(backend, prompts)
    return Prediction(LabelDistribution.from_scores(scores, "channel"), flags)


def _require_cf_tokens(cf_tokens: Sequence[str]):
    if len(cf_tokens) == 0:
        raise PredictionError("calibration needs at least one content-free token.")


def _content_free(backend, template, demos, grammar, cf_tokens, meta) -> Prediction:
    _require_cf_tokens(cf_tokens)

    # Content-free prompts describe no example.
    meta = replace(meta, example_id=None)
    distributions = []
    flags = set()
    for cf_token in cf_tokens:
        prompts = [
            render_content_free(template, demos, cf_token, class_index, grammar, meta)
            for class_index in range(grammar.num_classes)
        ]
        scores, token_flags = score_prompts(backend, prompts)
        distributions.append(sp.special.softmax(np.asarray(scores, dtype=float)))
        flags |= token_flags

    mean = np.mean(distributions, axis=0)
    return Prediction(LabelDistribution(tuple(mean / mean.sum()), "direct"), frozenset(flags))


def _calibrated(backend, template, demos, test_text, grammar, cf_tokens, meta) -> Prediction:
    _require_cf_tokens(cf_tokens)
    direct = _direct(backend, template, demos, test_text, grammar, meta)
    content_free = _content_free(backend, template, demos, grammar, cf_tokens, meta)
    return Prediction(
        calibrate(direct.distribution, content_free.distribution),
        direct.flags | content_free.flags,
    )


def calibrate(dist: LabelDistribution, content_free: LabelDistribution) -> LabelDistribution:
    r"""
    Divide a direct distribution by a content-free one and renormalise:
    :math:`q_c \propto p_c / p^{cf}_c`. Correction happens in probability space.

    Parameters
    ----------
    dist: LabelDistribution
        Direct prediction on the test input.
    content_free: LabelDistribution
        Direct prediction on content-free inputs under the same template and demonstrations.

    Returns
    -------
    calibrated: LabelDistribution
        Renormalised corrected distribution, tagged ``calibration``.
    """

    p = dist.as_array()
    p_cf = content_free.as_array()
    if p.shape != p_cf.shape:
        raise PredictionError(f"cannot calibrate {p.size} classes with a {p_cf.size}-class content-free prior.")
    if np.any(p_cf == 0):
        raise PredictionError(f"content-free distribution {content_free.probs} has a zero-probability class.")

    q = p / p_cf
    total = q.sum()
    if not np.isfinite(total) or total <= 0:
        raise PredictionError(f"calibrated scores {tuple(q)} cannot be renormalised.")
    return LabelDistribution(tuple(q / total), "calibration")


def predict(
        method: str,
        backend: Backend,
        template: Template,
        demos: Sequence[Demonstration],
        test_text: str,
        grammar: ComponentSet,
        cf_tokens: Sequence[str] = DEFAULT_CF_TOKENS,
        meta: PromptMeta = PromptMeta(),
) -> Prediction:
    """
    Run one of the prediction methods (``direct``, ``channel``, ``calibration``) for one template and test input.
    """

    match method:
        case "direct":
            return _direct(backend, template, demos, test_text, grammar, meta)
        case "channel":
            return _channel(backend, template, demos, test_text, grammar, meta)
        case "calibration":
            return _calibrated(backend, template, demos, test_text, grammar, cf_tokens, meta)
        case _:
            raise PredictionError(f"{method!r} is not a prediction method, expected one of {METHODS}.")


def predict_direct(
        backend: Backend,
        template: Template,
        demos: Sequence[Demonstration],
        test_text: str,
        grammar: ComponentSet,
        meta: PromptMeta = PromptMeta(),
) -> LabelDistribution:
    r"""
    Direct prediction, :math:`P(y \mid x)`: softmax over the per-class log-probabilities of the label continuations.
    """

    return _direct(backend, template, demos, test_text, grammar, meta).distribution


def predict_channel(
        backend: Backend,
        template: Template,
        demos: Sequence[Demonstration],
        test_text: str,
        grammar: ComponentSet,
        meta: PromptMeta = PromptMeta(),
) -> LabelDistribution:
    r"""
    Channel prediction, :math:`P(x \mid y)`: one prefix per class, one shared continuation (the test input).
    """

    return _channel(backend, template, demos, test_text, grammar, meta).distribution


def predict_calibrated(
        backend: Backend,
        template: Template,
        demos: Sequence[Demonstration],
        test_text: str,
        grammar: ComponentSet,
        cf_tokens: Sequence[str] = DEFAULT_CF_TOKENS,
        meta: PromptMeta = PromptMeta(),
) -> LabelDistribution:
    """
    Calibrated prediction: the direct distribution divided by the mean direct distribution over content-free inputs,
    renormalised.
    """

    return _calibrated(backend, template, demos, test_text, grammar, cf_tokens, meta).distribution


def content_free_distribution(
        backend: Backend,
        template: Template,
        demos: Sequence[Demonstration],
        grammar: ComponentSet,
        cf_tokens: Sequence[str] = DEFAULT_CF_TOKENS,
        meta: PromptMeta = PromptMeta(),
) -> LabelDistribution:
    """
    Mean direct distribution over the content-free tokens: the per-class prior a template induces.
    """

    return _content_free(backend, template, demos, grammar, cf_tokens, meta).distribution
