from __future__ import annotations

from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .predict import DEFAULT_CF_TOKENS, LabelDistribution, Prediction, classify, predict
from .. import streams
from ..exceptions import BackendError, EnsembleError
from ..prompts.grammar import ComponentSet, Template, sample_templates
from ..prompts.render import Demonstration, PromptMeta
from ..scoring.base import Backend

DEFAULT_SIZE = 5


def _check_members(dists: Sequence[LabelDistribution]):
    if len(dists) == 0:
        raise EnsembleError("an ensemble needs at least one distribution.")
    sizes = {dist.num_classes for dist in dists}
    if len(sizes) > 1:
        raise EnsembleError(f"ensemble members disagree on the number of classes: {sorted(sizes)}.")


def ensemble_average(dists: Sequence[LabelDistribution]) -> LabelDistribution:
    """
    Template Ensemble: element-wise arithmetic mean of the member probabilities (not log-probabilities).

    :param dists: Member distributions, all over the same classes.

    :return: Mean distribution tagged ``ensemble``.
    """

    _check_members(dists)
    mean = np.mean([dist.as_array() for dist in dists], axis=0)
    return LabelDistribution(tuple(mean / mean.sum()), "ensemble")


def ensemble_vote(dists: Sequence[LabelDistribution]) -> int:
    """
    Majority vote over the member argmaxes; ties break to the lowest class index. Kept as the rejected alternative to
    averaging: with many classes the member votes scatter and the majority is often a weak plurality.
    """

    _check_members(dists)
    votes = np.bincount([classify(dist) for dist in dists], minlength=dists[0].num_classes)
    return int(np.argmax(votes))


def ensemble_predict(
        backend: Backend,
        templates: Sequence[Template],
        demos: Sequence[Demonstration],
        test_text: str,
        grammar: ComponentSet,
        method: str = "direct",
        cf_tokens: Sequence[str] = DEFAULT_CF_TOKENS,
        meta: PromptMeta = PromptMeta(),
        max_workers: int = 1,
) -> Prediction:
    """
    Run a base prediction method once per template and average the results. Exactly ``len(templates)`` base
    evaluations are made; all members share the same demonstrations.

    Parameters
    ----------
    backend: Backend
        Scoring backend.
    templates: Sequence[Template]
        Ensemble members; the ensemble size N is their count.
    demos: Sequence[Demonstration]
        Demonstrations shared by every member.
    test_text: str
        Test input.
    grammar: ComponentSet
        Grammar the templates come from.
    method: str
        Base prediction method.
    cf_tokens: Sequence[str]
        Content-free tokens (calibration only).
    meta: PromptMeta
        Provenance tags forwarded to every member.
    max_workers: int
        Members scored concurrently; the average is taken after joining in template-id order.

    Returns
    -------
    prediction: Prediction
        Averaged distribution and the union of member flags.
    """

    if len(templates) == 0:
        raise EnsembleError("ensemble_predict() needs at least one template.")

    def run_member(template: Template) -> Prediction:
        try:
            return predict(method, backend, template, demos, test_text, grammar, cf_tokens, meta)
        except BackendError as e:
            raise BackendError(
                f"ensemble member template {template.id} failed: {e}", attempts=e.attempts, retryable=e.retryable
            ) from e

    members = sorted(templates, key=lambda template: template.id)
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            predictions = list(pool.map(run_member, members))
    else:
        predictions = [run_member(template) for template in members]

    flags = frozenset().union(*(prediction.flags for prediction in predictions))
    return Prediction(ensemble_average([prediction.distribution for prediction in predictions]), flags)


def ensemble_pool(grammar: ComponentSet, size: int, run_seed: int, ensemble_seed: int) -> list[Template]:
    """
    Member pool of one ensemble seed, drawn with :func:`sample_templates` from a seed derived for the ``ensemble``
    purpose so ensemble draws never disturb single-template draws.
    """

    return sample_templates(grammar, size, streams.derive_seed(run_seed, "ensemble", ensemble_seed))
