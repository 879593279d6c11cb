from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np
import scipy as sp

from ..exceptions import MetricError
from ..prompts.grammar import COMPONENTS, ComponentSet, Template

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TemplateScore:
    """
    Classification accuracy of one template in one evaluation setting.
    """

    template_id: int
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise MetricError(f"template {self.template_id} has score {self.score!r} outside [0, 1].")


@dataclass(frozen=True)
class ComponentGroup:
    """
    Scores of all templates sharing one variant of one component.

    :ivar dimension: Component name, e.g. ``"output_verbalizer"``.
    :ivar position: Index of the variant in the grammar's option list.
    :ivar variant: The variant string itself.
    :ivar scores: Scores of the templates using this variant, in input order.
    :ivar mean: Mean of ``scores``.
    :ivar std: Sample standard deviation of ``scores`` (0 for a singleton).
    """

    dimension: str
    position: int
    variant: str
    scores: tuple[float, ...]
    mean: float
    std: float

    @property
    def n(self) -> int:
        return len(self.scores)


def _values(scores: Iterable[TemplateScore | float]) -> list[float]:
    return [score.score if isinstance(score, TemplateScore) else float(score) for score in scores]


def _mean_std(values: Sequence[float], ddof: int) -> tuple[float, float]:
    array = np.asarray(values, dtype=float)
    if array.size <= ddof:
        return float(array.mean()), 0.0
    return float(array.mean()), float(array.std(ddof=ddof))


def accuracy(predictions: Sequence[int], golds: Sequence[int]) -> float:
    """
    Fraction of predictions equal to their gold class.
    """

    if len(predictions) != len(golds):
        raise MetricError(f"{len(predictions)} predictions but {len(golds)} gold labels.")
    if len(predictions) == 0:
        raise MetricError("accuracy of an empty prediction list is undefined.")
    return float(np.mean(np.asarray(predictions) == np.asarray(golds)))


def aggregate(scores: Sequence[float], ddof: int = 1) -> tuple[float, float]:
    """
    Mean and standard deviation of a list of accuracies, as reported per evaluation cell.

    Parameters
    ----------
    scores: Sequence[float]
        Non-empty list of scores (e.g. 10 templates x 3 demonstration seeds).
    ddof: int
        Delta degrees of freedom; 1 gives the sample standard deviation, 0 the population one.

    Returns
    -------
    mean: float
    std: float
        A single score has standard deviation 0.
    """

    if len(scores) == 0:
        raise MetricError("cannot aggregate an empty score list.")
    if len(scores) == 1:
        log.debug("Aggregating a single score; its standard deviation is reported as 0.")
    return _mean_std(scores, ddof)


def top_k(scores: Sequence[TemplateScore], k: int) -> set[int]:
    """
    Ids of the k best templates. Ties at the cut break by ascending template id so the set is reproducible.
    """

    ids = [score.template_id for score in scores]
    if len(set(ids)) != len(ids):
        raise MetricError("template ids must be unique within one setting.")
    if not 0 <= k <= len(scores):
        raise MetricError(f"cannot take the top {k} of {len(scores)} templates.")

    ranked = sorted(scores, key=lambda score: (-score.score, score.template_id))
    return {score.template_id for score in ranked[:k]}


def iou(a: set[int], b: set[int]) -> float:
    """
    Intersection over union (Jaccard coefficient) of two template sets.
    """

    union = a | b
    if not union:
        raise MetricError("IoU of two empty sets is undefined.")
    return len(a & b) / len(union)


def spearman(scores_a: Sequence[float], scores_b: Sequence[float]) -> float:
    """
    Spearman rank correlation: Pearson correlation of the average ranks (tied values share their mean rank).

    :param scores_a: Per-template scores in one setting.
    :param scores_b: Scores of the same templates, in the same order, in another setting.
    """

    if len(scores_a) != len(scores_b):
        raise MetricError(f"cannot correlate {len(scores_a)} scores with {len(scores_b)}.")
    if len(scores_a) < 2:
        raise MetricError("rank correlation needs at least two paired scores.")

    ranks_a = sp.stats.rankdata(np.asarray(scores_a, dtype=float)) - (len(scores_a) + 1) / 2
    ranks_b = sp.stats.rankdata(np.asarray(scores_b, dtype=float)) - (len(scores_b) + 1) / 2
    norm = math.sqrt(float(ranks_a @ ranks_a) * float(ranks_b @ ranks_b))
    if norm == 0:
        raise MetricError("rank correlation is undefined when all scores of a setting are equal.")
    return float(ranks_a @ ranks_b) / norm


def rank_curve(scores: Sequence[TemplateScore | float]) -> list[float]:
    """
    Scores sorted best-first and divided by the best score, so element 0 is 1.0 and the curve never increases.
    """

    values = sorted(_values(scores), reverse=True)
    if not values:
        raise MetricError("rank curve of an empty score list is undefined.")
    if values[0] <= 0:
        raise MetricError("rank curve needs a best score above 0.")
    return [value / values[0] for value in values]


def count_wins(zero_shot: Sequence[float], few_shot: Sequence[float]) -> tuple[int, int]:
    """
    Count the settings where the few-shot score strictly beats the zero-shot score. Ties are not wins.

    :return: (wins, total).
    """

    if len(zero_shot) != len(few_shot):
        raise MetricError(f"{len(zero_shot)} zero-shot scores but {len(few_shot)} few-shot scores.")
    wins = int(np.sum(np.asarray(few_shot, dtype=float) > np.asarray(zero_shot, dtype=float)))
    return wins, len(zero_shot)


def component_breakdown(
        results: Sequence[tuple[Template, float]],
        grammar: ComponentSet,
        ddof: int = 1,
) -> dict[str, list[ComponentGroup]]:
    """
    Decompose templates into their four components and group the scores by the variant each template uses.

    Parameters
    ----------
    results: Sequence[tuple[Template, float]]
        (template, score) pairs; templates must belong to the grammar.
    grammar: ComponentSet
        Grammar defining the variants of each component.
    ddof: int
        Delta degrees of freedom of the group standard deviations.

    Returns
    -------
    breakdown: dict[str, list[ComponentGroup]]
        For every component name, the non-empty groups ordered by variant position. Each result falls in exactly one
        group per component.
    """

    positions = [grammar.positions(template) for template, _ in results]
    breakdown = {}
    for axis, dimension in enumerate(COMPONENTS):
        options = grammar.options(dimension)
        groups = []
        for position, variant in enumerate(options):
            scores = tuple(float(score) for (_, score), pos in zip(results, positions) if pos[axis] == position)
            if scores:
                mean, std = _mean_std(scores, ddof)
                groups.append(ComponentGroup(dimension, position, variant, scores, mean, std))
        breakdown[dimension] = groups
    return breakdown
