"""
Cross-setting analyses over run records: how well the best templates of one setting (model, method, shot count)
carry over to another, how template quality decays with rank, and which components matter.
"""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Hashable, Iterable, Mapping, Sequence
from dataclasses import dataclass
from itertools import product
from typing import Protocol

import numpy as np
import pandas as pd

from . import metrics
from ..exceptions import MetricError
from ..prompts.grammar import ComponentSet

MEASURES = ("iou", "spearman")
SETTING_FIELDS = ("backend_id", "dataset_digest", "method", "n_shots")


class ScoredRecord(Protocol):
    backend_id: str
    dataset_digest: str
    method: str
    n_shots: int
    template_id: int | None
    predicted: int | None
    gold: int
    error: str | None


def setting_label(key: Hashable) -> str:
    if isinstance(key, tuple):
        return " | ".join(str(part) for part in key)
    return str(key)


def template_scores(
        records: Iterable[ScoredRecord],
        by: Sequence[str] = SETTING_FIELDS,
) -> dict[tuple, list[metrics.TemplateScore]]:
    """
    Accuracy of every template over all of its records (all demonstration seeds and examples), per setting.

    :param records: Run records; ensemble and error records are ignored.
    :param by: Record fields that identify a setting.

    :return: Setting key (tuple of the ``by`` values) -> template scores in ascending template id order.
    """

    outcomes = defaultdict(lambda: defaultdict(list))
    for record in records:
        if record.error is not None or record.template_id is None:
            continue
        key = tuple(getattr(record, name) for name in by)
        outcomes[key][record.template_id].append(record.predicted == record.gold)

    if not outcomes:
        raise MetricError("no single-template records to score.")
    return {
        key: [
            metrics.TemplateScore(template_id, float(np.mean(hits)))
            for template_id, hits in sorted(per_template.items())
        ]
        for key, per_template in outcomes.items()
    }


def _pair_measure(a: Sequence[metrics.TemplateScore], b: Sequence[metrics.TemplateScore], measure: str, k: int):
    match measure:
        case "iou":
            return metrics.iou(metrics.top_k(a, min(k, len(a))), metrics.top_k(b, min(k, len(b))))
        case "spearman":
            # Templates are paired by id over the ids both settings evaluated.
            scores_a = {score.template_id: score.score for score in a}
            scores_b = {score.template_id: score.score for score in b}
            common = sorted(scores_a.keys() & scores_b.keys())
            return metrics.spearman([scores_a[i] for i in common], [scores_b[i] for i in common])
        case _:
            raise MetricError(f"unknown transfer measure {measure!r}, expected one of {MEASURES}.")


def transfer_matrix(
        scores_by_setting: Mapping[Hashable, Sequence[metrics.TemplateScore]],
        measure: str = "iou",
        k: int = 10,
) -> pd.DataFrame:
    """
    Pairwise transfer between settings: top-k IoU or Spearman correlation of template scores (heatmap data).

    Parameters
    ----------
    scores_by_setting: Mapping[Hashable, Sequence[TemplateScore]]
        Template scores of each setting, e.g. from :func:`template_scores`.
    measure: str
        ``iou`` for the overlap of the top-k template sets, ``spearman`` for the rank correlation.
    k: int
        Top-set size for ``iou`` (capped at the number of templates of a setting).

    Returns
    -------
    matrix: pd.DataFrame
        Square frame indexed by setting label in both directions.
    """

    if measure not in MEASURES:
        raise MetricError(f"unknown transfer measure {measure!r}, expected one of {MEASURES}.")
    keys = list(scores_by_setting)
    labels = [setting_label(key) for key in keys]
    values = np.empty((len(keys), len(keys)))
    for (i, a), (j, b) in product(enumerate(keys), repeat=2):
        values[i, j] = _pair_measure(scores_by_setting[a], scores_by_setting[b], measure, k)
    return pd.DataFrame(values, index=labels, columns=labels)


def breakdown_frame(breakdown: Mapping[str, Sequence[metrics.ComponentGroup]]) -> pd.DataFrame:
    rows = [
        {
            "dimension": group.dimension,
            "position": group.position,
            "variant": group.variant,
            "n": group.n,
            "mean": group.mean,
            "std": group.std,
        }
        for groups in breakdown.values()
        for group in groups
    ]
    return pd.DataFrame(rows, columns=["dimension", "position", "variant", "n", "mean", "std"])


def component_frame(
        scores: Sequence[metrics.TemplateScore],
        grammar: ComponentSet,
        ddof: int = 1,
) -> pd.DataFrame:
    """
    Component breakdown of one setting's template scores, flattened for CSV.
    """

    results = [(grammar.template(score.template_id), score.score) for score in scores]
    return breakdown_frame(metrics.component_breakdown(results, grammar, ddof))


def rank_curve_frame(scores_by_setting: Mapping[Hashable, Sequence[metrics.TemplateScore]]) -> pd.DataFrame:
    """
    Rank-decay curves averaged over settings: per rank (1-based), the mean and standard deviation of the relative
    score. Curves are cut to the shortest setting.
    """

    curves = [metrics.rank_curve(scores) for scores in scores_by_setting.values()]
    if not curves:
        raise MetricError("no settings to build a rank curve from.")
    length = min(len(curve) for curve in curves)
    stacked = np.array([curve[:length] for curve in curves])
    std = stacked.std(axis=0, ddof=1) if len(curves) > 1 else np.zeros(length)
    return pd.DataFrame({
        "rank": np.arange(1, length + 1),
        "mean": stacked.mean(axis=0),
        "std": std,
        "settings": len(curves),
    })


@dataclass(frozen=True)
class WinsReport:
    """
    Few-shot versus zero-shot comparison used to admit a model.

    :ivar frame: One row per (dataset, method) setting with both accuracies and whether few-shot won.
    :ivar wins: Settings where few-shot accuracy is strictly higher.
    :ivar total: Settings compared.
    :ivar admitted: ``wins >= min_wins``.
    """

    frame: pd.DataFrame
    wins: int
    total: int
    admitted: bool


def _setting_accuracy(records: Iterable[ScoredRecord]) -> dict[tuple[str, str], float]:
    outcomes = defaultdict(list)
    for record in records:
        if record.error is None and record.template_id is not None:
            outcomes[(record.dataset_digest, record.method)].append(record.predicted == record.gold)
    return {key: float(np.mean(hits)) for key, hits in outcomes.items()}


def wins_report(
        zero_shot_records: Iterable[ScoredRecord],
        few_shot_records: Iterable[ScoredRecord],
        min_wins: int = 8,
) -> WinsReport:
    """
    Pair settings by (dataset digest, method), count where few-shot accuracy beats zero-shot accuracy, and apply the
    admission rule (8 or more wins, e.g. out of 4 datasets x 3 methods).
    """

    zero = _setting_accuracy(zero_shot_records)
    few = _setting_accuracy(few_shot_records)
    common = [key for key in zero if key in few]
    if not common:
        raise MetricError("zero-shot and few-shot records share no (dataset, method) setting.")
    if len(common) != len(zero) or len(common) != len(few):
        unmatched = sorted((zero.keys() | few.keys()) - set(common))
        raise MetricError(f"settings without a counterpart: {unmatched!r}.")

    zero_scores = [zero[key] for key in common]
    few_scores = [few[key] for key in common]
    wins, total = metrics.count_wins(zero_scores, few_scores)
    frame = pd.DataFrame({
        "dataset_digest": [key[0] for key in common],
        "method": [key[1] for key in common],
        "zero_shot": zero_scores,
        "few_shot": few_scores,
        "win": [f > z for z, f in zip(zero_scores, few_scores)],
    })
    return WinsReport(frame, wins, total, wins >= min_wins)
