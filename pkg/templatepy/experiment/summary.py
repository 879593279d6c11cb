from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence

import pandas as pd

from .records import RunRecord
from ..analysis import metrics
from ..exceptions import MetricError

log = logging.getLogger(__name__)

# Columns identifying one accuracy unit: a template (or an ensemble) under one demonstration seed.
UNIT_COLUMNS = ("backend_id", "dataset_digest", "method", "demo_seed", "template_id", "ensemble_size", "members")
GROUP_COLUMNS = UNIT_COLUMNS + ("kind",)


def unit_accuracies(records: Iterable[RunRecord]) -> pd.DataFrame:
    """
    Accuracy of every (template or ensemble, demonstration seed) unit over its examples. Error records are left out.

    :return: One row per unit, in first-appearance order, with the :data:`UNIT_COLUMNS`, ``kind`` (``single`` or
        ``ensemble``), ``accuracy`` and ``examples``.
    """

    rows = []
    errors = 0
    for record in records:
        if record.is_error:
            errors += 1
            continue
        rows.append({
            "backend_id": record.backend_id,
            "dataset_digest": record.dataset_digest,
            "method": record.method,
            "demo_seed": record.demo_seed,
            "template_id": -1 if record.template_id is None else record.template_id,
            "ensemble_size": 0 if record.ensemble_size is None else record.ensemble_size,
            "members": ",".join(str(member) for member in record.members),
            "kind": "ensemble" if record.is_ensemble else "single",
            "predicted": record.predicted,
            "gold": record.gold,
        })
    if errors:
        log.warning(f"Skipped {errors} error record(s).")
    if not rows:
        raise MetricError("no successful records to summarise.")

    frame = pd.DataFrame(rows)
    units = []
    for key, group in frame.groupby(list(GROUP_COLUMNS), sort=False):
        unit = dict(zip(GROUP_COLUMNS, key))
        unit["accuracy"] = metrics.accuracy(group["predicted"].tolist(), group["gold"].tolist())
        unit["examples"] = len(group)
        units.append(unit)

    units = pd.DataFrame(units)
    units["template_id"] = units["template_id"].astype("Int64").mask(units["template_id"] < 0)
    units["ensemble_size"] = units["ensemble_size"].astype("Int64").mask(units["ensemble_size"] == 0)
    return units


def summarize(records: Iterable[RunRecord], group_by: Sequence[str] = ("method",), ddof: int = 1) -> pd.DataFrame:
    """
    Mean and standard deviation of unit accuracies per group, e.g. the mean and spread over 10 templates x 3
    demonstration seeds of each method.

    Parameters
    ----------
    records: Iterable[RunRecord]
        Records of one dataset (group by ``dataset_digest`` to mix datasets).
    group_by: Sequence[str]
        Grouping columns among ``backend_id``, ``dataset_digest``, ``method``, ``demo_seed``, ``template_id``,
        ``ensemble_size``, ``members`` and ``kind``. Single-template and ensemble records are always kept apart.
    ddof: int
        Delta degrees of freedom of the standard deviation.

    Returns
    -------
    summary: pd.DataFrame
        One row per group with the grouping columns, ``mean``, ``std`` and ``n`` (number of units).
    """

    group_by = list(group_by)
    unknown = sorted(set(group_by) - set(GROUP_COLUMNS))
    if unknown:
        raise MetricError(f"cannot group by {unknown!r}, expected columns from {GROUP_COLUMNS}.")

    units = unit_accuracies(records)
    if units["dataset_digest"].nunique() > 1 and "dataset_digest" not in group_by:
        raise MetricError("records span several datasets; add 'dataset_digest' to the grouping.")

    keys = group_by if "kind" in group_by else ["kind", *group_by]
    rows = []
    for key, group in units.groupby(keys, sort=False, dropna=False):
        key = key if isinstance(key, tuple) else (key,)
        mean, std = metrics.aggregate(group["accuracy"].tolist(), ddof=ddof)
        rows.append({**dict(zip(keys, key)), "mean": mean, "std": std, "n": len(group)})
    return pd.DataFrame(rows)
