import numpy as np
import pytest

from templatepy.analysis import (
    TemplateScore, component_frame, rank_curve_frame, template_scores, transfer_matrix, wins_report
)
from templatepy.exceptions import MetricError
from templatepy.experiment import RunConfig, RunRecord, run_evaluation
from templatepy.scoring import BackendSpec


def _record(template_id, correct, digest="d", method="direct", backend_id="b", error=None, ensemble_size=None):
    return RunRecord(
        run_id="r", backend_id=backend_id, dataset_digest=digest, method=method, demo_seed=0,
        template_id=template_id, example_id=0, gold=1,
        predicted=None if error else (1 if correct else 0),
        probs=None if error else ((0.0, 1.0) if correct else (1.0, 0.0)),
        error=error, ensemble_size=ensemble_size,
    )


@pytest.fixture(scope="module")
def planted_records(tmp_path_factory):
    """
    Records of two planted backends whose template biases come from different salts, over the same 30 templates.
    """

    path = tmp_path_factory.mktemp("transfer") / "data.jsonl"
    path.write_text("".join(f'{{"text": "review {i}", "label": {i % 2}}}\n' for i in range(50)), encoding="utf-8")

    records = []
    for salt in (0, 1):
        config = RunConfig(
            backend=BackendSpec("planted", params={"signal": 1.0, "bias": 2.0, "noise": 1.0, "salt": salt}),
            dataset_path=str(path),
            grammar="sst2",
            demo_seeds=(0,),
            templates_per_seed=30,
        )
        records.extend(run_evaluation(config))
    return records


def test_template_scores_per_setting(planted_records):
    scores = template_scores(planted_records)
    assert len(scores) == 2
    for key, setting in scores.items():
        assert len(key) == 4 and key[2:] == ("direct", 0)
        assert len(setting) == 30
        assert [score.template_id for score in setting] == sorted(score.template_id for score in setting)


def test_different_biases_transfer_imperfectly(planted_records):
    scores = template_scores(planted_records)
    iou = transfer_matrix(scores, "iou", k=10)
    assert np.diag(iou.to_numpy()).tolist() == [1.0, 1.0]
    assert iou.iloc[0, 1] < 1.0
    assert iou.iloc[0, 1] == iou.iloc[1, 0]

    rho = transfer_matrix(scores, "spearman")
    assert np.diag(rho.to_numpy()) == pytest.approx([1.0, 1.0])
    assert -1.0 <= rho.iloc[0, 1] < 1.0


def test_setting_against_itself(planted_records):
    scores = next(iter(template_scores(planted_records).values()))
    matrix = transfer_matrix({"a": scores, "b": scores}, "iou", k=10)
    assert (matrix.to_numpy() == 1.0).all()
    assert list(matrix.index) == ["a", "b"]
    assert transfer_matrix({"a": scores, "b": scores}, "spearman").iloc[0, 1] == pytest.approx(1.0)


def test_top_set_size_is_capped():
    scores = {"x": [TemplateScore(0, 0.9), TemplateScore(1, 0.5)], "y": [TemplateScore(0, 0.1), TemplateScore(1, 0.7)]}
    assert transfer_matrix(scores, "iou", k=10).loc["x", "y"] == 1.0
    assert transfer_matrix(scores, "iou", k=1).loc["x", "y"] == 0.0
    with pytest.raises(MetricError):
        transfer_matrix(scores, "kendall")


def test_spearman_pairs_templates_by_id():
    a = [TemplateScore(0, 0.1), TemplateScore(1, 0.2), TemplateScore(2, 0.3), TemplateScore(9, 0.9)]
    b = [TemplateScore(0, 0.4), TemplateScore(1, 0.5), TemplateScore(2, 0.6), TemplateScore(7, 0.0)]
    assert transfer_matrix({"a": a, "b": b}, "spearman").loc["a", "b"] == pytest.approx(1.0)


def test_template_scores_skip_errors_and_ensembles():
    records = [
        _record(0, True), _record(0, False), _record(1, True),
        _record(1, False, error="BackendError: down"),
        _record(None, True, ensemble_size=3),
    ]
    scores = template_scores(records)
    assert scores[("b", "d", "direct", 0)] == [TemplateScore(0, 0.5), TemplateScore(1, 1.0)]
    assert template_scores(records, by=("method",)) == {("direct",): scores[("b", "d", "direct", 0)]}

    with pytest.raises(MetricError):
        template_scores([_record(None, True, ensemble_size=3)])


def test_rank_curve_frame():
    frame = rank_curve_frame({
        "a": [TemplateScore(0, 0.8), TemplateScore(1, 0.4), TemplateScore(2, 0.6)],
        "b": [TemplateScore(0, 0.5), TemplateScore(1, 0.5)],
    })
    assert frame["rank"].tolist() == [1, 2]
    assert frame["mean"].tolist() == pytest.approx([1.0, 0.875])
    assert frame["std"].tolist() == pytest.approx([0.0, np.std([0.75, 1.0], ddof=1)])
    assert set(frame["settings"]) == {2}


def test_component_frame(sst2):
    scores = [TemplateScore(template_id, (template_id % 5) / 5) for template_id in range(216)]
    frame = component_frame(scores, sst2)
    inputs = frame[frame["dimension"] == "input_verbalizer"]
    assert inputs["n"].tolist() == [54] * 4
    assert inputs["position"].tolist() == [0, 1, 2, 3]
    assert len(frame) == 4 + 9 + 2 + 3


def test_wins_report():
    zero = [_record(0, True, "d1"), _record(0, False, "d1"), _record(0, True, "d1", "channel")]
    few = [_record(0, True, "d1"), _record(1, True, "d1"), _record(0, True, "d1", "channel")]

    report = wins_report(zero, few, min_wins=1)
    assert (report.wins, report.total, report.admitted) == (1, 2, True)
    assert report.frame["win"].tolist() == [True, False]
    assert not wins_report(zero, few).admitted

    with pytest.raises(MetricError):
        wins_report(zero, few + [_record(0, True, "d2")])


def test_demonstrations_do_not_move_a_planted_world(planted_records):
    # The planted backend never reads prompts, so shots cannot win.
    salt_zero = [record for record in planted_records if "salt=0" in record.backend_id]
    report = wins_report(salt_zero, salt_zero)
    assert report.wins == 0 and report.total == 1


def test_shot_counts_are_separate_settings(tmp_path):
    path = tmp_path / "data.jsonl"
    path.write_text("".join(f'{{"text": "review {i}", "label": {i % 2}}}\n' for i in range(6)), encoding="utf-8")
    records = []
    for n_shots in (0, 2):
        config = RunConfig(
            backend=BackendSpec("hash-mock"), dataset_path=str(path), grammar="sst2", n_shots=n_shots,
            demo_seeds=(0,), templates_per_seed=4,
        )
        shots = list(run_evaluation(config))
        assert {record.n_shots for record in shots} == {n_shots}
        records.extend(shots)

    scores = template_scores(records)
    assert sorted(key[3] for key in scores) == [0, 2]
    assert transfer_matrix(scores, "iou", k=2).shape == (2, 2)
