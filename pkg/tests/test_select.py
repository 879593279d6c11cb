import json

import pytest

from conftest import make_dataset
from templatepy.datasets import Dataset, load_dataset
from templatepy.exceptions import DatasetError
from templatepy.icl import DemonstrationSet, load_demonstrations, select_random, select_subset
from templatepy.prompts import Demonstration


def _write_lines(path, records):
    path.write_text("".join(json.dumps(record) + "\n" for record in records), encoding="utf-8")
    return path


# ---------------------------------
# DATASETS
# ---------------------------------
def test_load_dataset_is_content_addressed(tmp_path):
    records = [{"text": "a", "label": 0}, {"text": "b", "label": 1}]
    first = load_dataset(_write_lines(tmp_path / "one.jsonl", records))
    second = load_dataset(_write_lines(tmp_path / "two.jsonl", records))

    assert len(first) == 2
    assert [example.example_id for example in first] == [0, 1]
    assert first.digest == second.digest
    assert first.name == "one"
    assert first.gold == {0: 0, 1: 1}


def test_dataset_digest_tracks_content():
    assert make_dataset(4).digest != make_dataset(5).digest
    assert Dataset.from_pairs([("a", 0)]).digest != Dataset.from_pairs([("a", 1)]).digest


@pytest.mark.parametrize("line, fragment", [
    ('{"text": "x", "label": -1}', "outside"),
    ('{"text": "x", "label": 2}', "outside"),
    ('{"text": "x", "label": true}', "integer"),
    ('{"text": "x", "label": 1.0}', "integer"),
    ('{"text": 3, "label": 0}', "string"),
    ('{"label": 0}', "fields"),
    ('{"text": "x", "label": 0', "JSON"),
])
def test_malformed_records_name_the_line(tmp_path, line, fragment):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"text": "ok", "label": 0}\n\n' + line + "\n", encoding="utf-8")
    with pytest.raises(DatasetError) as info:
        load_dataset(path, num_classes=2)
    assert info.value.line == 3
    assert fragment in str(info.value)


def test_missing_dataset_file(tmp_path):
    with pytest.raises(DatasetError):
        load_dataset(tmp_path / "missing.jsonl")


# ---------------------------------
# RANDOM SELECTION
# ---------------------------------
def test_select_random_is_deterministic():
    dataset = make_dataset(50)
    first = select_random(dataset, 4, seed=1)
    assert first == select_random(dataset, 4, seed=1)
    assert len(first) == 4
    assert first.source == "random" and first.seed == 1
    assert [Demonstration(dataset[i].text, dataset[i].label) for i in first.example_ids] == list(first.demos)


def test_select_random_zero_shot():
    assert select_random(make_dataset(5), 0, seed=0).demos == ()


def test_select_random_exhaustion_is_a_permutation():
    dataset = make_dataset(12)
    assert sorted(select_random(dataset, 12, seed=3).example_ids) == list(range(12))


def test_distinct_seeds_give_distinct_draws():
    dataset = make_dataset(40)
    draws = {select_random(dataset, 4, seed=seed).example_ids for seed in range(5)}
    assert len(draws) == 5


def test_select_random_depends_on_content_not_name():
    a = Dataset.from_pairs([(f"t{i}", i % 2) for i in range(30)], name="a")
    b = Dataset.from_pairs([(f"t{i}", i % 2) for i in range(30)], name="b")
    assert select_random(a, 3, seed=0) == select_random(b, 3, seed=0)


@pytest.mark.parametrize("n", [-1, 6])
def test_select_random_bounds(n):
    with pytest.raises(DatasetError):
        select_random(make_dataset(5), n, seed=0)


def test_repeated_example_ids_are_rejected():
    with pytest.raises(DatasetError):
        DemonstrationSet((Demonstration("a", 0), Demonstration("a", 0)), 0, "random", (1, 1))


# ---------------------------------
# EXTERNAL DEMONSTRATIONS
# ---------------------------------
def test_load_demonstrations_keeps_file_order(tmp_path):
    records = [{"text": f"d{i}", "label": label} for i, label in enumerate([1, 0, 1, 1])]
    demos = load_demonstrations(_write_lines(tmp_path / "demos.jsonl", records), num_classes=2)
    assert [demo.text for demo in demos.demos] == ["d0", "d1", "d2", "d3"]
    assert [demo.class_index for demo in demos.demos] == [1, 0, 1, 1]
    assert demos.seed == "external" and demos.source == "file"


def test_load_demonstrations_rejects_label_out_of_range(tmp_path):
    path = _write_lines(tmp_path / "demos.jsonl", [{"text": "a", "label": 0}, {"text": "b", "label": 2}])
    with pytest.raises(DatasetError) as info:
        load_demonstrations(path, num_classes=2)
    assert info.value.line == 2


def test_empty_demonstration_file_is_zero_shot(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("", encoding="utf-8")
    assert len(load_demonstrations(path)) == 0


# ---------------------------------
# EVALUATION SUBSETS
# ---------------------------------
def test_subset_is_sorted_and_seeded():
    dataset = make_dataset(100)
    subset = select_subset(dataset, 10, seed=0)
    ids = [example.example_id for example in subset]
    assert ids == sorted(ids)
    assert len(set(ids)) == 10
    assert subset == select_subset(dataset, 10, seed=0)
    assert subset != select_subset(dataset, 10, seed=1)


def test_subset_without_cap_keeps_everything():
    dataset = make_dataset(7)
    assert select_subset(dataset, None, seed=0) == list(dataset)
    assert select_subset(dataset, 50, seed=0) == list(dataset)


def test_subset_size_must_be_positive():
    with pytest.raises(DatasetError):
        select_subset(make_dataset(7), 0, seed=0)
