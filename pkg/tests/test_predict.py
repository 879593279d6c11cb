import math

import numpy as np
import pytest

from templatepy.exceptions import BackendError, PredictionError
from templatepy.icl import (
    LabelDistribution, calibrate, classify, content_free_distribution, predict, predict_calibrated, predict_channel,
    predict_direct
)
from templatepy.prompts import ComponentSet, Demonstration
from templatepy.scoring import RemoteBackend, ScriptedBackend


def _direct_table(scores, text="ok", cf=None):
    # Zero-shot prompts of tiny template 0: "in: <text> out: " followed by the label word.
    table = {(f"in: {text} out: ", word): score for word, score in zip(("bad", "good"), scores)}
    if cf is not None:
        table.update({("in: N/A out: ", word): score for word, score in zip(("bad", "good"), cf)})
    return table


def test_direct_softmax(tiny):
    backend = ScriptedBackend(_direct_table([-1.0, -2.0]))
    dist = predict_direct(backend, tiny.template(0), [], "ok", tiny)
    assert dist.probs == pytest.approx((0.7310585786, 0.2689414214))
    assert dist.method == "direct"
    assert classify(dist) == 0


def test_equal_scores_give_uniform_distribution(tiny):
    backend = ScriptedBackend(_direct_table([-3.0, -3.0]))
    assert predict_direct(backend, tiny.template(0), [], "ok", tiny).probs == pytest.approx((0.5, 0.5))


def test_channel_scores_the_shared_input(tiny):
    table = {("out: bad in: ", "ok"): -3.0, ("out: good in: ", "ok"): -1.0}
    dist = predict_channel(ScriptedBackend(table), tiny.template(0), [], "ok", tiny)
    assert dist.method == "channel"
    assert classify(dist) == 1


def test_channel_three_classes():
    grammar = ComponentSet("three", ("{}",), ("{}",), (" ",), ("\n",), ("a", "b", "c"))
    table = {("a ", "x"): -3.0, ("b ", "x"): -3.0, ("c ", "x"): -1.0}
    assert classify(predict_channel(ScriptedBackend(table), grammar.template(0), [], "x", grammar)) == 2


def test_single_class_grammar():
    grammar = ComponentSet("one", ("{}",), ("{}",), (" ",), ("\n",), ("only",))
    dist = predict_channel(ScriptedBackend({("only ", "x"): -7.0}), grammar.template(0), [], "x", grammar)
    assert dist.probs == (1.0,)


def test_demonstrations_are_rendered_into_the_prefix(tiny):
    prefix = "in: fine out: good\nin: ok out: "
    backend = ScriptedBackend({(prefix, "bad"): -2.0, (prefix, "good"): -1.0})
    dist = predict_direct(backend, tiny.template(0), [Demonstration("fine", 1)], "ok", tiny)
    assert classify(dist) == 1


def test_calibration_flips_a_biased_prediction(tiny):
    backend = ScriptedBackend(_direct_table([math.log(0.6), math.log(0.4)], cf=[math.log(0.8), math.log(0.2)]))
    dist = predict_calibrated(backend, tiny.template(0), [], "ok", tiny)
    assert dist.method == "calibration"
    assert dist.probs == pytest.approx((0.75 / 2.75, 2.0 / 2.75))
    assert classify(dist) == 1


def test_calibration_averages_content_free_tokens(tiny):
    table = _direct_table([0.0, 0.0])
    table[("in: N/A out: ", "bad")] = math.log(0.9)
    table[("in: N/A out: ", "good")] = math.log(0.1)
    table[("in:  out: ", "bad")] = math.log(0.5)
    table[("in:  out: ", "good")] = math.log(0.5)
    prior = content_free_distribution(ScriptedBackend(table), tiny.template(0), [], tiny, cf_tokens=("N/A", ""))
    assert prior.probs == pytest.approx((0.7, 0.3))


def test_uniform_content_free_prior_is_the_identity(tiny):
    rng = np.random.default_rng(0)
    template = tiny.template(0)
    for _ in range(1000):
        scores = rng.normal(scale=3.0, size=2)
        cf = np.full(2, rng.normal())
        backend = ScriptedBackend(_direct_table(scores, cf=cf))
        direct = predict_direct(backend, template, [], "ok", tiny)
        calibrated = predict_calibrated(backend, template, [], "ok", tiny)
        assert calibrated.probs == pytest.approx(direct.probs, abs=1e-12)
        assert classify(calibrated) == classify(direct)


def test_calibrate_examples():
    uniform = LabelDistribution((0.5, 0.5), "direct")
    assert calibrate(uniform, uniform).probs == pytest.approx((0.5, 0.5))
    with pytest.raises(PredictionError):
        calibrate(uniform, LabelDistribution((1.0, 0.0), "direct"))
    with pytest.raises(PredictionError):
        calibrate(uniform, LabelDistribution((0.2, 0.3, 0.5), "direct"))


def test_zero_content_free_probability_is_an_error(tiny):
    backend = ScriptedBackend(_direct_table([-1.0, -1.0], cf=[0.0, float("-inf")]))
    with pytest.raises(PredictionError):
        predict_calibrated(backend, tiny.template(0), [], "ok", tiny)


def test_calibration_needs_content_free_tokens(tiny):
    backend = ScriptedBackend(_direct_table([-1.0, -1.0]))
    with pytest.raises(PredictionError):
        predict_calibrated(backend, tiny.template(0), [], "ok", tiny, cf_tokens=())
    assert backend.calls == 0


def test_unknown_method(tiny):
    with pytest.raises(PredictionError):
        predict("noisy", ScriptedBackend({}), tiny.template(0), [], "ok", tiny)


def test_missing_score_propagates(tiny):
    with pytest.raises(BackendError):
        predict("direct", ScriptedBackend({}), tiny.template(0), [], "ok", tiny)


@pytest.mark.parametrize("probs, expected", [((0.2, 0.5, 0.3), 1), ((0.5, 0.5), 0), ((1.0,), 0)])
def test_classify(probs, expected):
    assert classify(LabelDistribution(probs, "direct")) == expected


@pytest.mark.parametrize("probs", [(0.5, 0.6), (1.2, -0.2), (float("nan"), 1.0), ()])
def test_invalid_distributions(probs):
    with pytest.raises(PredictionError):
        LabelDistribution(probs, "direct")


def test_boundary_space_fallback(tiny, echo_transport):
    # The direct prefix ends in a space that the tokenizer attaches to the label word.
    backend = RemoteBackend("http://lm.test/v1", "m", backoff=0, transport=echo_transport)
    prediction = predict("direct", backend, tiny.template(0), [], "ok", tiny)
    expected = np.exp([-0.4, -0.5]) / np.exp([-0.4, -0.5]).sum()
    assert prediction.distribution.probs == pytest.approx(tuple(expected))
    assert prediction.flags == frozenset({"boundary_space"})
    assert echo_transport.sent[-1]["prompt"] == "in: ok out: good"


def test_clean_boundary_raises_no_flag(echo_transport):
    grammar = ComponentSet("spaced", ("in: {}",), ("out:{}",), (" ",), ("\n",), (" bad", " good"))
    backend = RemoteBackend("http://lm.test/v1", "m", backoff=0, transport=echo_transport)
    prediction = predict("direct", backend, grammar.template(0), [], "ok", grammar)
    assert prediction.flags == frozenset()
    assert classify(prediction.distribution) == 0
    assert sorted(payload["prompt"] for payload in echo_transport.sent) == ["in: ok out: bad", "in: ok out: good"]


@pytest.mark.parametrize("shift", [-40.0, -3.25, 0.5, 12.0])
def test_constant_shift_leaves_probabilities_unchanged(tiny, shift):
    scores = [-1.3, -0.2]
    base = predict_direct(ScriptedBackend(_direct_table(scores)), tiny.template(0), [], "ok", tiny)
    shifted = predict_direct(
        ScriptedBackend(_direct_table([score + shift for score in scores])), tiny.template(0), [], "ok", tiny
    )
    assert np.max(np.abs(np.subtract(base.probs, shifted.probs))) <= 1e-12


def test_direct_and_channel_agree_when_worlds_rank_alike():
    words = ("a", "b", "c", "d")
    grammar = ComponentSet("four", ("{}",), ("{}",), (" ",), ("\n",), words)
    template = grammar.template(0)
    rng = np.random.default_rng(7)
    for _ in range(200):
        direct_scores = -rng.random(4) * 5
        # Same class order, different values.
        channel_scores = np.sort(-rng.random(4) * 20)[np.argsort(np.argsort(direct_scores))]
        table = {("x ", word): float(score) for word, score in zip(words, direct_scores)}
        table.update({(f"{word} ", "x"): float(score) for word, score in zip(words, channel_scores)})
        backend = ScriptedBackend(table)
        assert classify(predict_direct(backend, template, [], "x", grammar)) == classify(
            predict_channel(backend, template, [], "x", grammar)
        )
