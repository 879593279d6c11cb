from __future__ import annotations

import json
import re
from pathlib import Path

import httpx
import pytest

from templatepy.datasets import Dataset, write_dataset
from templatepy.prompts import ComponentSet, load_preset

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def sst2() -> ComponentSet:
    return load_preset("sst2")


@pytest.fixture
def tiny() -> ComponentSet:
    """
    2 x 2 x 2 x 1 = 8 templates over two classes.
    """

    return ComponentSet(
        task_name="tiny",
        input_verbalizers=("in: {}", "{}"),
        output_verbalizers=("out: {}", "It was {}."),
        intra_separators=(" ", "\n"),
        inter_separators=("\n",),
        label_words=("bad", "good"),
    )


def make_dataset(n: int, num_classes: int = 2, name: str = "data") -> Dataset:
    return Dataset.from_pairs([(f"example number {i}", i % num_classes) for i in range(n)], name=name)


@pytest.fixture
def dataset_file(tmp_path):
    """
    Factory writing a balanced synthetic dataset to a JSON-lines file.
    """

    def write(n: int, num_classes: int = 2, name: str = "data.jsonl") -> Path:
        path = tmp_path / name
        write_dataset(make_dataset(n, num_classes), path)
        return path

    return write


TOKEN = re.compile(r"\s?\S+|\s+")


def word_logprob(token: str) -> float:
    return -len(token) / 10


def echo_response(prompt: str) -> dict:
    """
    Echo body of a tokenizer that attaches leading spaces to words, scoring each token as -len/10.
    """

    tokens = [match.group(0) for match in TOKEN.finditer(prompt)]
    offsets = [match.start() for match in TOKEN.finditer(prompt)]
    logprobs = [None] + [word_logprob(token) for token in tokens[1:]]
    return {"choices": [{"text": prompt, "logprobs": {
        "tokens": tokens, "token_logprobs": logprobs, "text_offset": offsets,
    }}]}


@pytest.fixture
def echo_transport():
    """
    MockTransport answering completions requests with :func:`echo_response`; the sent payloads are kept.
    """

    sent = []

    def handler(request: httpx.Request) -> httpx.Response:
        payload = json.loads(request.content)
        sent.append(payload)
        return httpx.Response(200, json=echo_response(payload["prompt"]))

    transport = httpx.MockTransport(handler)
    transport.sent = sent
    return transport
