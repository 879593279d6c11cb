from __future__ import annotations

import logging
import os
import threading
import time
from collections.abc import Sequence
from typing import Any

import httpx

from . import base
from ..exceptions import BackendError, BoundaryError

log = logging.getLogger(__name__)

DEFAULT_API_KEY_ENV = "TEMPLATEPY_API_KEY"


class RemoteBackend(base.Backend):
    """
    Client for an echo-scored completions endpoint. Each request sends the full sequence (prefix + continuation), asks
    for zero generated tokens with the prompt echoed back and per-token logprobs, and sums the logprobs of the tokens
    that start at or after the end of the prefix.

    A token straddling the prefix/continuation boundary is reported as a :class:`BoundaryError` instead of being
    partially credited.

    Parameters
    ----------
    endpoint: str
        Full URL of the completions endpoint, e.g. ``http://localhost:8000/v1/completions``.
    model: str
        Model name sent with every request.
    api_key_env: str
        Environment variable holding the bearer token (unset means no ``Authorization`` header).
    max_retries: int
        Attempts per request before giving up on network/protocol failures.
    timeout: float
        Per-request timeout in seconds.
    max_in_flight: int
        Maximum number of concurrent requests.
    length_normalize: bool
        Divide the continuation logprob by its token count. Off by default: scores are plain sums.
    backoff: float
        Base delay in seconds of the exponential backoff between attempts.
    transport: httpx.BaseTransport
        Optional transport override (used by tests to replay recorded responses).
    """

    def __init__(
            self,
            endpoint: str,
            model: str,
            api_key_env: str = DEFAULT_API_KEY_ENV,
            max_retries: int = 3,
            timeout: float = 60.0,
            max_in_flight: int = 8,
            length_normalize: bool = False,
            backoff: float = 1.0,
            max_workers: int = 8,
            transport: httpx.BaseTransport | None = None,
    ):
        if max_retries < 1:
            raise ValueError(f"max_retries must be at least 1, got {max_retries}.")

        self.endpoint = endpoint
        self.model = model
        self.max_retries = max_retries
        self.length_normalize = length_normalize
        self.backoff = backoff

        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"

        self._client = httpx.Client(headers=headers, timeout=timeout, transport=transport)
        self._in_flight = threading.BoundedSemaphore(max_in_flight)
        super().__init__(max_workers)

    @property
    def identity(self) -> str:
        return f"remote:{self.model}@{self.endpoint}" + (":length-normalized" if self.length_normalize else "")

    def close(self):
        self._client.close()

    def payload(self, request: base.ScoreRequest) -> dict[str, Any]:
        return {
            "model": self.model,
            "prompt": request.prefix + request.continuation,
            "max_tokens": 0,
            "echo": True,
            "logprobs": 1,
        }

    def _score(self, request: base.ScoreRequest) -> float:
        tokens = self.fetch_tokens(request)
        total, count = continuation_logprob(tokens, len(request.prefix))
        return total / count if self.length_normalize else total

    def fetch_tokens(self, request: base.ScoreRequest) -> list[base.TokenScore]:
        """
        POST the request, retrying transient failures with exponential backoff.

        :return: Echoed token scores of the full sequence.
        """

        payload = self.payload(request)
        last_error = None

        for attempt in range(1, self.max_retries + 1):
            try:
                with self._in_flight:
                    response = self._client.post(self.endpoint, json=payload)
                if response.status_code == 429 or response.status_code >= 500:
                    raise _Transient(f"HTTP {response.status_code}: {response.text[:200]}")
                if response.status_code >= 400:
                    raise BackendError(
                        f"endpoint rejected request with HTTP {response.status_code}: {response.text[:200]}",
                        attempts=attempt,
                    )
                return parse_tokens(response.json())
            except (httpx.TransportError, _Transient, ValueError) as e:
                last_error = e
                log.warning(f"Scoring request failed (attempt {attempt}/{self.max_retries}): {e}")

            if attempt < self.max_retries and self.backoff > 0:
                time.sleep(self.backoff * 2 ** (attempt - 1))

        raise BackendError(
            f"scoring request failed after {self.max_retries} attempts: {last_error}",
            attempts=self.max_retries,
            retryable=True,
        )


class _Transient(Exception):
    pass


def parse_tokens(body: Any) -> list[base.TokenScore]:
    """
    Extract token scores from a completions response body.

    :param body: Decoded JSON response; must contain ``choices[0].logprobs`` with ``tokens``, ``token_logprobs``, and
        ``text_offset`` lists of equal length.
    """

    try:
        logprobs = body["choices"][0]["logprobs"]
        tokens = logprobs["tokens"]
        token_logprobs = logprobs["token_logprobs"]
        offsets = logprobs["text_offset"]
    except (KeyError, IndexError, TypeError) as e:
        raise ValueError(f"malformed completions response, missing {e}") from None

    if not len(tokens) == len(token_logprobs) == len(offsets):
        raise ValueError("malformed completions response, token/logprob/offset lists differ in length.")

    scores = [
        base.TokenScore(token_text=token, logprob=logprob, char_offset=int(offset))
        for token, logprob, offset in zip(tokens, token_logprobs, offsets)
    ]
    for previous, current in zip(scores, scores[1:]):
        if current.char_offset <= previous.char_offset:
            raise ValueError("malformed completions response, token offsets are not strictly increasing.")
    return scores


def continuation_logprob(tokens: Sequence[base.TokenScore], prefix_length: int) -> tuple[float, int]:
    """
    Sum the logprobs of every token starting at or after ``prefix_length``.

    :param tokens: Token scores of the full sequence.
    :param prefix_length: Length of the prefix in characters.

    :return: The summed logprob and the number of tokens summed.
    """

    total = 0.0
    count = 0
    for token in tokens:
        end = token.char_offset + len(token.token_text)
        if token.char_offset < prefix_length < end:
            raise BoundaryError(
                f"token {token.token_text!r} at offset {token.char_offset} straddles the continuation boundary at "
                f"{prefix_length}."
            )
        if token.char_offset >= prefix_length:
            if token.logprob is None:
                raise BackendError(f"token {token.token_text!r} in the continuation has no logprob.")
            total += token.logprob
            count += 1

    if count == 0:
        raise BoundaryError(f"no token starts inside the continuation (prefix length {prefix_length}).")
    return total, count
