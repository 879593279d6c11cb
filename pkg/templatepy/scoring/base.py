from __future__ import annotations

import threading
from abc import ABC, abstractmethod
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from ..exceptions import BackendError, BatchScoreError
from ..prompts.render import PromptMeta, RenderedPrompt


@dataclass(frozen=True)
class ScoreRequest:
    """
    Ask a backend for log P(continuation | prefix).

    :ivar meta: Provenance tags. Real backends must ignore them; synthetic backends may read them to implement
        planted worlds without parsing prompts.
    """

    prefix: str
    continuation: str
    meta: PromptMeta = PromptMeta()

    def __post_init__(self):
        if not self.continuation:
            raise BackendError("score request has an empty continuation.")

    @classmethod
    def from_prompt(cls, prompt: RenderedPrompt) -> "ScoreRequest":
        return cls(prompt.prefix, prompt.continuation, prompt.meta)


@dataclass(frozen=True)
class TokenScore:
    """
    One scored token of an echoed sequence.

    :ivar token_text: Token surface string.
    :ivar logprob: Natural-log probability of the token, ``None`` for the first token of a sequence.
    :ivar char_offset: Character offset of the token start in the full sequence.
    """

    token_text: str
    logprob: float | None
    char_offset: int


class Backend(ABC):
    """
    Base class for all scoring backends. Every backend answers one question, the natural-log probability of a
    continuation given a prefix, through :meth:`score`; child classes implement :meth:`_score`.
        Backends must be safe for concurrent :meth:`score` calls. :attr:`calls` counts the evaluations a backend
    actually performs, which is how cost and cache contracts are checked.

    :ivar max_workers: Thread count used by :meth:`score_batch`. Results never depend on it.
    :cvar reads_meta: Whether scores depend on the request provenance tags rather than on the prompt strings alone.
    """

    reads_meta = False

    def __init__(self, max_workers: int = 1):
        self.max_workers = max_workers
        self._calls = 0
        self._calls_lock = threading.Lock()

    @property
    @abstractmethod
    def identity(self) -> str:
        """
        Stable string naming this backend and every setting that changes its scores. Keys the score cache and is
        persisted in run records.
        """

        pass

    @abstractmethod
    def _score(self, request: ScoreRequest) -> float:
        """
        Actual scoring is implemented here for child classes.
        """

        pass

    @property
    def calls(self) -> int:
        return self._calls

    def score(self, request: ScoreRequest) -> float:
        """
        Log-probability of ``request.continuation`` given ``request.prefix``.

        :param request: Prefix/continuation pair to score.

        :return: Natural-log score (no length normalisation unless a backend is configured for it).
        """

        with self._calls_lock:
            self._calls += 1
        return self._score(request)

    def score_batch(self, requests: Sequence[ScoreRequest]) -> list[float]:
        """
        Score many requests. Element i of the result is ``score(requests[i])`` whatever the internal parallelism.

        :param requests: Non-empty ordered requests.

        :return: Scores in request order.
        """

        if len(requests) == 0:
            raise BackendError("score_batch() needs at least one request.")

        def score_one(item: tuple[int, ScoreRequest]) -> float:
            index, request = item
            try:
                return self.score(request)
            except BatchScoreError:
                raise
            except BackendError as e:
                raise BatchScoreError(index, e) from e

        if self.max_workers <= 1 or len(requests) == 1:
            return [score_one(item) for item in enumerate(requests)]

        # map() yields in submission order, so the first failure raised is the lowest failing index.
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            return list(pool.map(score_one, enumerate(requests)))

    def __repr__(self):
        return f"{type(self).__name__}({self.identity!r})"
