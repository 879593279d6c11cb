from __future__ import annotations

from . import base
from .. import streams


class HashMockBackend(base.Backend):
    r"""
    Deterministic stand-in for a language model. The score of a request is

    .. math:: -(1 + 4u), \quad u = \text{to\_unit}(\text{finalize}(\text{FNV1a64}(p \,\|\, \texttt{0x1F} \,\|\, c)))

    where :math:`p` and :math:`c` are the UTF-8 bytes of the prefix and continuation, so every score lies in
    [-5, -1] and is identical across runs, platforms, and implementations.
    """

    def __init__(self, max_workers: int = 1):
        super().__init__(max_workers)

    @property
    def identity(self) -> str:
        return "hash-mock"

    def _score(self, request: base.ScoreRequest) -> float:
        return hash_mock_score(request.prefix, request.continuation)


def hash_mock_score(prefix: str, continuation: str) -> float:
    data = prefix.encode("utf-8") + b"\x1f" + continuation.encode("utf-8")
    u = streams.to_unit(streams.finalize(streams.fnv1a64(data)))
    return -(1.0 + 4.0 * u)
