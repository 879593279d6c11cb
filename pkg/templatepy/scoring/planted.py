from __future__ import annotations

from collections.abc import Mapping

from . import base
from .. import streams
from ..exceptions import BackendError


class PlantedBackend(base.Backend):
    r"""
    Synthetic world with a known answer and genuine template sensitivity. Prompts are never read; the backend scores a
    request from its provenance tags as

    .. math:: s \cdot 1[c = \text{gold}(e)] + a \cdot u(\text{salt}, t, c) + \epsilon \cdot u(\text{salt}, t, e, c)
        - (s + a + \epsilon)

    for template :math:`t`, example :math:`e`, and class :math:`c`, where :math:`u` hashes its arguments to (0, 1).
    The constant offset keeps every score non-positive and cancels in any softmax over classes.

    The template term gives every template a fixed per-class bias, so single templates disagree about the same
    examples while averaging over templates shrinks the bias. Two backends with different ``salt`` values have
    unrelated template biases.

    Parameters
    ----------
    gold: Mapping[int, int]
        Example id -> gold class index.
    signal: float
        Weight :math:`s` of the gold-class indicator.
    bias: float
        Amplitude :math:`a` of the per-(template, class) bias.
    noise: float
        Amplitude :math:`\epsilon` of the per-(template, example, class) noise.
    salt: int
        Seed of the bias and noise hashes.

    Notes
    -----
    Content-free prompts carry no example id: they get no gold signal and their noise is keyed on the content-free
    marker instead, so the content-free distribution of a template is its bias plus one fixed noise draw.
    """

    reads_meta = True

    def __init__(
            self,
            gold: Mapping[int, int],
            signal: float = 2.0,
            bias: float = 2.0,
            noise: float = 0.5,
            salt: int = 0,
            max_workers: int = 1,
    ):
        self.gold = dict(gold)
        self.signal = signal
        self.bias = bias
        self.noise = noise
        self.salt = salt
        self._gold_digest = streams.content_digest(sorted(self.gold.items()))[:16]
        super().__init__(max_workers)

    @property
    def identity(self) -> str:
        return (
            f"planted:s={self.signal!r}:a={self.bias!r}:e={self.noise!r}:salt={self.salt}:gold={self._gold_digest}"
        )

    def _score(self, request: base.ScoreRequest) -> float:
        meta = request.meta
        if meta.template_id is None or meta.class_index is None:
            raise BackendError("planted backend needs template_id and class_index provenance tags.")

        example_key = "content-free" if meta.example_id is None else meta.example_id
        indicator = 1.0 if meta.example_id is not None and self.gold.get(meta.example_id) == meta.class_index else 0.0

        logit = (
                self.signal * indicator
                    + self.bias * streams.hash_unit(self.salt, "bias", meta.template_id, meta.class_index)
                    + self.noise * streams.hash_unit(
                        self.salt, "noise", meta.template_id, example_key, meta.class_index
                    )
        )
        return logit - (self.signal + self.bias + self.noise)
