from __future__ import annotations

from collections.abc import Mapping
from dataclasses import asdict, dataclass, field
from typing import Any

from . import base, mock, planted, remote, scripted
from ..exceptions import ConfigError

BACKEND_KINDS = ("remote", "hash-mock", "planted", "scripted")


@dataclass(frozen=True)
class BackendSpec:
    """
    Declarative description of a backend, as stored in run configs.

    :ivar kind: One of ``remote``, ``hash-mock``, ``planted``, ``scripted``.
    :ivar endpoint: Completions URL (remote only).
    :ivar model: Model name (remote only).
    :ivar params: Keyword arguments for the backend constructor (e.g. ``signal``/``bias``/``noise``/``salt`` for
        planted, ``path`` for scripted, ``max_retries``/``length_normalize`` for remote).
    """

    kind: str
    endpoint: str | None = None
    model: str | None = None
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in BACKEND_KINDS:
            raise ConfigError(f"unknown backend kind {self.kind!r}, expected one of {BACKEND_KINDS}.")
        object.__setattr__(self, "params", dict(self.params))

    @classmethod
    def from_dict(cls, document: Mapping[str, Any]) -> "BackendSpec":
        unknown = sorted(set(document) - {"kind", "endpoint", "model", "params"})
        if unknown:
            raise ConfigError(f"backend: unknown keys {unknown!r}.")
        if "kind" not in document:
            raise ConfigError("backend: missing 'kind'.")
        return cls(**document)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def __hash__(self):
        return hash((self.kind, self.endpoint, self.model, tuple(sorted(self.params.items()))))


def make_backend(
        spec: BackendSpec,
        gold: Mapping[int, int] | None = None,
        max_workers: int = 1,
) -> base.Backend:
    """
    Build a backend from its spec.

    :param spec: Backend description.
    :param gold: Example id -> gold class, required by the planted backend.
    :param max_workers: Thread count for batch scoring.
    """

    params = dict(spec.params)
    try:
        match spec.kind:
            case "remote":
                if not spec.endpoint or not spec.model:
                    raise ConfigError("remote backend needs both 'endpoint' and 'model'.")
                return remote.RemoteBackend(spec.endpoint, spec.model, max_workers=max_workers, **params)
            case "hash-mock":
                return mock.HashMockBackend(max_workers=max_workers, **params)
            case "planted":
                if gold is None:
                    raise ConfigError("planted backend needs the gold labels of the evaluated dataset.")
                return planted.PlantedBackend(gold, max_workers=max_workers, **params)
            case "scripted":
                if "path" not in params:
                    raise ConfigError("scripted backend needs a 'path' parameter.")
                return scripted.ScriptedBackend.from_file(params.pop("path"), max_workers=max_workers, **params)
    except TypeError as e:
        raise ConfigError(f"invalid parameters for {spec.kind} backend: {e}") from e
