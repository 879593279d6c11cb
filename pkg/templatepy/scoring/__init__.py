"""
Scoring backends: log P(continuation | prefix) from a remote endpoint or a deterministic test world.
"""

# Utility files.
from .base import Backend, ScoreRequest, TokenScore
from .cache import CachedBackend, ScoreCache, make_key

# Backends.
from .mock import HashMockBackend, hash_mock_score
from .planted import PlantedBackend
from .remote import RemoteBackend, continuation_logprob, parse_tokens
from .scripted import ScriptedBackend

from .factory import BACKEND_KINDS, BackendSpec, make_backend
