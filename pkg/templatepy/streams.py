"""
Seeded, platform-independent random streams and hashes.

Every draw in templatepy (template sampling, demonstration selection, evaluation subsets, synthetic backends) goes
through these functions so that identical seeds reproduce identical results on any platform and in any language that
implements the same 64-bit arithmetic.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
UNIT_SCALE = 2.0 ** -52


def finalize(x: int) -> int:
    """
    splitmix64 output mixer applied to a 64-bit word.
    """

    x &= MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def splitmix64(state: int) -> tuple[int, int]:
    """
    Advance a splitmix64 state by one step.

    :param state: Current 64-bit state.

    :return: The next state and the output word.
    """

    state = (state + GOLDEN_GAMMA) & MASK64
    return state, finalize(state)


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & MASK64
    return h


def to_unit(x: int) -> float:
    """
    Map a 64-bit word to the open interval (0, 1) using its top 52 bits.
    """

    return ((x >> 12) + 0.5) * UNIT_SCALE


def derive_seed(seed: int, purpose: str, *parts: Any) -> int:
    """
    Derive an independent 64-bit seed for a named purpose, so that adding a new consumer of randomness never perturbs
    the draws of an existing one.

    :param seed: Parent seed (e.g. the run seed).
    :param purpose: Name of the stream, e.g. ``"templates"`` or ``"ensemble"``.
    :param parts: Further qualifiers (demo seed, ensemble seed, ...), rendered with ``str()``.

    :return: Derived 64-bit seed.
    """

    label = "/".join([purpose, *(str(part) for part in parts)])
    return finalize(fnv1a64(label.encode("utf-8")) ^ (seed & MASK64))


def hash_unit(*parts: Any) -> float:
    """
    Hash an arbitrary tuple of values to a uniform number in (0, 1).
    """

    label = "\x1f".join(str(part) for part in parts)
    return to_unit(finalize(fnv1a64(label.encode("utf-8"))))


def content_digest(payload: Any) -> str:
    """
    SHA-256 hex digest of a JSON-serialisable payload in canonical form (sorted keys, compact separators).
    """

    canonical = json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class SplitMix64:
    """
    A splitmix64 random stream.

    :ivar state: Current 64-bit state.
    """

    def __init__(self, seed: int):
        self.state = seed & MASK64

    @classmethod
    def for_purpose(cls, seed: int, purpose: str, *parts: Any) -> "SplitMix64":
        return cls(derive_seed(seed, purpose, *parts))

    def next_u64(self) -> int:
        self.state, output = splitmix64(self.state)
        return output

    def randbelow(self, n: int) -> int:
        """
        Uniform integer in [0, n) by rejection sampling (no modulo bias).
        """

        if n <= 0:
            raise ValueError(f"randbelow() needs a positive bound, got {n}.")
        limit = ((MASK64 + 1) // n) * n
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def sample_indices(self, population: int, k: int) -> list[int]:
        """
        Draw k distinct indices from range(population) with a partial Fisher-Yates shuffle. The order of the returned
        list is the draw order.
        """

        if not 0 <= k <= population:
            raise ValueError(f"Cannot draw {k} distinct indices from a population of {population}.")
        pool = list(range(population))
        for i in range(k):
            j = i + self.randbelow(population - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]
