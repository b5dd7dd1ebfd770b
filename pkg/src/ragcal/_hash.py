"""Stable, cross-platform hashing helpers.

Python's builtin ``hash`` is salted per process, so everything that must be
reproducible across runs (distractor sampling, synthetic noise, cache keys)
goes through blake2b instead.
"""

from __future__ import annotations

import hashlib
from typing import Iterable


def _encode_parts(parts: Iterable[object]) -> bytes:
    # Length-prefixed encoding: ("ab", "c") and ("a", "bc") must not collide.
    chunks = []
    for part in parts:
        data = str(part).encode("utf-8")
        chunks.append(len(data).to_bytes(8, "big"))
        chunks.append(data)
    return b"".join(chunks)


def stable_hash64(*parts: object) -> int:
    """Deterministic 64-bit unsigned hash of the stringified parts."""
    digest = hashlib.blake2b(_encode_parts(parts), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def content_key(*parts: object) -> str:
    """Deterministic 128-bit hex key; used for score-cache addressing."""
    return hashlib.blake2b(_encode_parts(parts), digest_size=16).hexdigest()
