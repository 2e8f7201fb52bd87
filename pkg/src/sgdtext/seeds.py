"""Deterministic fan-out of one master seed into labeled substreams."""

from __future__ import annotations

import hashlib


def substream(seed: int, label: str) -> int:
    """Derive a stable 64-bit seed from (seed, label).

    Uses a keyed hash rather than Python's ``hash`` so the value is
    identical across processes and platforms.
    """
    digest = hashlib.blake2b(f"{seed}/{label}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")
