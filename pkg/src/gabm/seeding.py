"""Deterministic seed derivation."""

from __future__ import annotations

import hashlib


def derive_seed(*parts) -> int:
    """Hash an arbitrary tuple of labels into a 63-bit seed.

    ``derive_seed(master, i)`` is stable across processes and Python
    versions (no reliance on ``hash()`` randomization).
    """
    text = "\x1f".join(repr(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1
