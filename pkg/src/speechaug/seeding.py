"""Deterministic seed derivation for per-item randomness.

Python's built-in ``hash()`` is salted per process, so anything that must be
reproducible across runs derives its RNG seed here instead.
"""

import hashlib


def stable_seed(*parts) -> int:
    """Derive a 64-bit seed from labelled parts via SHA-256."""
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")
