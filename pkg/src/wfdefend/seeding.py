"""Stable seed derivation so every random draw traces back to one user seed."""

import hashlib


def stable_seed(*parts) -> int:
    """Derive a 64-bit seed from the given parts.

    Unlike the builtin hash(), the result is stable across processes and
    platforms, which keeps per-trace and per-trial randomness independent
    of processing order and parallelism.
    """
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(repr(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "big")
