"""Deterministic derivation of independent random streams.

Every stochastic component (weight init, dropout, batch shuffling, synthetic
data, grid cells) gets its own stream keyed by a textual tag plus the user
seed, so adding or reordering one consumer never perturbs another.
"""

import hashlib

U64_MASK = (1 << 64) - 1


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from heterogeneous parts (platform independent)."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(str(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


def stable_hash64(text: str) -> int:
    """Stable 64-bit hash of a string; unlike hash(), not salted per process."""
    return derive_seed(text)
