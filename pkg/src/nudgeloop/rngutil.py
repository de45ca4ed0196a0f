"""Derived random seeds.

Every stochastic choice in the system (exploration draws, message selection,
simulated user behaviour) uses a generator seeded from a stable hash of the
global seed plus a purpose label and coordinates. Randomness is then a pure
function of (seed, purpose, coordinates), so a process that restarts mid-run
reproduces exactly the draws an uninterrupted run would have made.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(*parts: object) -> int:
    """Stable 64-bit seed from a tuple of hashable parts."""
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derived_rng(*parts: object) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))
