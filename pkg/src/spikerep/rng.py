"""Named, independent random substreams derived from a single experiment seed.

Every source of randomness in a run (weight init, spike-phase draws, patch
sampling, k-means restarts, ...) pulls from its own substream so that adding
or reordering one consumer never perturbs the draws seen by another.
"""

from __future__ import annotations

import hashlib

import numpy as np


def substream_seed(seed: int, *names: object) -> np.random.SeedSequence:
    """Derive a SeedSequence for the substream identified by ``names``.

    The name parts are hashed (sha256) into entropy words, so the mapping is
    stable across platforms and numpy versions.
    """
    tag = "/".join(str(n) for n in names)
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 4], "big") for i in range(0, 16, 4)]
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFF, *words])


def derive_rng(seed: int, *names: object) -> np.random.Generator:
    """Generator for the named substream of ``seed``."""
    return np.random.Generator(np.random.PCG64(substream_seed(seed, *names)))
