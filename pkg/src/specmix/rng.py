"""Deterministic random streams.

Everything stochastic in this package (parameter init, masking, batch order)
draws from a ``SplitRng``: a Philox counter-based generator keyed by a user
seed plus a spawn path. The same seed and path produce the same draw sequence
on every platform, and child streams obtained via :meth:`SplitRng.split` are
statistically independent of the parent and of each other.
"""

from __future__ import annotations

import numpy as np


class SplitRng:
    """Philox-backed generator with deterministic, splittable substreams."""

    def __init__(self, seed: int, _path: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.path = _path
        seq = np.random.SeedSequence(self.seed, spawn_key=_path)
        self.gen = np.random.Generator(np.random.Philox(seq))

    def split(self, index: int) -> "SplitRng":
        """Child stream ``index``; independent of this stream and its siblings."""
        return SplitRng(self.seed, self.path + (int(index),))

    # Thin delegations for the draws the package actually uses.
    def random(self, size=None):
        return self.gen.random(size)

    def integers(self, low, high, size=None):
        return self.gen.integers(low, high, size=size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.gen.normal(loc, scale, size)

    def permutation(self, n: int) -> np.ndarray:
        return self.gen.permutation(n)
