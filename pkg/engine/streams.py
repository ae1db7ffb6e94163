"""
Random Streams — Counter-based, order-independent random substreams.

Every stream is addressed by a master seed plus a key path of
non-negative integers. Two streams with the same address replay the same
draws; streams with different addresses are independent. Addresses are
derived from fixed indices (cell, sample, replica), never from the order
in which work happens to run.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class RandomStream:
    """A Philox generator keyed by (master_seed, parent path, substream_index)."""

    master_seed: int
    substream_index: int = 0
    parent_key: tuple = ()
    _rng: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.substream_index < 0 or any(k < 0 for k in self.parent_key):
            raise ValueError(f"Substream indices must be non-negative: {self.key}")
        seq = np.random.SeedSequence(
            entropy=int(self.master_seed) & 0xFFFFFFFFFFFFFFFF,
            spawn_key=self.key,
        )
        self._rng = np.random.Generator(np.random.Philox(seq))

    @property
    def key(self):
        return tuple(self.parent_key) + (int(self.substream_index),)

    def substream(self, *indices):
        """Derive a child stream; the parent's own draws are not consumed."""
        stream = self
        for index in indices:
            stream = RandomStream(stream.master_seed, int(index), stream.key)
        return stream

    def uniform(self, size=None):
        """Uniform draws on (0, 1]; callers clamp into the open interval."""
        # Generator.random() is on [0, 1); reflecting keeps 0 out of logs
        return 1.0 - self._rng.random(size)

    def integers(self, high, size=None):
        return self._rng.integers(0, high, size=size)
