"""Counter-based random-number substreams for reproducible simulation.

Every replication owns a private substream derived from the pair
``(seed, replication index)``.  Streams are built on the Philox 4x64
counter-based generator: the 128-bit key holds the global seed and the
256-bit counter starts at ``[0, index, 0, 0]``, so substreams occupy
disjoint counter ranges and a variate is a pure function of
``(seed, index, draw position)``.  Results are therefore identical no
matter how replications are scheduled across workers.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _key_words(seed: int) -> tuple[int, int]:
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    return seed & _MASK64, (seed >> 64) & _MASK64


def substream(seed: int, index: int) -> np.random.Generator:
    """Return the generator for replication ``index`` under ``seed``."""
    if index < 0:
        raise ValueError(f"substream index must be nonnegative, got {index}")
    lo, hi = _key_words(seed)
    bitgen = np.random.Philox(key=[lo, hi], counter=[0, index, 0, 0])
    return np.random.Generator(bitgen)


class StreamPool:
    """Reusable generator that can be re-seated on any substream.

    Constructing a fresh ``Philox``/``Generator`` pair per replication
    costs ~20us; rewriting the counter of a pooled instance costs ~2us
    and produces bit-identical draws (covered by the test suite).  One
    pool must not be shared across threads.
    """

    def __init__(self, seed: int):
        lo, hi = _key_words(seed)
        self._bitgen = np.random.Philox(key=[lo, hi])
        self.generator = np.random.Generator(self._bitgen)
        self._state = self._bitgen.state
        self._counter = self._state["state"]["counter"]
        self._counter[:] = 0

    def seat(self, index: int) -> np.random.Generator:
        """Point the pooled generator at substream ``index`` and return it."""
        self._counter[0] = 0
        self._counter[1] = index
        self._counter[2] = 0
        self._counter[3] = 0
        self._state["buffer_pos"] = 4
        self._state["has_uint32"] = 0
        self._state["uinteger"] = 0
        self._bitgen.state = self._state
        return self.generator
