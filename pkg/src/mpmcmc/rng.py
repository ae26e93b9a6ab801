"""Counter-based random substreams.

Every random draw made by a sampler comes from a substream addressed by
(seed, chain, iteration, role). The address maps to a Philox key and counter,
so the draws of iteration ``t`` never depend on how many draws earlier
iterations made, nor on how work is split across workers.
"""

from __future__ import annotations

import zlib

import numpy as np

CANDIDATES = 0
SELECT = 1
SHADOWS = 2
ACCEPT = 3


def derive_seed(*parts) -> int:
    """Mix integers and strings into a 64-bit seed."""
    words = []
    for p in parts:
        if isinstance(p, str):
            words.append(zlib.crc32(p.encode()))
        else:
            words.append(int(p))
    return int(np.random.SeedSequence(words).generate_state(1, np.uint64)[0])


class ChainStreams:
    """Substream factory for one chain.

    A single bit generator is rewound for every request, so a generator
    returned by :meth:`get` is only valid until the next call.
    """

    def __init__(self, seed: int, chain: int = 0):
        self.seed = int(seed)
        self.chain = int(chain)
        self._key = np.random.SeedSequence([self.seed, self.chain]).generate_state(2, np.uint64)
        self._bitgen = np.random.Philox(key=self._key)
        self._gen = np.random.Generator(self._bitgen)
        self._buffer = np.zeros(4, dtype=np.uint64)

    def get(self, iteration: int, role: int) -> np.random.Generator:
        self._bitgen.state = {
            "bit_generator": "Philox",
            "state": {
                "counter": np.array([0, 0, role, iteration], dtype=np.uint64),
                "key": self._key,
            },
            "buffer": self._buffer,
            "buffer_pos": 4,
            "has_uint32": 0,
            "uinteger": 0,
        }
        return self._gen

    def iteration(self, t: int) -> "IterationStreams":
        return IterationStreams(self, t)


class IterationStreams:
    """Role-indexed generators for one iteration."""

    def __init__(self, source: ChainStreams, t: int):
        self.source = source
        self.t = t

    def __call__(self, role: int) -> np.random.Generator:
        return self.source.get(self.t, role)


class SharedStream:
    """Adapter so a plain Generator can stand in for per-role substreams."""

    def __init__(self, gen: np.random.Generator):
        self.gen = gen

    def __call__(self, role: int) -> np.random.Generator:
        return self.gen


def as_streams(rng):
    """Accept a Generator, an int seed, or an existing role-indexed stream."""
    if isinstance(rng, (IterationStreams, SharedStream)):
        return rng
    if isinstance(rng, np.random.Generator):
        return SharedStream(rng)
    if isinstance(rng, (int, np.integer)):
        return SharedStream(np.random.default_rng(int(rng)))
    if callable(rng):
        return rng
    raise TypeError(f"cannot build random streams from {type(rng).__name__}")
