"""Counter-based pseudorandom streams.

Every draw is a pure function of ``(seed, stream_index, counter)``: the
generator is a splitmix64-style finalizer applied to a keyed golden-ratio
counter stride.  Per-sample substreams are therefore free -- estimators key
``stream_index`` by global sample index, so results are identical no matter
how samples are chunked across workers -- and numpy and numba code paths
produce bit-identical draws from the same key material.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_SEED_TAG = np.uint64(0x1F123BB5159A55E5)
_U53 = 2.0 ** -53


def mix64(z):
    """SplitMix64 finalizer on uint64 scalars or arrays (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


def stream_key(seed, stream_index):
    """64-bit key for one (seed, stream) pair (seed taken mod 2^64)."""
    s = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
    t = np.asarray(stream_index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(mix64(s ^ _SEED_TAG) + t * GOLDEN)


def raw_uint64(key, counter):
    """Raw 64-bit output at the given counter offsets (broadcasting)."""
    key = np.asarray(key, dtype=np.uint64)
    ctr = np.asarray(counter, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(key + ctr * GOLDEN)


def uniform_from_raw(bits):
    """Map raw uint64 words to doubles strictly inside (0, 1)."""
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * _U53


def uniform_block(seed, stream_indices, ndraws, counter_start=0):
    """(len(streams), ndraws) uniforms; row i is stream stream_indices[i]."""
    keys = stream_key(seed, stream_indices)[:, None]
    ctrs = np.arange(counter_start, counter_start + ndraws, dtype=np.uint64)[None, :]
    return uniform_from_raw(raw_uint64(keys, ctrs))


def normal_block(seed, stream_indices, ndraws, counter_start=0):
    """Standard normals via inverse CDF; one uint64 consumed per normal."""
    return ndtri(uniform_block(seed, stream_indices, ndraws, counter_start))


def substream_index(role, index):
    """Pack an estimator role and a sample index into one stream index.

    Roles separate independent draw families inside one estimator run
    (e.g. outer flats vs. inner membership points) without counter overlap.
    """
    return (int(role) << 44) + int(index)


@dataclass
class RandomStream:
    """A single reproducible stream: output is a pure function of the fields.

    The counter advances by exactly the number of values drawn, so a fixed
    call sequence replays bit-for-bit.
    """

    seed: int
    stream_index: int = 0
    _counter: int = field(default=0, repr=False)

    def clone(self):
        return RandomStream(self.seed, self.stream_index, self._counter)

    def _take(self, n):
        c0 = self._counter
        self._counter = c0 + n
        key = stream_key(self.seed, self.stream_index)
        return raw_uint64(key, np.arange(c0, c0 + n, dtype=np.uint64))

    def raw(self, size=1):
        """Raw uint64 words (advances the counter)."""
        return self._take(int(size))

    def uniform(self, size=None):
        """Uniform draws in (0, 1)."""
        if size is None:
            return float(uniform_from_raw(self._take(1))[0])
        u = uniform_from_raw(self._take(int(np.prod(size))))
        return u.reshape(size)

    def normal(self, size=None):
        """Standard normal draws (inverse-CDF, one word per draw)."""
        if size is None:
            return float(ndtri(self.uniform()))
        return ndtri(self.uniform(size))
