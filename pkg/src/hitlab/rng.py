"""Counter-based random numbers usable inside numba kernels.

The generator is Philox4x32-10.  The 64-bit ``seed`` is the key and the
128-bit counter is ``(block, stream_id)``, so every ``(seed, stream_id)`` pair
owns an independent sequence of ``2**64`` blocks.  Paths are simulated on
stream ``stream_id + path_index``; results therefore do not depend on how a
batch is split across workers.

Kernel-side state is a ``uint64[6]`` array::

    [seed, stream_id, block_counter, n_buffered, word0, word1]

Each Philox block yields two 64-bit words.  Normals come from a 128-layer
ziggurat (Doornik's ZIGNOR constants): one word per draw on the fast path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np

__all__ = [
    "RngStream",
    "philox4x32",
    "new_state",
    "next_u64",
    "next_uniform",
    "next_uniform_open",
    "next_normal",
    "uniforms",
    "normals",
]

_U32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_ONE = np.uint64(1)
_ZERO = np.uint64(0)
_TWO = np.uint64(2)
_S11 = np.uint64(11)
_MASK7 = np.uint64(0x7F)
_INV53 = 1.0 / 9007199254740992.0


@nb.njit(inline="always", cache=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Ten Philox rounds on 32-bit lanes held in uint64 values."""
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (
            ((p1 >> _S32) ^ c1 ^ k0) & _U32,
            p1 & _U32,
            ((p0 >> _S32) ^ c3 ^ k1) & _U32,
            p0 & _U32,
        )
        k0 = (k0 + _W0) & _U32
        k1 = (k1 + _W1) & _U32
    return c0, c1, c2, c3


@nb.njit(cache=True)
def new_state(seed, stream_id):
    st = np.zeros(6, dtype=np.uint64)
    st[0] = np.uint64(seed)
    st[1] = np.uint64(stream_id)
    return st


@nb.njit(inline="always", cache=True)
def next_u64(st):
    if st[3] == _ZERO:
        ctr = st[2]
        sid = st[1]
        key = st[0]
        r0, r1, r2, r3 = philox4x32(ctr & _U32, ctr >> _S32, sid & _U32, sid >> _S32,
                                    key & _U32, key >> _S32)
        st[4] = r0 | (r1 << _S32)
        st[5] = r2 | (r3 << _S32)
        st[2] = ctr + _ONE
        st[3] = _TWO
        return st[4]
    st[3] = _ZERO
    return st[5]


@nb.njit(inline="always", cache=True)
def next_uniform(st):
    """Uniform on ``[0, 1)`` with 53 random bits."""
    return float(next_u64(st) >> _S11) * _INV53


@nb.njit(inline="always", cache=True)
def next_uniform_open(st):
    """Uniform on ``(0, 1)``; safe for ``log``."""
    return (float(next_u64(st) >> _S11) + 0.5) * _INV53


def _ziggurat_tables(layers=128, r=3.442619855899, v=9.91256303526217e-3):
    x = np.zeros(layers + 1)
    f = math.exp(-0.5 * r * r)
    x[0] = v / f
    x[1] = r
    for i in range(2, layers):
        x[i] = math.sqrt(-2.0 * math.log(v / x[i - 1] + f))
        f = math.exp(-0.5 * x[i] * x[i])
    ratio = x[1:] / x[:-1]
    return x, ratio


_ZIG_X, _ZIG_RATIO = _ziggurat_tables()
_ZIG_R = 3.442619855899


@nb.njit(cache=True)
def _normal_tail(st, negative):
    while True:
        x = math.log(next_uniform_open(st)) / _ZIG_R
        y = math.log(next_uniform_open(st))
        if -2.0 * y >= x * x:
            break
    return x - _ZIG_R if negative else _ZIG_R - x


@nb.njit(cache=True)
def next_normal(st):
    """Standard normal variate (ziggurat)."""
    zx = _ZIG_X
    zr = _ZIG_RATIO
    while True:
        w = next_u64(st)
        u = 2.0 * (float(w >> _S11) * _INV53) - 1.0
        i = int(w & _MASK7)
        if abs(u) < zr[i]:
            return u * zx[i]
        if i == 0:
            return _normal_tail(st, u < 0.0)
        x = u * zx[i]
        f0 = math.exp(-0.5 * (zx[i] * zx[i] - x * x))
        f1 = math.exp(-0.5 * (zx[i + 1] * zx[i + 1] - x * x))
        if f1 + next_uniform(st) * (f0 - f1) < 1.0:
            return x


@nb.njit(cache=True)
def _fill_uniform(seed, stream_id, out):
    st = new_state(seed, stream_id)
    for i in range(out.size):
        out[i] = next_uniform(st)


@nb.njit(cache=True)
def _fill_normal(seed, stream_id, out):
    st = new_state(seed, stream_id)
    for i in range(out.size):
        out[i] = next_normal(st)


@dataclass(frozen=True)
class RngStream:
    """Handle on one counter-based stream.

    ``counter`` is the starting block; kernels always start at block 0 of
    their own stream, so it only matters for the array helpers below.
    """

    seed: int
    stream_id: int = 0
    counter: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id", "counter"):
            v = getattr(self, name)
            if not 0 <= v < 2 ** 64:
                raise ValueError(f"{name} must fit in 64 unsigned bits, got {v}")

    def state(self) -> np.ndarray:
        st = new_state(np.uint64(self.seed), np.uint64(self.stream_id))
        st[2] = np.uint64(self.counter)
        return st

    def spawn(self, offset: int) -> "RngStream":
        """Stream ``stream_id + offset`` under the same seed."""
        return RngStream(self.seed, (self.stream_id + offset) % 2 ** 64)


def uniforms(stream: RngStream, n: int) -> np.ndarray:
    """First ``n`` uniforms of a stream (from block 0)."""
    out = np.empty(n)
    _fill_uniform(np.uint64(stream.seed), np.uint64(stream.stream_id), out)
    return out


def normals(stream: RngStream, n: int) -> np.ndarray:
    """First ``n`` standard normals of a stream (from block 0)."""
    out = np.empty(n)
    _fill_normal(np.uint64(stream.seed), np.uint64(stream.stream_id), out)
    return out
