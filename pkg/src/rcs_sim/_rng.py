"""Deterministic splitmix64 random streams shared by both engine paths.

Generator state lives in a length-1 uint64 array so the compiled and
interpreted kernels mutate it identically. All state arithmetic is
uint64-on-uint64, which wraps modulo 2**64 under numpy and numba alike, so
the two paths produce bit-identical draws.
"""

import math

import numpy as np

from ._dispatch import njit

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

_GOLDEN = np.uint64(GOLDEN)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53
_TWO_PI = 6.283185307179586


@njit
def next_u64(state):
    """Advance one splitmix64 step; `state` is a length-1 uint64 array."""
    state[0] = state[0] + _GOLDEN
    z = state[0]
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit
def uniform(state):
    """Uniform double in [0, 1) with 53 random bits."""
    return float(next_u64(state) >> _S11) * _INV53


@njit
def gauss(state):
    """Standard normal via cos-only Box-Muller (one normal per uniform pair).

    The sin twin is deliberately unused: LLVM fuses same-argument sin+cos
    into sincos, which rounds differently from separate libm calls and would
    break bit-parity between the compiled and interpreted paths.
    """
    u1 = uniform(state)
    u2 = uniform(state)
    return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(_TWO_PI * u2)


@njit
def geometric(state, p, cap):
    """Truncated geometric sample: min(G, cap) with P(G=k) = (1-p)^(k-1) p, k>=1."""
    if p >= 1.0:
        return 1
    u = uniform(state)
    k = 1 + int(math.floor(math.log(1.0 - u) / math.log(1.0 - p)))
    if k < 1:
        k = 1
    if k > cap:
        k = cap
    return k


def mix64(x: int) -> int:
    """splitmix64 finalizer on a plain Python integer."""
    x &= MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & MASK64
    x ^= x >> 31
    return x


def substream_seed(master_seed: int, stream_id: int) -> int:
    """Derive an independent stream seed from (master seed, stream id).

    Splitting rule: stream k of seed s starts from mix64(mix64(s + GOLDEN*(k+1))).
    Every consumer of randomness in a run (uplink channel, downlink channel,
    target motion) gets its own stream id, so draw ordering in one consumer
    never perturbs another.
    """
    base = (master_seed + GOLDEN * (stream_id + 1)) & MASK64
    return mix64(mix64(base))


def make_state(seed: int) -> np.ndarray:
    """Fresh generator state array for the given 64-bit seed."""
    st = np.zeros(1, dtype=np.uint64)
    st[0] = np.uint64(seed & MASK64)
    return st
