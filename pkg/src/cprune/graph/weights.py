"""Deterministic weight materialization.

When a conv node carries no inline weights, its tensor is generated from the
model's ``weight_seed`` and the node id with a counter-based SplitMix64
stream evaluated in ``uint64`` arithmetic. The stream depends only on integer
operations, so it is identical on every platform and numpy version.

Layout of a node's stream (``key`` derived from seed and node id)::

    u_i = splitmix64(key + (i + 1) * GAMMA)        i = 0, 1, ...

    weights[i]  = (int(u_i >> 52) - 2048) * scale[f(i)] / 2**16   i < N
    scale[f]    = int(u_{N+f} >> 60) + 1                            f < filters

Every weight is a dyadic rational with at most 16 fractional bits and
magnitude below 0.5, so any float64 sum over one tensor is exact and therefore
independent of summation order.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["GAMMA", "splitmix64", "stream_key", "materialize_weights"]

MASK = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def splitmix64(z: int) -> int:
    z &= MASK
    z = ((z ^ (z >> 30)) * _M1) & MASK
    z = ((z ^ (z >> 27)) * _M2) & MASK
    return z ^ (z >> 31)


def _splitmix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def stream_key(seed: int, node_id: str) -> int:
    return splitmix64(((seed & MASK) * GAMMA + zlib.crc32(node_id.encode("utf-8"))) & MASK)


def _stream(key: int, start: int, count: int) -> np.ndarray:
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _splitmix64_array(np.uint64(key) + idx * np.uint64(GAMMA))


def materialize_weights(seed: int, node_id: str, shape: tuple[int, int, int, int]) -> np.ndarray:
    """Weight tensor of ``shape`` (filters, in_channels, kh, kw) for one node."""
    filters = shape[0]
    n = int(np.prod(shape))
    key = stream_key(seed, node_id)
    raw = _stream(key, 0, n)
    ints = (raw >> np.uint64(52)).astype(np.int64) - 2048
    scales = (_stream(key, n, filters) >> np.uint64(60)).astype(np.int64) + 1
    ints = ints.reshape(shape) * scales[:, None, None, None]
    return ints.astype(np.float64) / float(1 << 16)
