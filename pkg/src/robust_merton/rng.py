"""Counter-based Gaussian stream (Philox4x32-10 + Box-Muller).

Every normal is a pure function of (seed, path, step, component), so any
block of the (paths x steps x components) array can be generated
independently, in any order, on any thread, with bit-identical results.

Draws of one path are numbered k = step * dim + component. Counter layout:
(path_lo, path_hi, (k // 2)_lo, (k // 2)_hi); key = (seed_lo, seed_hi). Each
counter yields two 53-bit uniforms and, by Box-Muller, the normals k even
(cosine branch) and k odd (sine branch).
"""

from __future__ import annotations

import numba as nb
import numpy as np

@nb.njit(cache=True, inline="always")
def _philox4x32_10(c0, c1, c2, c3, k0, k1):
    # uint32 words carried in uint64 registers
    for i in range(10):
        if i > 0:
            k0 = (k0 + np.uint64(0x9E3779B9)) & np.uint64(0xFFFFFFFF)
            k1 = (k1 + np.uint64(0xBB67AE85)) & np.uint64(0xFFFFFFFF)
        p0 = np.uint64(0xD2511F53) * c0
        p1 = np.uint64(0xCD9E8D57) * c2
        hi0 = p0 >> np.uint64(32)
        lo0 = p0 & np.uint64(0xFFFFFFFF)
        hi1 = p1 >> np.uint64(32)
        lo1 = p1 & np.uint64(0xFFFFFFFF)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


@nb.njit(cache=True)
def philox_block(counters, key):
    """Raw Philox4x32-10 on an (m, 4) uint32 counter array; returns (m, 4) uint32."""
    m = counters.shape[0]
    out = np.empty((m, 4), dtype=np.uint32)
    k0 = np.uint64(key[0])
    k1 = np.uint64(key[1])
    for i in range(m):
        a, b, c, d = _philox4x32_10(
            np.uint64(counters[i, 0]), np.uint64(counters[i, 1]),
            np.uint64(counters[i, 2]), np.uint64(counters[i, 3]), k0, k1,
        )
        out[i, 0] = a
        out[i, 1] = b
        out[i, 2] = c
        out[i, 3] = d
    return out


@nb.njit(cache=True, nogil=True)
def _normals(seed_lo, seed_hi, path0, n_paths, step0, n_steps, dim, out):
    two_pi = 2.0 * np.pi
    inv53 = 1.0 / 9007199254740992.0
    k0 = np.uint64(seed_lo)
    k1 = np.uint64(seed_hi)
    first = step0 * dim
    last = (step0 + n_steps) * dim
    for p in range(n_paths):
        path = np.uint64(path0 + p)
        c0 = path & np.uint64(0xFFFFFFFF)
        c1 = path >> np.uint64(32)
        for pair in range(first // 2, (last + 1) // 2):
            q = np.uint64(pair)
            x0, x1, x2, x3 = _philox4x32_10(c0, c1, q & np.uint64(0xFFFFFFFF), q >> np.uint64(32), k0, k1)
            u1 = ((x0 >> np.uint64(5)) * np.uint64(67108864) + (x1 >> np.uint64(6))) * inv53
            u2 = ((x2 >> np.uint64(5)) * np.uint64(67108864) + (x3 >> np.uint64(6))) * inv53
            rad = np.sqrt(-2.0 * np.log(1.0 - u1))
            k = 2 * pair
            if k >= first:
                out[p, (k - first) // dim, (k - first) % dim] = rad * np.cos(two_pi * u2)
            k += 1
            if first <= k < last:
                out[p, (k - first) // dim, (k - first) % dim] = rad * np.sin(two_pi * u2)


def standard_normals(seed: int, paths: tuple[int, int], steps: tuple[int, int], dim: int) -> np.ndarray:
    """Standard normals for paths [p0, p1) x steps [s0, s1) x ``dim`` components.

    Parameters
    ----------
    seed : 64-bit non-negative integer key
    paths, steps : half-open index ranges
    """
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    p0, p1 = paths
    s0, s1 = steps
    out = np.empty((p1 - p0, s1 - s0, dim), dtype=np.float64)
    _normals(seed & 0xFFFFFFFF, seed >> 32, p0, p1 - p0, s0, s1 - s0, dim, out)
    return out
