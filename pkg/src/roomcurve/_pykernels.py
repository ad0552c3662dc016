"""Pure-numpy implementations of the compiled kernels in ``_ckernels.pyx``."""

import functools
import itertools

import numpy as np

HALF_TAPS = 8


def _taps(t):
    return np.sinc(t) * 0.5 * (1.0 + np.cos(np.pi * t / HALF_TAPS))


@functools.lru_cache(maxsize=32)
def _image_table(max_order):
    """Integer image indices ``(q, n)`` per axis with total order <= max_order.

    Rows follow the same enumeration order as the compiled kernel.
    """
    nmax = max_order // 2 + 1
    rng = range(-nmax, nmax + 1)
    rows = [
        (qx, qy, qz, nx, ny, nz)
        for qx, qy, qz in itertools.product((0, 1), repeat=3)
        for nx, ny, nz in itertools.product(rng, repeat=3)
        if abs(nx - qx) + abs(nx) + abs(ny - qy) + abs(ny) + abs(nz - qz) + abs(nz) <= max_order
    ]
    table = np.array(rows, dtype=np.int64).reshape(-1, 6)
    table.setflags(write=False)
    return table


def image_source_rir(src, mic, dims, beta, max_order, fs, c, pre_delay=0):
    """Image-source impulse response of a rectangular room."""
    src = np.asarray(src, dtype=float)
    mic = np.asarray(mic, dtype=float)
    dims = np.asarray(dims, dtype=float)
    beta = np.asarray(beta, dtype=float)

    table = _image_table(int(max_order))
    q, n = table[:, :3], table[:, 3:]
    near = np.abs(n - q)  # hits on walls at coordinate 0
    far = np.abs(n)  # hits on walls at coordinate L
    amp = np.prod(beta[0::2] ** near * beta[1::2] ** far, axis=1)
    keep = amp != 0.0
    q, n, amp = q[keep], n[keep], amp[keep]

    delta = (1 - 2 * q) * src + 2 * n * dims - mic
    d = np.sqrt(np.sum(delta * delta, axis=1))
    tau = d / c * fs + pre_delay
    amp = amp / d

    length = int(np.floor(tau.max())) + HALF_TAPS + 1
    n0 = np.floor(tau).astype(np.int64)
    idx = n0[:, None] + np.arange(1 - HALF_TAPS, HALF_TAPS + 1)[None, :]
    contrib = amp[:, None] * _taps(idx - tau[:, None])
    valid = idx >= 0
    out = np.zeros(length)
    np.add.at(out, idx[valid], contrib[valid])
    return out
