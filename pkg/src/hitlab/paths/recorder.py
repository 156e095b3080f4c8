"""Stored-path oracle for the one-pass uniform-time sampler."""

from __future__ import annotations

import math

import numba as nb
import numpy as np

from ..rng import new_state, next_normal, next_uniform_open
from .kernels import bridge_point_inside

_E_NEGLIGIBLE = 37.0


@nb.njit(nogil=True, cache=True)
def record_uniform_batch(level, step, t_ref, max_time, bridge_correction, seed, stream0, out):
    """First pass stores the grid of a single-barrier path; second pass reads it at ``U T``.

    Stepping and barrier handling follow :func:`hitlab.paths.kernels.brownian_batch`
    (including the relative step refreshed every 16 steps); the uniform time
    is drawn after the path is complete and the value is a Brownian-bridge
    interpolation of the two neighbouring grid points, kept below the level
    when the bridge correction is on.
    """
    cap = 1024
    times = np.empty(cap)
    values = np.empty(cap)
    for i in range(out.shape[0]):
        st = new_state(seed, stream0 + np.uint64(i))
        t = 0.0
        x0 = 0.0
        times[0] = 0.0
        values[0] = 0.0
        k = 0
        block_left = 0
        h_block = 0.0
        while True:
            if block_left == 0:
                h_block = step * max(t, t_ref)
                block_left = 16
            block_left -= 1
            h = h_block
            x1 = x0 + math.sqrt(h) * next_normal(st)
            stop = False
            frac = 1.0
            if x1 >= level:
                frac = (level - x0) / (x1 - x0)
                x1 = level
                stop = True
            elif bridge_correction:
                e = 2.0 * (level - x0) * (level - x1) / h
                if e < _E_NEGLIGIBLE and next_uniform_open(st) < math.exp(-e):
                    x1 = level
                    frac = 0.5
                    stop = True
            t = t + h * frac
            k += 1
            if k >= times.size:
                nt = np.empty(2 * times.size)
                nv = np.empty(2 * times.size)
                nt[:times.size] = times
                nv[:times.size] = values
                times = nt
                values = nv
            times[k] = t
            values[k] = x1
            x0 = x1
            if stop or t >= max_time:
                break
        target = next_uniform_open(st) * t
        # binary search for the cell containing the target time
        lo = 0
        hi = k
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if times[mid] < target:
                lo = mid
            else:
                hi = mid
        dt = times[hi] - times[lo]
        f = (target - times[lo]) / dt
        xa = values[lo]
        xb = values[hi]
        if bridge_correction and not (stop and hi == k):
            y = bridge_point_inside(st, xa, xb, f, dt, level, -math.inf)
        else:
            y = xa + f * (xb - xa) + math.sqrt(max(f * (1.0 - f), 0.0) * dt) * next_normal(st)
        out[i] = y / math.sqrt(t)
