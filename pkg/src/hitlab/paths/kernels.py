"""numba kernels that simulate batches of paths and reduce them to functionals.

Each kernel loops over paths ``i = 0..n-1`` on stream ``stream0 + i`` and writes
one row of an output matrix per path; no path is ever stored.  Column layouts
are defined in :mod:`hitlab.paths.layout`.
"""

from __future__ import annotations

import math

import numba as nb
import numpy as np

from ..rng import new_state, next_normal, next_uniform_open
from . import layout as L

_SQRT_PI = math.sqrt(math.pi)
_SQRT_PI_2 = math.sqrt(0.5 * math.pi)
# bridge-crossing probabilities below exp(-_E_NEGLIGIBLE) are treated as zero
_E_NEGLIGIBLE = 37.0
# steps between refreshes of the relative step size
_BLOCK = 16
# exp(-2 d0 d1 / h) below e^-40 is dropped from the local-time increment
_LT_CUTOFF = 40.0

SCHEME_SINGLE = 0
SCHEME_TWO = 1
SCHEME_FIXED = 2
SCHEME_INVLT = 3

LT_CONDITIONAL = 0
LT_OCCUPATION = 1
LT_SAMPLED = 2


@nb.njit(inline="always", cache=True)
def _erfcx(z):
    # scaled complementary error function exp(z^2) erfc(z)
    if z < 25.0:
        return math.exp(z * z) * math.erfc(z)
    iz2 = 1.0 / (z * z)
    return (1.0 - 0.5 * iz2 * (1.0 - 1.5 * iz2 * (1.0 - 2.5 * iz2))) / (z * _SQRT_PI)


@nb.njit(inline="always", cache=True)
def bridge_local_time(d0, d1, h):
    """Expected local time at 0 of a Brownian bridge from ``d0`` to ``d1`` over ``h``."""
    prod = d0 * d1
    if prod > 0.0:
        e = 2.0 * prod / h
        if e > _LT_CUTOFF:
            return 0.0
        damp = math.exp(-e)
    else:
        damp = 1.0
    return _SQRT_PI_2 * math.sqrt(h) * _erfcx((abs(d0) + abs(d1)) / math.sqrt(2.0 * h)) * damp


@nb.njit(inline="always", cache=True)
def sample_bridge_local_time(st, d0, d1, h):
    """Draw the local time at 0 of a Brownian bridge from ``d0`` to ``d1`` over ``h``.

    ``P(L > l) = exp(-((|d0| + |d1| + l)^2 - (d1 - d0)^2) / (2h))`` for
    ``l >= 0``; the atom at 0 is the event that the bridge never touches 0.
    """
    prod = d0 * d1
    if prod > 0.0 and 2.0 * prod / h > _LT_CUTOFF:
        return 0.0
    u = next_uniform_open(st)
    if prod > 0.0 and u >= math.exp(-2.0 * prod / h):
        return 0.0
    d = d1 - d0
    return math.sqrt(d * d - 2.0 * h * math.log(u)) - abs(d0) - abs(d1)


@nb.njit(inline="always", cache=True)
def _power(x, m, code):
    # x >= 0; 0^0 := 0 so the zero set is never counted
    if x <= 0.0:
        return 0.0
    if code == 0:
        return 1.0
    if code == 1:
        return x
    if code == 2:
        return x * x
    if code == 3:
        return x * x * x
    if code == 4:
        x2 = x * x
        return x2 * x2
    if code == 5:
        return math.sqrt(x)
    return x ** m


def power_codes(orders):
    table = {0.0: 0, 1.0: 1, 2.0: 2, 3.0: 3, 4.0: 4, 0.5: 5}
    return np.array([table.get(float(m), 6) for m in orders], dtype=np.int64)


@nb.njit(inline="always", cache=True)
def _bridge_point(st, x0, x1, frac, h):
    return x0 + frac * (x1 - x0) + math.sqrt(max(frac * (1.0 - frac), 0.0) * h) * next_normal(st)


@nb.njit(cache=True)
def bridge_point_inside(st, x0, x1, frac, h, upper, lower):
    """Bridge value at ``frac`` of a step, conditioned to stay inside ``(lower, upper)``.

    Rejection from the free bridge point, accepting with the probability that
    neither sub-bridge touches a barrier (each barrier treated on its own).
    """
    h1 = frac * h
    h2 = h - h1
    y = x0
    for _ in range(1000):
        y = _bridge_point(st, x0, x1, frac, h)
        if y >= upper or y <= lower:
            continue
        acc = 1.0
        if h1 > 0.0:
            acc *= -math.expm1(-2.0 * (upper - x0) * (upper - y) / h1)
            acc *= -math.expm1(-2.0 * (x0 - lower) * (y - lower) / h1)
        if h2 > 0.0:
            acc *= -math.expm1(-2.0 * (upper - y) * (upper - x1) / h2)
            acc *= -math.expm1(-2.0 * (y - lower) * (x1 - lower) / h2)
        if next_uniform_open(st) < acc:
            return y
    return y


@nb.njit(inline="always", cache=True)
def _bridge_max(st, x0, x1, h):
    # exact law of the maximum of a Brownian bridge
    d = x1 - x0
    return 0.5 * (x0 + x1 + math.sqrt(d * d - 2.0 * h * math.log(next_uniform_open(st))))


@nb.njit(nogil=True, cache=True)
def brownian_batch(scheme, upper, lower, horizon, ell, step, t_ref, max_time,
                   bridge_correction, exact_extrema, orders, codes, levels,
                   lt_method, lt_exponent, seed, stream0, out):
    """Simulate ``out.shape[0]`` Brownian paths started at 0.

    ``scheme`` selects the stopping rule: first hit of ``upper``; exit of
    ``(-lower, upper)``; the fixed time ``horizon``; or the inverse local time
    at 0 of level ``ell``.  The time step at elapsed time ``t`` is
    ``step * max(t, t_ref)`` (``step * horizon`` for the fixed horizon).
    """
    n = out.shape[0]
    n_ord = orders.size
    n_lev = levels.size
    off_pos = L.N_BASE
    off_neg = off_pos + n_ord
    off_lt = off_neg + n_ord
    pos_prev = np.empty(n_ord)
    neg_prev = np.empty(n_ord)
    for i in range(n):
        st = new_state(seed, stream0 + np.uint64(i))
        row = out[i]
        row[:] = 0.0
        t = 0.0
        x0 = 0.0
        sup = 0.0
        inf = 0.0
        held = 0.0
        lt0 = 0.0
        lt0_int = 0.0
        status = 0.0
        exit_side = 0.0
        nsteps = 0
        # first uniform-time record falls inside the first step
        next_rec = -1.0
        for k in range(n_ord):
            pos_prev[k] = 0.0
            neg_prev[k] = 0.0
        h_block = 0.0
        sqrt_h_block = 0.0
        block_left = 0
        while True:
            # the step is refreshed every _BLOCK steps (relative to elapsed time)
            if block_left == 0:
                if scheme == SCHEME_FIXED:
                    h_block = step * horizon
                else:
                    h_block = step * max(t, t_ref)
                sqrt_h_block = math.sqrt(h_block)
                block_left = _BLOCK
            block_left -= 1
            h = h_block
            if scheme == SCHEME_FIXED and t + h > horizon:
                h = horizon - t
                x1 = x0 + math.sqrt(h) * next_normal(st)
            else:
                x1 = x0 + sqrt_h_block * next_normal(st)
            nsteps += 1
            t1 = t + h
            stop = False
            # barrier logic: the step may end early at the barrier
            if scheme == SCHEME_SINGLE or scheme == SCHEME_TWO:
                if x1 >= upper:
                    frac = (upper - x0) / (x1 - x0)
                    x1 = upper
                    exit_side = 1.0
                    stop = True
                elif scheme == SCHEME_TWO and x1 <= -lower:
                    frac = (x0 + lower) / (x0 - x1)
                    x1 = -lower
                    exit_side = -1.0
                    stop = True
                elif bridge_correction:
                    e_up = 2.0 * (upper - x0) * (upper - x1) / h
                    p_up = math.exp(-e_up) if e_up < _E_NEGLIGIBLE else 0.0
                    p_dn = 0.0
                    if scheme == SCHEME_TWO:
                        e_dn = 2.0 * (x0 + lower) * (x1 + lower) / h
                        p_dn = math.exp(-e_dn) if e_dn < _E_NEGLIGIBLE else 0.0
                    if p_up + p_dn > 0.0:
                        u = next_uniform_open(st)
                        if u < p_up:
                            x1 = upper
                            exit_side = 1.0
                            stop = True
                            frac = 0.5
                        elif u < p_up + p_dn:
                            x1 = -lower
                            exit_side = -1.0
                            stop = True
                            frac = 0.5
                if stop:
                    h = h * frac
                    t1 = t + h
            elif scheme == SCHEME_FIXED:
                if t1 >= horizon * (1.0 - 1e-15):
                    t1 = horizon
                    stop = True
            # local times
            for j in range(n_lev):
                lev = levels[j]
                if lt_method == LT_CONDITIONAL:
                    row[off_lt + j] += bridge_local_time(x0 - lev, x1 - lev, h)
                elif lt_method == LT_SAMPLED:
                    row[off_lt + j] += sample_bridge_local_time(st, x0 - lev, x1 - lev, h)
                else:
                    eps = h ** lt_exponent if lt_exponent > 0.0 else -lt_exponent
                    w = 0.0
                    if abs(x0 - lev) <= eps:
                        w += 0.5
                    if abs(x1 - lev) <= eps:
                        w += 0.5
                    row[off_lt + j] += w * h / (2.0 * eps)
            if scheme == SCHEME_INVLT:
                if lt_method == LT_CONDITIONAL:
                    dl = bridge_local_time(x0, x1, h)
                elif lt_method == LT_SAMPLED:
                    dl = sample_bridge_local_time(st, x0, x1, h)
                else:
                    eps = h ** lt_exponent if lt_exponent > 0.0 else -lt_exponent
                    w = 0.0
                    if abs(x0) <= eps:
                        w += 0.5
                    if abs(x1) <= eps:
                        w += 0.5
                    dl = w * h / (2.0 * eps)
                if lt0 + dl >= ell and dl > 0.0:
                    # local time only grows on the zero set, so B = 0 at the stop
                    frac = (ell - lt0) / dl
                    x1 = 0.0
                    h = h * frac
                    t1 = t + h
                    lt0_int += 0.5 * h * (lt0 + ell)
                    lt0 = ell
                    stop = True
                else:
                    lt0_int += 0.5 * h * (2.0 * lt0 + dl)
                    lt0 += dl
            # signed power integrals, trapezoid rule
            xp = x1 if x1 > 0.0 else 0.0
            xn = -x1 if x1 < 0.0 else 0.0
            for k in range(n_ord):
                pv = _power(xp, orders[k], codes[k])
                nv = _power(xn, orders[k], codes[k])
                # an exact zero on the grid takes the sign of its step neighbour
                if codes[k] == 0 and x0 == 0.0:
                    pos_prev[k] = pv
                    neg_prev[k] = nv
                elif codes[k] == 0 and x1 == 0.0:
                    pv = pos_prev[k]
                    nv = neg_prev[k]
                row[off_pos + k] += 0.5 * h * (pos_prev[k] + pv)
                row[off_neg + k] += 0.5 * h * (neg_prev[k] + nv)
                pos_prev[k] = pv
                neg_prev[k] = nv
            # extrema
            if exact_extrema and not stop:
                hi = sup if sup > x1 else x1
                if 2.0 * (hi - x0) * (hi - x1) / h < _E_NEGLIGIBLE:
                    m = _bridge_max(st, x0, x1, h)
                    if m > sup:
                        sup = m
                lo = inf if inf < x1 else x1
                if 2.0 * (x0 - lo) * (x1 - lo) / h < _E_NEGLIGIBLE:
                    m = -_bridge_max(st, -x0, -x1, h)
                    if m < inf:
                        inf = m
            if x1 > sup:
                sup = x1
            if x1 < inf:
                inf = x1
            # uniform-time sample: records of a scale-invariant Poisson process
            if next_rec < 0.0:
                next_rec = t1 * next_uniform_open(st)
            if next_rec <= t1:
                last = next_rec
                while next_rec <= t1:
                    last = next_rec
                    next_rec = next_rec / next_uniform_open(st)
                if bridge_correction and not stop and (scheme == SCHEME_SINGLE or scheme == SCHEME_TWO):
                    held = bridge_point_inside(st, x0, x1, (last - t) / h, h, upper,
                                               -lower if scheme == SCHEME_TWO else -math.inf)
                else:
                    held = _bridge_point(st, x0, x1, (last - t) / h, h)
            t = t1
            x0 = x1
            if stop:
                break
            if t >= max_time:
                status = 1.0
                break
        row[L.HIT_TIME] = t
        row[L.TERMINAL] = x0
        row[L.SUP] = sup
        row[L.INF] = inf
        row[L.SUP_ABS] = sup if sup > -inf else -inf
        row[L.UNIFORM] = held
        row[L.STATUS] = status
        row[L.N_STEPS] = nsteps
        row[L.LT0] = lt0
        row[L.LT0_INTEGRAL] = lt0_int
        row[L.EXIT_SIDE] = exit_side
