"""Kernels for processes derived from Brownian motion on ``[0, 1]``.

* Bessel-3 family: the norm of a 3-d Brownian bridge from 0 to ``r e_1``.
  With ``r`` drawn from the chi(3) law this is the Bessel-3 process itself;
  other endpoint laws give the meander (Rayleigh), pinned Bessel bridges, the
  excursion (``r = 0``) and size-biased variants used for importance weights.
* Brownian bridge with its local time at 0.
* Meander from the last zero of a Brownian path before time 1.
* Excursion by the Vervaat transform of a stored bridge.
* The Ray-Knight square-root diffusion.
"""

from __future__ import annotations

import math

import numba as nb
import numpy as np

from ..rng import new_state, next_normal, next_uniform_open
from .kernels import bridge_local_time, sample_bridge_local_time

# endpoint laws for the Bessel-3 family
END_CHI3 = 0
END_RAYLEIGH = 1
END_HALF_NORMAL = 2
END_FIXED = 3

# output columns of bes3_batch
B3_END = 0
B3_INTEGRAL = 1
B3_SUP = 2
B3_UNIFORM = 3
B3_INV_INTEGRAL = 4
B3_NCOLS = 5

_E_NEGLIGIBLE = 37.0
_SQRT2 = math.sqrt(2.0)
_SQRT_2_PI = math.sqrt(2.0 / math.pi)


@nb.njit(inline="always", cache=True)
def _draw_endpoint(st, mode, value):
    if mode == END_CHI3:
        a = next_normal(st)
        b = next_normal(st)
        c = next_normal(st)
        return math.sqrt(a * a + b * b + c * c)
    if mode == END_RAYLEIGH:
        return math.sqrt(-2.0 * math.log(next_uniform_open(st)))
    if mode == END_HALF_NORMAL:
        return abs(next_normal(st))
    return value


@nb.njit(inline="always", cache=True)
def _max_given_ends(st, x0, x1, h):
    d = x1 - x0
    return 0.5 * (x0 + x1 + math.sqrt(d * d - 2.0 * h * math.log(next_uniform_open(st))))


@nb.njit(cache=True)
def _norm_cell(px, py, pz, qx, qy, qz, h, nodes, weights, singular):
    # grid-conditional E int_cell |X| and E int_cell 1/|X| for a 3-d Brownian
    # bridge between grid points p and q; X_v ~ N(m_v, v(1-v)h I) and
    #   E |X_v|   = s sqrt(2/pi) exp(-|m|^2/2s^2) + (|m| + s^2/|m|) erf(|m|/(s sqrt 2))
    #   E 1/|X_v| = erf(|m|/(s sqrt 2)) / |m|
    tot_norm = 0.0
    tot_inv = 0.0
    for k in range(nodes.size):
        w = weights[k]
        if singular == 1:
            # v = u^2 near v = 0
            u = nodes[k]
            v = u * u
            w = w * 2.0 * u
        elif singular == 2:
            u = nodes[k]
            v = 1.0 - u * u
            w = w * 2.0 * u
        else:
            v = nodes[k]
        mx = px + v * (qx - px)
        my = py + v * (qy - py)
        mz = pz + v * (qz - pz)
        m = math.sqrt(mx * mx + my * my + mz * mz)
        s = math.sqrt(v * (1.0 - v) * h)
        if s <= 0.0:
            e_norm = m
            e_inv = 1.0 / m
        elif m < 1e-300:
            e_norm = 2.0 * _SQRT_2_PI * s
            e_inv = _SQRT_2_PI / s
        else:
            r = m / s
            er = math.erf(r / _SQRT2)
            e_inv = er / m
            e_norm = s * _SQRT_2_PI * math.exp(-0.5 * r * r) + (m + s * s / m) * er
        tot_norm += w * e_norm
        tot_inv += w * e_inv
    return tot_norm * h, tot_inv * h


@nb.njit(nogil=True, cache=True)
def bes3_batch(mode, value, n_steps, exact_extrema, inv_nodes, inv_weights,
               seed, stream0, out):
    """Norm of a 3-d Brownian bridge from 0 to ``r e_1`` on a uniform grid.

    Columns: endpoint ``r``, integral of the norm, supremum, value at an
    independent uniform time, and ``int 1/|X|``.  When ``inv_nodes`` is
    non-empty both integrals are grid-conditional expectations computed cell
    by cell; otherwise the norm integral is the trapezoid rule and the inverse
    column is 0.
    """
    n = out.shape[0]
    h = 1.0 / n_steps
    want_inv = inv_nodes.size > 0
    for i in range(n):
        st = new_state(seed, stream0 + np.uint64(i))
        r = _draw_endpoint(st, mode, value)
        u_time = next_uniform_open(st)
        x = 0.0
        y = 0.0
        z = 0.0
        norm0 = 0.0
        integral = 0.0
        inv_int = 0.0
        sup = 0.0
        held = 0.0
        for k in range(n_steps):
            t = k * h
            rem = 1.0 - t
            if k == n_steps - 1:
                nx, ny, nz = r, 0.0, 0.0
            else:
                drift = h / rem
                sd = math.sqrt(h * (rem - h) / rem)
                nx = x + (r - x) * drift + sd * next_normal(st)
                ny = y - y * drift + sd * next_normal(st)
                nz = z - z * drift + sd * next_normal(st)
            norm1 = math.sqrt(nx * nx + ny * ny + nz * nz)
            if want_inv:
                sing = 0
                if k == 0 and norm0 == 0.0:
                    sing = 1
                elif k == n_steps - 1 and norm1 == 0.0:
                    sing = 2
                c_norm, c_inv = _norm_cell(x, y, z, nx, ny, nz, h, inv_nodes, inv_weights, sing)
                integral += c_norm
                inv_int += c_inv
            else:
                integral += 0.5 * h * (norm0 + norm1)
            if exact_extrema:
                hi = sup if sup > norm1 else norm1
                if 2.0 * (hi - norm0) * (hi - norm1) / h < _E_NEGLIGIBLE:
                    m = _max_given_ends(st, norm0, norm1, h)
                    if m > sup:
                        sup = m
            if norm1 > sup:
                sup = norm1
            t1 = t + h
            if t < u_time <= t1:
                frac = (u_time - t) / h
                sdb = math.sqrt(frac * (1.0 - frac) * h)
                ux = x + frac * (nx - x) + sdb * next_normal(st)
                uy = y + frac * (ny - y) + sdb * next_normal(st)
                uz = z + frac * (nz - z) + sdb * next_normal(st)
                held = math.sqrt(ux * ux + uy * uy + uz * uz)
            x, y, z = nx, ny, nz
            norm0 = norm1
        row = out[i]
        row[B3_END] = r
        row[B3_INTEGRAL] = integral
        row[B3_SUP] = sup
        row[B3_UNIFORM] = held
        row[B3_INV_INTEGRAL] = inv_int


# output columns of bridge_batch
BR_ABS_INTEGRAL = 0
BR_LOCAL_TIME = 1
BR_LOCAL_TIME_INTEGRAL = 2
BR_SUP = 3
BR_TERMINAL = 4
BR_NCOLS = 5


@nb.njit(nogil=True, cache=True)
def bridge_batch(n_steps, sampled, seed, stream0, out):
    """Brownian bridge on ``[0, 1]`` with its local time at 0.

    With ``sampled`` each step draws its local-time increment from the exact
    conditional law given the grid values, so ``l_1`` has the right joint law
    with the grid path; otherwise the conditional mean is used (unbiased for
    linear functionals, lower variance).  ``int_0^1 l_u du`` is the trapezoid
    of the running value.
    """
    n = out.shape[0]
    h = 1.0 / n_steps
    for i in range(n):
        st = new_state(seed, stream0 + np.uint64(i))
        x0 = 0.0
        abs_int = 0.0
        lt = 0.0
        lt_int = 0.0
        sup = 0.0
        for k in range(n_steps):
            rem = 1.0 - k * h
            if k == n_steps - 1:
                x1 = 0.0
            else:
                x1 = x0 - x0 * h / rem + math.sqrt(h * (rem - h) / rem) * next_normal(st)
            if x0 * x1 < 0.0:
                # trapezoid of |b| on a sign change: integrate each linear piece
                tot = abs(x0) + abs(x1)
                abs_int += 0.5 * h * (x0 * x0 + x1 * x1) / tot
            else:
                abs_int += 0.5 * h * (abs(x0) + abs(x1))
            if sampled:
                dl = sample_bridge_local_time(st, x0, x1, h)
            else:
                dl = bridge_local_time(x0, x1, h)
            lt_int += h * (lt + 0.5 * dl)
            lt += dl
            if abs(x1) > sup:
                sup = abs(x1)
            x0 = x1
        row = out[i]
        row[BR_ABS_INTEGRAL] = abs_int
        row[BR_LOCAL_TIME] = lt
        row[BR_LOCAL_TIME_INTEGRAL] = lt_int
        row[BR_SUP] = sup
        row[BR_TERMINAL] = x0


# output columns of meander_last_zero_batch
ME_END = 0
ME_INTEGRAL = 1
ME_UNIFORM = 2
ME_LAST_ZERO = 3
ME_NCOLS = 4


@nb.njit(nogil=True, cache=True)
def meander_last_zero_batch(n_steps, seed, stream0, out):
    """Meander from the segment of a Brownian path after its last zero before 1.

    A zero is detected when consecutive grid values change sign, or when the
    bridge between two same-sign values touches 0 (probability
    ``exp(-2 x0 x1 / h)``).  A sign change is located by one bridge
    bisection followed by linear interpolation inside the chosen half; a touch
    is placed at the step midpoint.  Output is rescaled by ``1 - g``.
    """
    n = out.shape[0]
    h = 1.0 / n_steps
    sh = math.sqrt(h)
    for i in range(n):
        st = new_state(seed, stream0 + np.uint64(i))
        x0 = 0.0
        g = 0.0
        seg_int = 0.0
        held = 0.0
        next_rec = -1.0
        for k in range(n_steps):
            t0 = k * h
            t1 = t0 + h
            x1 = x0 + sh * next_normal(st)
            zero_at = -1.0
            if x0 == 0.0 and k == 0:
                zero_at = 0.0
            elif x0 * x1 < 0.0:
                xm = 0.5 * (x0 + x1) + 0.5 * sh * next_normal(st)
                if xm * x1 < 0.0:
                    # last zero lies in the second half
                    zero_at = t0 + 0.5 * h + 0.5 * h * xm / (xm - x1)
                else:
                    zero_at = t0 + 0.5 * h * x0 / (x0 - xm)
            else:
                e = 2.0 * x0 * x1 / h
                if e < _E_NEGLIGIBLE and next_uniform_open(st) < math.exp(-e):
                    zero_at = t0 + 0.5 * h
            if zero_at >= 0.0:
                g = zero_at
                dt = t1 - g
                seg_int = 0.5 * dt * abs(x1)
                # restart the uniform-time records on [g, t1]
                next_rec = dt * next_uniform_open(st)
                last = next_rec
                while next_rec <= dt:
                    last = next_rec
                    next_rec = next_rec / next_uniform_open(st)
                frac = last / dt
                held = abs(frac * x1 + math.sqrt(frac * (1.0 - frac) * dt) * next_normal(st))
            else:
                seg_int += 0.5 * h * (abs(x0) + abs(x1))
                rel1 = t1 - g
                if next_rec <= rel1:
                    last = next_rec
                    while next_rec <= rel1:
                        last = next_rec
                        next_rec = next_rec / next_uniform_open(st)
                    frac = (last - (t0 - g)) / h
                    held = abs(x0 + frac * (x1 - x0) + math.sqrt(frac * (1.0 - frac) * h) * next_normal(st))
            x0 = x1
        span = 1.0 - g
        row = out[i]
        row[ME_END] = abs(x0) / math.sqrt(span)
        row[ME_INTEGRAL] = seg_int / span ** 1.5
        row[ME_UNIFORM] = held / math.sqrt(span)
        row[ME_LAST_ZERO] = g


# output columns of excursion_vervaat_batch
EX_INTEGRAL = 0
EX_INV_INTEGRAL = 1
EX_INV_INTEGRAL_COARSE = 2
EX_PRODUCT = 3
EX_PRODUCT_COARSE = 4
EX_PRODUCT_EXTRAPOLATED = 5
EX_NCOLS = 6


@nb.njit(cache=True)
def _vervaat_pair(path, stride):
    # integral of e and interior trapezoid of 1/e on the sub-grid of given stride
    m = (path.size - 1) // stride
    h = stride / (path.size - 1)
    jmin = 0
    vmin = path[0]
    for j in range(m):
        v = path[j * stride]
        if v < vmin:
            vmin = v
            jmin = j
    e_int = 0.0
    inv_int = 0.0
    for j in range(m):
        a = path[((jmin + j) % m) * stride] - vmin
        b = path[((jmin + j + 1) % m) * stride] - vmin
        e_int += 0.5 * h * (a + b)
        if 0 < j < m - 1:
            inv_int += 0.5 * h * (1.0 / a + 1.0 / b)
    return e_int, inv_int


@nb.njit(nogil=True, cache=True)
def excursion_vervaat_batch(n_steps, seed, stream0, out):
    """Brownian excursion as the Vervaat transform of a bridge.

    ``int 1/e`` uses the trapezoid rule on interior cells only (the two cells
    touching the endpoints are dropped).  The same bridge sub-sampled with
    stride 4 gives a coarse estimate; since the endpoint error scales as
    ``sqrt(h)``, ``2 Q_h - Q_4h`` cancels the leading term.
    """
    n = out.shape[0]
    h = 1.0 / n_steps
    path = np.empty(n_steps + 1)
    for i in range(n):
        st = new_state(seed, stream0 + np.uint64(i))
        path[0] = 0.0
        for k in range(n_steps):
            rem = 1.0 - k * h
            if k == n_steps - 1:
                path[k + 1] = 0.0
            else:
                x0 = path[k]
                path[k + 1] = x0 - x0 * h / rem + math.sqrt(h * (rem - h) / rem) * next_normal(st)
        e_f, inv_f = _vervaat_pair(path, 1)
        e_c, inv_c = _vervaat_pair(path, 4)
        row = out[i]
        row[EX_INTEGRAL] = e_f
        row[EX_INV_INTEGRAL] = inv_f
        row[EX_INV_INTEGRAL_COARSE] = inv_c
        row[EX_PRODUCT] = e_f * inv_f
        row[EX_PRODUCT_COARSE] = e_c * inv_c
        row[EX_PRODUCT_EXTRAPOLATED] = 2.0 * e_f * inv_f - e_c * inv_c


@nb.njit(nogil=True, cache=True)
def ray_knight_batch(mu, n_steps, b_max, grid, seed, stream0, out):
    """Full-truncation Euler for ``dX = 2 sqrt(X) dW + (2 - 2 mu X) db``, ``X_0 = 0``.

    ``out[i, j]`` holds ``max(X, 0)`` at ``grid[j]`` (grid points must be
    multiples of the step ``b_max / n_steps``).
    """
    n = out.shape[0]
    db = b_max / n_steps
    sdb = math.sqrt(db)
    idx = np.empty(grid.size, dtype=np.int64)
    for j in range(grid.size):
        idx[j] = int(round(grid[j] / db))
    for i in range(n):
        st = new_state(seed, stream0 + np.uint64(i))
        x = 0.0
        jn = 0
        for j in range(grid.size):
            if idx[j] == 0:
                out[i, j] = 0.0
                jn = j + 1
        for k in range(1, n_steps + 1):
            xp = x if x > 0.0 else 0.0
            x = x + (2.0 - 2.0 * mu * xp) * db + 2.0 * math.sqrt(xp) * sdb * next_normal(st)
            while jn < grid.size and idx[jn] == k:
                out[i, jn] = x if x > 0.0 else 0.0
                jn += 1
