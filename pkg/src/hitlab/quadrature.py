"""Adaptive Gauss-Kronrod quadrature and the two-barrier integrals.

The integrator is a globally adaptive G7/K15 scheme: the interval with the
largest error estimate is bisected until the summed estimate meets
``max(abs_tol, rel_tol * |value|)``.  Semi-infinite domains are mapped onto
``(0, 1]`` first.

The second half of the module evaluates ``psi(a, b, theta)``, the expectation
of ``T^{-theta} * int_0^T B_s ds`` for ``T`` the exit time of ``(-b, a)``, in
both of its integral representations.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "QuadratureSpec",
    "QuadratureError",
    "TwoBarrier",
    "integrate",
    "quad",
    "phi_delta",
    "e_delta",
    "psi",
    "psi_first",
    "psi_second",
    "psi_three_half",
    "E_DELTA_SERIES_THRESHOLD",
]

# Kronrod 15-point nodes (positive half, descending) and weights; the Gauss
# 7-point rule uses every other node.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KWEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss weights laid on the 15-node layout (zero on Kronrod-only nodes).
_GWEIGHTS = np.zeros(15)
_GWEIGHTS[[1, 3, 5, 7, 9, 11, 13]] = [_WG[0], _WG[1], _WG[2], _WG[3], _WG[2], _WG[1], _WG[0]]


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and domain mapping for :func:`integrate`.

    ``tail_transform`` selects the map used for ``[lo, inf)``:
    ``"algebraic"`` uses ``x = lo + (1 - t) / t`` and ``"exp"`` uses
    ``x = lo - log(t)``.
    """

    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    max_subdivisions: int = 2000
    tail_transform: str = "algebraic"

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions <= 0:
            raise ValueError("max_subdivisions must be positive")
        if self.tail_transform not in ("algebraic", "exp"):
            raise ValueError(f"unknown tail_transform {self.tail_transform!r}")


DEFAULT_SPEC = QuadratureSpec()


class QuadratureError(ArithmeticError):
    """Raised when the adaptive scheme exhausts its subdivision budget."""

    def __init__(self, message: str, value: float, error: float):
        super().__init__(f"{message} (best value {value!r}, error bound {error:.3e})")
        self.value = value
        self.error = error


def _gk15(f, lo: float, hi: float, vectorized: bool):
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = center + half * _NODES
    if vectorized:
        fx = np.asarray(f(x), dtype=float)
    else:
        fx = np.array([f(xi) for xi in x], dtype=float)
    if not np.all(np.isfinite(fx)):
        raise QuadratureError(f"non-finite integrand on [{lo}, {hi}]", math.nan, math.inf)
    kron = half * float(np.dot(_KWEIGHTS, fx))
    gauss = half * float(np.dot(_GWEIGHTS, fx))
    return kron, abs(kron - gauss)


def _map_semi_infinite(f, lo: float, transform: str, vectorized: bool):
    if transform == "algebraic":
        def g(t):
            t = np.asarray(t, dtype=float)
            x = lo + (1.0 - t) / t
            return _call(f, x, vectorized) / (t * t)
    else:
        def g(t):
            t = np.asarray(t, dtype=float)
            x = lo - np.log(t)
            return _call(f, x, vectorized) / t
    return g


def _call(f, x, vectorized):
    if vectorized:
        return np.asarray(f(x), dtype=float)
    return np.array([f(xi) for xi in np.atleast_1d(x)], dtype=float)


def integrate(
    f: Callable,
    lo: float,
    hi: float = math.inf,
    spec: QuadratureSpec = DEFAULT_SPEC,
    *,
    vectorized: bool = True,
    points: tuple[float, ...] = (),
) -> tuple[float, float]:
    """Integrate ``f`` over ``[lo, hi]`` (``hi`` may be ``inf``).

    Parameters
    ----------
    f : callable
        Integrand.  With ``vectorized=True`` it receives a numpy array of
        nodes and must return an array of the same shape; otherwise it is
        called once per node.  Integrands must be re-entrant.
    lo, hi : float
        Domain bounds; ``hi=inf`` selects the configured tail transform.
    spec : QuadratureSpec
        Tolerances and subdivision budget.
    points : tuple of float
        Interior break points, used as initial subdivision.

    Returns
    -------
    value, err_estimate : float
        Integral estimate and its absolute error estimate.

    Raises
    ------
    QuadratureError
        If the tolerance is not reached within ``spec.max_subdivisions``.
    """
    if math.isinf(lo):
        raise ValueError("lower bound must be finite; reflect the integrand instead")
    if hi < lo:
        value, err = integrate(f, hi, lo, spec, vectorized=vectorized, points=points)
        return -value, err
    if math.isinf(hi):
        g = _map_semi_infinite(f, lo, spec.tail_transform, vectorized)
        if spec.tail_transform == "algebraic":
            mapped = sorted(1.0 / (1.0 + (p - lo)) for p in points if p > lo)
        else:
            mapped = sorted(math.exp(-(p - lo)) for p in points if p > lo)
        return _adaptive(g, 0.0, 1.0, spec, True, tuple(mapped))
    inner = tuple(sorted(p for p in points if lo < p < hi))
    return _adaptive(f, lo, hi, spec, vectorized, inner)


def _adaptive(f, lo, hi, spec, vectorized, points):
    edges = (lo,) + points + (hi,)
    heap = []
    total = 0.0
    total_err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, err = _gk15(f, a, b, vectorized)
        total += val
        total_err += err
        # tie-break on the interval start keeps the pop order deterministic
        heapq.heappush(heap, (-err, a, b, val))
    n_sub = len(heap)
    while total_err > max(spec.abs_tol, spec.rel_tol * abs(total)):
        if n_sub >= spec.max_subdivisions:
            raise QuadratureError("subdivision budget exhausted", total, total_err)
        neg_err, a, b, val = heapq.heappop(heap)
        mid = 0.5 * (a + b)
        if not (a < mid < b):
            # interval collapsed to machine resolution; accept what we have
            heapq.heappush(heap, (neg_err, a, b, val))
            break
        v1, e1 = _gk15(f, a, mid, vectorized)
        v2, e2 = _gk15(f, mid, b, vectorized)
        total += v1 + v2 - val
        total_err += e1 + e2 + neg_err
        heapq.heappush(heap, (-e1, a, mid, v1))
        heapq.heappush(heap, (-e2, mid, b, v2))
        n_sub += 1
    # re-sum to shed the drift of incremental updates
    total = math.fsum(item[3] for item in heap)
    total_err = math.fsum(-item[0] for item in heap)
    return total, total_err


def quad(f, lo, hi=math.inf, spec: QuadratureSpec = DEFAULT_SPEC, **kwargs) -> float:
    """Value-only shorthand for :func:`integrate`."""
    return integrate(f, lo, hi, spec, **kwargs)[0]


# ---------------------------------------------------------------------------
# two-barrier integrals
# ---------------------------------------------------------------------------

#: below this value of delta*(a+b) the exact E_delta formula is replaced by
#: its Taylor expansion
E_DELTA_SERIES_THRESHOLD = 1e-2


@dataclass(frozen=True)
class TwoBarrier:
    """Barrier pair ``(a, b)`` for the exit time of ``(-b, a)``, with exponent ``theta``."""

    a: float
    b: float
    theta: float = 1.5

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and self.theta > 0):
            raise ValueError("a, b and theta must be positive")

    @property
    def lam(self) -> float:
        return self.b / self.a

    @property
    def p(self) -> float:
        return 2.0 * self.theta - 1.0


def phi_delta(a: float, b: float, p: float, delta: float) -> float:
    """``a*b + b^2 * (p - 1 - (p - 2) * cosh(delta * (a + b)))``."""
    return a * b + b * b * (p - 1.0 - (p - 2.0) * math.cosh(delta * (a + b)))


def _sinh_ratio(x: float, s: float) -> float:
    # sinh(x) / sinh(s) for 0 <= x <= s, s > 0, without overflow
    return math.exp(x - s) * math.expm1(-2.0 * x) / math.expm1(-2.0 * s)


def e_delta(delta: float, a: float, b: float) -> float:
    """Coefficient ``E_delta`` of the Feynman-Kac solution at the origin.

    Evaluated with the sinh ratios factored as ``exp(-delta*(s-x))`` times
    bounded terms, so it is finite for every ``delta``.  Below
    ``delta*(a+b) = E_DELTA_SERIES_THRESHOLD`` the series
    ``ab(a-b)/3 - delta^2 ab(a-b)(13(a^2+b^2)/180 + 7ab/36)`` is used.
    """
    if a <= 0 or b <= 0 or delta < 0:
        raise ValueError("need a, b > 0 and delta >= 0")
    s = a + b
    if delta * s < E_DELTA_SERIES_THRESHOLD:
        return _e_delta_series(delta, a, b)
    return _e_delta_exact(delta, a, b)


def _e_delta_series(delta, a, b):
    c0 = a * b * (a - b) / 3.0
    c2 = -a * b * (a - b) * (13.0 * (a * a + b * b) / 180.0 + 7.0 * a * b / 36.0)
    return c0 + c2 * delta * delta


def _e_delta_exact(delta, a, b):
    s = a + b
    ra = _sinh_ratio(delta * a, delta * s)
    rb = _sinh_ratio(delta * b, delta * s)
    first = (b * ra - a * rb) / (2.0 * delta * delta)
    second = (a * a * rb - b * b * ra) * math.tanh(0.5 * delta * s) / (2.0 * delta)
    return first + second


def _cutoff(a: float, b: float, p: float, tol: float) -> float:
    # integrands decay like delta^(p+1) * exp(-delta * min(a, b)); pick the
    # cutoff where that envelope drops below tol / 10
    rate = min(a, b)
    d = (math.log(10.0 / tol) + 5.0) / rate
    for _ in range(60):
        env = (d ** (max(p, 0.0) + 2.0)) * (a + b) ** 3 * math.exp(-rate * d) / rate
        if env < tol / 10.0:
            break
        d *= 1.25
    return d


def _gauss_abs_moment_ext(p: float) -> float:
    # E|N|^p for p > -1 (the public closedform version requires p >= 0)
    return math.exp(0.5 * p * math.log(2.0) + math.lgamma(0.5 * (1.0 + p)) - 0.5 * math.log(math.pi))


def psi_first(tb: TwoBarrier, spec: QuadratureSpec = DEFAULT_SPEC) -> tuple[float, float]:
    """``sqrt(2/pi) / c_p * int_0^inf delta^p E_delta d delta`` with ``p = 2 theta - 1``."""
    a, b, p = tb.a, tb.b, tb.p
    if a == b:
        return 0.0, 0.0

    def integrand(d):
        out = np.empty_like(d)
        for i, di in enumerate(d):
            out[i] = di ** p * e_delta(di, a, b) if di > 0 else 0.0
        return out

    cut = _cutoff(a, b, p, spec.abs_tol)
    val, err = integrate(integrand, 0.0, cut, spec, points=(1.0 / (a + b),))
    pref = math.sqrt(2.0 / math.pi) / _gauss_abs_moment_ext(p)
    return pref * val, pref * err


def _second_integrand_value(d, a, b, p):
    s = a + b
    x = d * s
    # sinh(d*a) * phi_delta(a,b,p) / sinh(d*s)^2 written as
    # r_a * [(ab + b^2 (p-1)) / sinh(x) - b^2 (p-2) coth(x)]
    inv_sh = 2.0 * math.exp(-x) / -math.expm1(-2.0 * x)
    coth = 1.0 / math.tanh(x)
    ra = _sinh_ratio(d * a, x)
    rb = _sinh_ratio(d * b, x)
    ta = ra * ((a * b + b * b * (p - 1.0)) * inv_sh - b * b * (p - 2.0) * coth)
    tb_ = rb * ((a * b + a * a * (p - 1.0)) * inv_sh - a * a * (p - 2.0) * coth)
    return d ** (p - 1.0) * (ta - tb_) / (2.0 * (p - 1.0))


def psi_second(tb: TwoBarrier, spec: QuadratureSpec = DEFAULT_SPEC) -> tuple[float, float]:
    """Integration-by-parts representation, defined for ``theta != 1``."""
    a, b, p = tb.a, tb.b, tb.p
    if tb.theta == 1.0:
        raise ValueError("second representation is undefined at theta = 1")
    if a == b:
        return 0.0, 0.0
    s = a + b
    small = 1e-3 / s

    def integrand(d):
        out = np.empty_like(d)
        for i, di in enumerate(d):
            if di <= 0:
                out[i] = 0.0
            elif di < small:
                out[i] = di ** p * _second_leading(di, a, b, p)
            else:
                out[i] = _second_integrand_value(di, a, b, p)
        return out

    cut = _cutoff(a, b, p, spec.abs_tol)
    val, err = integrate(integrand, 0.0, cut, spec, points=(1.0 / s,))
    pref = math.sqrt(2.0 / math.pi) / _gauss_abs_moment_ext(p)
    return pref * val, pref * err


def _second_leading(d, a, b, p):
    # the bracket is d^3 ab(a-b)(a+b)^2 (3p-5)/6 + O(d^5); dividing by
    # 2(p-1) sinh(d(a+b))^2 leaves d^p ab(a-b)(3p-5) / (12(p-1))
    return a * b * (a - b) * (3.0 * p - 5.0) / (12.0 * (p - 1.0))


def psi(tb: TwoBarrier, spec: QuadratureSpec = DEFAULT_SPEC, *, check_tol: float = 1e-6) -> float:
    """``E[T^{-theta} int_0^T B_s ds]`` for the exit time of ``(-b, a)``.

    Returns the first representation.  For ``theta != 1`` the second one is
    evaluated too and must agree within ``check_tol`` (absolute, or relative
    to the magnitude when that is larger).
    """
    v1, e1 = psi_first(tb, spec)
    if tb.theta != 1.0:
        v2, e2 = psi_second(tb, spec)
        if abs(v1 - v2) > max(check_tol, check_tol * abs(v1)) + e1 + e2:
            raise ArithmeticError(
                f"psi representations disagree for {tb}: {v1!r} vs {v2!r}"
            )
    return v1


def psi_three_half(a: float, b: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``E[A^{(1)}_{a,b}]`` in the scale-free form depending on ``lambda = b/a`` only."""
    if a <= 0 or b <= 0:
        raise ValueError("barriers must be positive")
    lam = b / a
    if lam == 1.0:
        return 0.0
    s = 1.0 + lam

    def integrand(d):
        out = np.empty_like(d)
        for i, x in enumerate(d):
            if x <= 0:
                out[i] = 0.0
                continue
            # delta * (lam sinh(delta) - sinh(delta lam)) / sinh(delta s)^2
            inv_sh = 2.0 * math.exp(-x * s) / -math.expm1(-2.0 * x * s)
            r1 = _sinh_ratio(x, x * s)
            rl = _sinh_ratio(x * lam, x * s)
            if x * s < 1e-3:
                # cancellation regime: lam sh(x) - sh(lam x) = lam (1 - lam^2) x^3 / 6 + O(x^5)
                num = lam * (1.0 - lam * lam) * x ** 3 / 6.0 * (1.0 + x * x * (1.0 + lam * lam) / 20.0)
                out[i] = x * num * inv_sh * inv_sh
            else:
                out[i] = x * (lam * r1 - rl) * inv_sh
        return out

    cut = _cutoff(1.0, lam, 2.0, spec.abs_tol)
    val, _ = integrate(integrand, 0.0, cut, spec, points=(1.0 / s,))
    return s * val / math.sqrt(2.0 * math.pi)
