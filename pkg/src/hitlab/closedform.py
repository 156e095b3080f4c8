"""Explicit formulas for Brownian motion sampled uniformly before ``T_1``.

Notation: ``T_1`` is the first hitting time of 1, ``alpha = B_{U T_1} / sqrt(T_1)``
with ``U`` uniform and independent, ``c_m = E|N|^m`` and
``phi(m) = int_0^2 y^(m+1) / (1+y) dy``.

Every function here is pure and thread-safe.  Anything that needs an integral
goes through :mod:`hitlab.quadrature`.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from .quadrature import QuadratureSpec, integrate

__all__ = [
    "LOG3",
    "SQRT_2_OVER_PI",
    "gauss_abs_moment",
    "phi",
    "phi_prime",
    "phi_second",
    "moment_i_plus",
    "moment_i_minus",
    "moment_i",
    "alpha_density",
    "alpha_cdf",
    "AlphaCDF",
    "alpha_density_conditional",
    "alpha_cdf_conditional",
    "hitting_time_density",
    "local_time_laplace",
    "i_mu_monomial",
    "max_conditional_crossing",
    "inverse_gaussian_integral",
    "lab_integral",
    "dilog",
    "delta_fn",
    "bessel_exp_moment",
    "ray_knight_mean",
    "meander_conditional_kernel",
]

LOG3 = math.log(3.0)
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)

_SPEC = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-13, max_subdivisions=4000)


def gauss_abs_moment(m: float) -> float:
    """``c_m = Gamma(1+m) / (2^(m/2) Gamma(1+m/2)) = E|N|^m`` for ``m >= 0``."""
    if not m >= 0:
        raise ValueError(f"order must be >= 0, got {m}")
    return math.exp(math.lgamma(1.0 + m) - 0.5 * m * math.log(2.0) - math.lgamma(1.0 + 0.5 * m))


def phi_with_error(m: float, derivative: int = 0) -> tuple[float, float]:
    """``phi^(k)(m)`` for ``k = derivative`` in ``{0, 1, 2}`` with the quadrature error estimate."""
    if derivative not in (0, 1, 2):
        raise ValueError("derivative must be 0, 1 or 2")
    return _phi_family(m, derivative)


def _phi_family(m: float, power: int) -> tuple[float, float]:
    if not m > -2:
        raise ValueError(f"phi is defined for m > -2, got {m}")

    def f(y):
        out = y ** (m + 1.0) / (1.0 + y)
        if power:
            out = out * np.log(y) ** power
        return out

    # split at y = 1 where log changes sign
    return integrate(f, 0.0, 2.0, _SPEC, points=(1.0,))


def phi(m: float) -> float:
    """``phi(m) = int_0^2 y^(m+1) / (1+y) dy`` for ``m > -2``."""
    return _phi_family(m, 0)[0]


def phi_prime(m: float) -> float:
    """First derivative of :func:`phi` (log-weighted integrand)."""
    return _phi_family(m, 1)[0]


def phi_second(m: float) -> float:
    """Second derivative of :func:`phi`."""
    return _phi_family(m, 2)[0]


def moment_i_plus(m: float) -> float:
    """``I_+^(m) = E[T^-(1+m/2) int (B^+)^m] = c_m phi(m) / 2^(m+1)``."""
    return gauss_abs_moment(m) * phi(m) / 2.0 ** (m + 1.0)


def moment_i_minus(m: float) -> float:
    """``I_-^(m) = c_m log(3) / 2^(m+1)``."""
    return gauss_abs_moment(m) * LOG3 / 2.0 ** (m + 1.0)


def moment_i(m: float) -> float:
    """``I^(m) = I_+^(m) - I_-^(m)``; vanishes exactly at ``m = 1``."""
    return gauss_abs_moment(m) * (phi(m) - LOG3) / 2.0 ** (m + 1.0)


# ---------------------------------------------------------------------------
# law of alpha
# ---------------------------------------------------------------------------

def alpha_density(y: float) -> float:
    """Density ``h(y)`` of ``alpha``.

    For ``y >= 0`` this is a mixture of half-Gaussian densities,
    ``sqrt(2/pi) int_0^2 exp(-2 y^2 / w^2) / (1+w) dw``; for ``y <= 0`` it is
    ``sqrt(2/pi) log(3) exp(-2 y^2)``.
    """
    if y <= 0:
        return SQRT_2_OVER_PI * LOG3 * math.exp(-2.0 * y * y)
    yy = 2.0 * y * y

    def f(w):
        with np.errstate(divide="ignore", over="ignore"):
            e = np.exp(-yy / (w * w))
        return np.where(w > 0, e, 0.0) / (1.0 + w)

    return SQRT_2_OVER_PI * integrate(f, 0.0, 2.0, _SPEC)[0]


def _alpha_cdf_scalar(y: float) -> float:
    # Fubini on the mixture: int_0^y h = 1/2 int_0^2 w erf(sqrt(2) y / w) / (1+w) dw
    if y <= 0:
        return 0.5 * LOG3 * math.erfc(-math.sqrt(2.0) * y)
    r2y = math.sqrt(2.0) * y

    def f(w):
        with np.errstate(divide="ignore"):
            e = special.erf(r2y / w)
        return np.where(w > 0, w * e, 0.0) / (1.0 + w)

    return 0.5 * LOG3 + 0.5 * integrate(f, 0.0, 2.0, _SPEC)[0]


class AlphaCDF:
    """Vectorised CDF of ``alpha`` for goodness-of-fit tests.

    The positive branch is tabulated once on ``[0, y_max]`` with the adaptive
    scalar CDF and interpolated by a cubic spline; the negative branch is
    exact.  Interpolation error is below ``1e-9``.
    """

    def __init__(self, y_max: float = 8.0, n_nodes: int = 1601):
        from scipy.interpolate import CubicSpline

        self.y_max = y_max
        nodes = np.linspace(0.0, y_max, n_nodes)
        values = np.array([_alpha_cdf_scalar(float(v)) for v in nodes])
        self._spline = CubicSpline(nodes, values)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        out = np.empty_like(y)
        neg = y <= 0
        out[neg] = 0.5 * LOG3 * special.erfc(-math.sqrt(2.0) * y[neg])
        mid = (~neg) & (y < self.y_max)
        out[mid] = self._spline(y[mid])
        out[y >= self.y_max] = 1.0
        return out


def alpha_cdf(y: float) -> float:
    """``P(alpha <= y)`` by one-dimensional quadrature."""
    return _alpha_cdf_scalar(float(y))


def hitting_time_density(t: float) -> float:
    """Density of ``T_1``: ``(2 pi t^3)^(-1/2) exp(-1/(2t))``."""
    if t <= 0:
        return 0.0
    return math.exp(-0.5 / t - 0.5 * math.log(2.0 * math.pi * t ** 3))


def _log_diff_exp(a: float, b: float) -> float:
    # log(e^a - e^b) for a >= b
    if b == -math.inf:
        return a
    return a + math.log(-math.expm1(b - a))


def alpha_density_conditional(y: float, t: float) -> float:
    """Density ``h(y, t)`` of ``alpha`` given ``T_1 = t``.

    For ``0 <= y sqrt(t) <= 1``::

        sqrt(t) [1 - exp((1 - (3 - 2 y sqrt t)^2) / (2t))]

    and for ``y = -x <= 0``::

        sqrt(t) [exp((1 - (1 + 2x sqrt t)^2)/(2t)) - exp((1 - (3 + 2x sqrt t)^2)/(2t))]

    The second exponent is ``(3 + 2x sqrt t)``, the form obtained by Laplace
    inversion of :func:`local_time_laplace` at level ``-x sqrt t``.  The
    density vanishes for ``y sqrt t > 1``.  Evaluated in log space.
    """
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    st = math.sqrt(t)
    u = y * st
    if u > 1.0:
        return 0.0
    inv2t = 0.5 / t
    if u >= 0:
        a = 0.0
        b = (1.0 - (3.0 - 2.0 * u) ** 2) * inv2t
    else:
        x = -u
        a = (1.0 - (1.0 + 2.0 * x) ** 2) * inv2t
        b = (1.0 - (3.0 + 2.0 * x) ** 2) * inv2t
    if a == b:
        return 0.0
    return st * math.exp(_log_diff_exp(a, b))


def _scaled_tail(z: float, log_scale: float) -> float:
    # exp(log_scale) * P(N > z), stable for large z
    if z > 0:
        return 0.5 * special.erfcx(z / math.sqrt(2.0)) * math.exp(log_scale - 0.5 * z * z)
    return 0.5 * math.erfc(z / math.sqrt(2.0)) * math.exp(log_scale)


def alpha_cdf_conditional(y: float, t: float) -> float:
    """``P(alpha <= y | T_1 = t)``, the closed-form integral of :func:`alpha_density_conditional`."""
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    st = math.sqrt(t)
    ls = 0.5 / t
    c = st * math.sqrt(2.0 * math.pi) / 2.0
    if y <= 0:
        x = -y
        z1 = (1.0 + 2.0 * x * st) / st
        z3 = (3.0 + 2.0 * x * st) / st
        return c * (_scaled_tail(z1, ls) - _scaled_tail(z3, ls))
    u = min(y * st, 1.0)
    p0 = c * (_scaled_tail(1.0 / st, ls) - _scaled_tail(3.0 / st, ls))
    zy = 3.0 / st - 2.0 * u / st
    pos = u - c * (_scaled_tail(zy, ls) - _scaled_tail(3.0 / st, ls))
    return min(1.0, p0 + pos)


# ---------------------------------------------------------------------------
# local time and the I_mu measure
# ---------------------------------------------------------------------------

def _check_mu(mu: float):
    if not mu > 0:
        raise ValueError(f"mu must be > 0 (use the documented limits for mu -> 0), got {mu}")


def local_time_laplace(mu: float, *, b: float | None = None, x: float | None = None) -> float:
    """``E[L_{T_1}^level exp(-mu^2 T_1 / 2)]``.

    Give exactly one of ``b`` (level ``b`` in ``(0, 1)``) or ``x`` (level
    ``-x`` with ``x >= 0``).
    """
    _check_mu(mu)
    if (b is None) == (x is None):
        raise ValueError("give exactly one of b (above zero) or x (below zero)")
    if b is not None:
        if not 0.0 < b < 1.0:
            raise ValueError(f"b must lie in (0, 1), got {b}")
        return (math.exp(-mu) - math.exp(-mu * (3.0 - 2.0 * b))) / mu
    if not x >= 0:
        raise ValueError(f"x must be >= 0, got {x}")
    return (math.exp(-mu * (1.0 + 2.0 * x)) - math.exp(-mu * (3.0 + 2.0 * x))) / mu


def i_mu_monomial(side: str, m: float, mu: float) -> float:
    """``I_mu(psi) = E[int_0^{T_1} psi(B_s) ds exp(-mu^2 T_1/2)]`` for ``psi = (x^+)^m`` or ``(x^-)^m``."""
    _check_mu(mu)
    if not m >= 0:
        raise ValueError(f"order must be >= 0, got {m}")
    if side == "plus":
        def f(b):
            return b ** m * (math.exp(-mu) - np.exp(-mu * (3.0 - 2.0 * b)))
        return integrate(f, 0.0, 1.0, _SPEC)[0] / mu
    if side == "minus":
        def f(x):
            return x ** m * (np.exp(-mu * (1.0 + 2.0 * x)) - np.exp(-mu * (3.0 + 2.0 * x)))
        return integrate(f, 0.0, math.inf, _SPEC)[0] / mu
    raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")


def max_conditional_crossing(s: float, b: float) -> float:
    """``P(sup_{u<=s} B_u < 1 | B_s = b) = 1 - exp(-2 (1-b)^+ / s)``."""
    if not s > 0:
        raise ValueError(f"s must be positive, got {s}")
    return -math.expm1(-2.0 * max(1.0 - b, 0.0) / s)


def inverse_gaussian_integral(y: float, mu: float) -> float:
    """``int_0^inf (2 pi s)^(-1/2) exp(-y^2/(2s) - mu^2 s/2) ds = exp(-mu|y|)/mu``."""
    _check_mu(mu)
    return math.exp(-mu * abs(y)) / mu


def lab_integral(a: float, b: float, m: float) -> float:
    """``int_0^inf y^m ((a+y)^-(m+1) - (b+y)^-(m+1)) dy = log(b/a)``."""
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be positive")
    if not m >= 0:
        raise ValueError(f"order must be >= 0, got {m}")
    return math.log(b / a)


# ---------------------------------------------------------------------------
# dilogarithm
# ---------------------------------------------------------------------------

_PI2_6 = math.pi ** 2 / 6.0


def _dilog_series(x: float) -> float:
    # |x| <= 1/2: terms shrink at least geometrically by 1/2
    total = 0.0
    term = x
    n = 1
    while True:
        add = term / (n * n)
        total += add
        if abs(add) < 1e-17 * max(abs(total), 1e-300):
            return total
        n += 1
        term *= x
        if n > 200:
            return total


def dilog(x: float) -> float:
    """``Li_2(x) = sum_{n>=1} x^n / n^2`` on ``[-1, 1]``.

    The raw series is only used on ``[-1/2, 1/2]``.  Negative arguments below
    ``-1/2`` go through Landen's identity
    ``Li_2(x) = -Li_2(x/(x-1)) - log(1-x)^2 / 2``, which maps them into
    ``(0, 1/2]``; arguments above ``1/2`` use the reflection
    ``Li_2(x) = pi^2/6 - log(x) log(1-x) - Li_2(1-x)``.
    """
    if not -1.0 <= x <= 1.0:
        raise ValueError(f"dilog is defined here for |x| <= 1, got {x}")
    if x == 1.0:
        return _PI2_6
    if -0.5 <= x <= 0.5:
        return _dilog_series(x)
    if x < -0.5:
        l1 = math.log1p(-x)
        return -_dilog_series(x / (x - 1.0)) - 0.5 * l1 * l1
    return _PI2_6 - math.log(x) * math.log1p(-x) - _dilog_series(1.0 - x)


def delta_fn(c: float) -> float:
    """``Delta(C) = int_0^C y log(y) / (1+y) dy`` for ``C >= 1``, in closed form."""
    if not c >= 1.0:
        raise ValueError(f"C must be >= 1, got {c}")
    lc = math.log(c)
    return c * lc - c - lc * math.log1p(c) + _PI2_6 + 0.5 * lc * lc + dilog(-1.0 / c)


# ---------------------------------------------------------------------------
# Bessel, Ray-Knight, meander
# ---------------------------------------------------------------------------

def bessel_exp_moment(a: float) -> float:
    """``E[R_1 exp(-a R_1^2 / 2)]`` for a 3-d Bessel process: ``sqrt(2) / (Gamma(3/2) (1+a)^2)``."""
    if not a > 0:
        raise ValueError(f"a must be positive, got {a}")
    return math.sqrt(2.0) / (math.gamma(1.5) * (1.0 + a) ** 2)


def ray_knight_mean(b: float, mu: float) -> float:
    """Mean ``u(b) = (1 - exp(-2 mu b)) / mu`` of the Ray-Knight diffusion."""
    _check_mu(mu)
    if not b >= 0:
        raise ValueError(f"b must be >= 0, got {b}")
    return -math.expm1(-2.0 * mu * b) / mu


def meander_conditional_kernel(y: float, z: float) -> float:
    """Density of ``m_U`` at ``z`` given ``m_1 = y`` for the Brownian meander.

    Equal to ``h(y - z, 1/y^2)`` for ``z <= y`` and ``h(-(z - y), 1/y^2)``
    above ``y``.
    """
    if not y > 0:
        raise ValueError(f"y must be positive, got {y}")
    if not z >= 0:
        raise ValueError(f"z must be >= 0, got {z}")
    return alpha_density_conditional(y - z, 1.0 / (y * y))
