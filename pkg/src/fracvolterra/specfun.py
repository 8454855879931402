r"""Real-argument special functions: Gamma, Mittag-Leffler and Wright-type.

All public functions accept scalars or numpy arrays and return the same shape
(a Python ``float`` for scalar input).

The two-parameter Mittag-Leffler function

.. math::

    E_{\alpha,\beta}(z) = \sum_{k=0}^\infty \frac{z^k}{\Gamma(\alpha k + \beta)}

is evaluated in one of three regimes per point: the Taylor series where it is
well conditioned, the algebraic asymptotic expansion for large negative
arguments, and otherwise a trapezoidal rule for the inverse Laplace transform
of :math:`s^{\alpha-\beta}/(s^\alpha - z)` on a parabolic Hankel contour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad_vec

__all__ = [
    "ConvergenceError",
    "SeriesControl",
    "gamma_fn",
    "lgamma_fn",
    "rgamma",
    "mittag_leffler",
    "wright_phi",
    "wright_moment",
]

_EPS = np.finfo(float).eps

# Lanczos approximation, g = 7, n = 9
_LANCZOS_G = 7.0
_LANCZOS_P = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

#: largest argument with a finite Gamma value in double precision
GAMMA_OVERFLOW = 171.6243769563027

# (n - 1)! for n = 1 .. 171, so Gamma is exact at positive integers
_FACTORIALS = np.array([float(math.factorial(n)) for n in range(171)])


class ConvergenceError(ArithmeticError):
    """Raised when no evaluation branch reaches the requested tolerance."""


@dataclass(frozen=True)
class SeriesControl:
    """Tolerance and term-cap policy for the series evaluations."""

    #: absolute tolerance targeted by series truncation
    abs_tol: float = 1.0e-12
    #: maximum number of series terms before giving up on a branch
    max_terms: int = 500
    #: :math:`|z|` above which the Taylor series is never used for negative z
    switch_radius: float = 5.0

    def __post_init__(self) -> None:
        if not self.abs_tol > 0:
            raise ValueError(f"abs_tol must be positive: {self.abs_tol}")
        if self.max_terms < 1:
            raise ValueError(f"max_terms must be at least 1: {self.max_terms}")
        if not self.switch_radius > 0:
            raise ValueError(f"switch_radius must be positive: {self.switch_radius}")


DEFAULT_CONTROL = SeriesControl()


def _wrap(result: np.ndarray, scalar: bool):
    return float(np.asarray(result).reshape(-1)[0]) if scalar else result


def _is_pole(x: np.ndarray) -> np.ndarray:
    return (x <= 0) & (x == np.floor(x))


def _sinpi(x: np.ndarray) -> np.ndarray:
    # exact range reduction keeps sin(pi x) accurate for large |x|
    r = x - 2.0 * np.round(0.5 * x)
    r = np.where(r > 0.5, 1.0 - r, r)
    r = np.where(r < -0.5, -1.0 - r, r)
    return np.sin(np.pi * r)


def _lanczos_sum(x: np.ndarray) -> np.ndarray:
    # x is the shifted argument (Gamma(x + 1))
    acc = np.full_like(x, _LANCZOS_P[0])
    for i in range(1, len(_LANCZOS_P)):
        acc = acc + _LANCZOS_P[i] / (x + i)
    return acc


def _integer_args(x: np.ndarray):
    """Mask of arguments with a tabulated factorial, and their table index."""
    mask = (x == np.floor(x)) & (x >= 1.0) & (x <= len(_FACTORIALS))
    return mask, (x[mask] - 1.0).astype(int)


def _gamma_right(x: np.ndarray) -> np.ndarray:
    """Gamma for x >= 0.5, exact (correctly rounded) at positive integers."""
    xm = x - 1.0
    t = xm + _LANCZOS_G + 0.5
    # split the power so t**(x - 0.5) does not overflow before exp(-t)
    half = np.power(t, 0.5 * (xm + 0.5))
    out = math.sqrt(2.0 * math.pi) * half * (np.exp(-t) * half) * _lanczos_sum(xm)
    mask, idx = _integer_args(x)
    out[mask] = _FACTORIALS[idx]
    return out


def _lgamma_right(x: np.ndarray) -> np.ndarray:
    xm = x - 1.0
    t = xm + _LANCZOS_G + 0.5
    out = _LOG_SQRT_2PI + (xm + 0.5) * np.log(t) - t + np.log(_lanczos_sum(xm))
    mask, idx = _integer_args(x)
    out[mask] = np.log(_FACTORIALS[idx])
    return out


def gamma_fn(x):
    """Gamma function on the real line.

    Uses a Lanczos approximation for ``x >= 0.5`` and the reflection formula
    below that. Raises :class:`ValueError` at the poles and
    :class:`OverflowError` above :data:`GAMMA_OVERFLOW`.
    """
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    if np.any(_is_pole(x)):
        raise ValueError("Gamma has poles at non-positive integers")
    if np.any(x > GAMMA_OVERFLOW):
        raise OverflowError(f"Gamma overflows for x > {GAMMA_OVERFLOW}")

    out = np.empty_like(x)
    right = x >= 0.5
    out[right] = _gamma_right(x[right])
    left = ~right
    if np.any(left):
        xl = x[left]
        # Gamma(1 - x) may overflow for x < -170.6 while the product does not
        with np.errstate(over="ignore"):
            g = _gamma_right(1.0 - xl)
            out[left] = np.where(
                np.isfinite(g),
                np.pi / (_sinpi(xl) * g),
                np.sign(_sinpi(xl)) * np.exp(math.log(math.pi)
                                             - np.log(np.abs(_sinpi(xl)))
                                             - _lgamma_right(1.0 - xl)),
            )
    return _wrap(out, scalar)


def lgamma_fn(x):
    """Return ``(log|Gamma(x)|, sign Gamma(x))``."""
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    if np.any(_is_pole(x)):
        raise ValueError("Gamma has poles at non-positive integers")

    logabs = np.empty_like(x)
    sign = np.ones_like(x)
    right = x >= 0.5
    logabs[right] = _lgamma_right(x[right])
    left = ~right
    if np.any(left):
        xl = x[left]
        s = _sinpi(xl)
        logabs[left] = math.log(math.pi) - np.log(np.abs(s)) - _lgamma_right(1.0 - xl)
        sign[left] = np.sign(s)
    if scalar:
        return float(logabs), float(sign)
    return logabs, sign


def rgamma(x):
    """Reciprocal Gamma function, entire: zero at the poles of Gamma."""
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    regular = ~_is_pole(x)
    xr = x[regular]

    vals = np.empty_like(xr)
    small = (xr >= 0.5) & (xr <= GAMMA_OVERFLOW)
    vals[small] = 1.0 / _gamma_right(xr[small])
    neg = xr < 0.5
    if np.any(neg):
        # 1/Gamma(x) = sin(pi x) Gamma(1 - x) / pi, in log form when large
        xn = xr[neg]
        one_minus = 1.0 - xn
        with np.errstate(over="ignore"):
            g = np.where(one_minus <= GAMMA_OVERFLOW,
                         _gamma_right(np.minimum(one_minus, GAMMA_OVERFLOW)),
                         np.inf)
        direct = _sinpi(xn) * g / np.pi
        with np.errstate(over="ignore"):
            logform = _sinpi(xn) / np.pi * np.exp(_lgamma_right(one_minus))
        vals[neg] = np.where(np.isfinite(g), direct, logform)
    big = xr > GAMMA_OVERFLOW
    vals[big] = np.exp(-_lgamma_right(xr[big]))
    out[regular] = vals
    return _wrap(out, scalar)


# {{{ Mittag-Leffler

# nodes of the parabolic contour s(u) = mu (1 + i u)^2, u = k h
_CONTOUR_NODES = 24


def _ml_series(alpha, beta, z, n_terms):
    k = np.arange(n_terms, dtype=float)
    coeff = rgamma(alpha * k + beta)
    # Horner evaluation of sum_k coeff_k z^k
    acc = np.zeros_like(z)
    for c in coeff[::-1]:
        acc = acc * z + c
    return acc


def _ml_series_plan(alpha, beta, az, ctl):
    """Number of terms needed for |z| <= az (None if more than max_terms)
    and the log of the largest term magnitude."""
    k = np.arange(ctl.max_terms + 1, dtype=float)
    arg = alpha * k + beta
    pole = _is_pole(arg)
    logc = lgamma_fn(np.where(pole, 0.5, arg))[0]
    if az > 0:
        logterm = k * math.log(az) - logc
    else:
        logterm = np.where(k == 0, -logc, -np.inf)
    logterm = np.where(pole, -np.inf, logterm)
    peak = int(np.argmax(logterm))
    tail = np.nonzero((logterm < math.log(1.0e-2 * ctl.abs_tol * _EPS)) & (k > peak))[0]
    if len(tail) == 0:
        return None, float(logterm[peak])
    return int(tail[0]) + 1, float(logterm[peak])


@lru_cache(maxsize=256)
def _ml_series_radii(alpha, beta, ctl):
    """Largest |z| for which the Taylor series is usable.

    For negative z the largest term must also be small enough that
    cancellation stays below the tolerance; positive z only needs the series
    to converge within ``max_terms``.
    """
    limit = math.log(ctl.abs_tol / (64.0 * _EPS))

    def ok_neg(r):
        n, big = _ml_series_plan(alpha, beta, r, ctl)
        return n is not None and big <= limit

    def ok_pos(r):
        return _ml_series_plan(alpha, beta, r, ctl)[0] is not None

    def bisect(ok, hi):
        lo = 0.0
        if ok(hi):
            return hi
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if ok(mid):
                lo = mid
            else:
                hi = mid
        return lo

    return bisect(ok_neg, ctl.switch_radius), bisect(ok_pos, 1.0e4)


def _ml_asymptotic(alpha, beta, z, ctl):
    """Algebraic expansion -sum_k z^{-k} / Gamma(beta - alpha k) for z < 0.

    Returns (values, accepted mask).
    """
    az = np.abs(z)
    k = np.arange(1, ctl.max_terms + 1, dtype=float)
    c = rgamma(beta - alpha * k)
    # terms shrink with |z|, so the row with the smallest |z| bounds how many
    # columns can matter before every row has dropped below roundoff
    with np.errstate(divide="ignore"):
        lead = np.log(np.abs(c)) - k * math.log(np.min(az))
    below = np.nonzero(lead < math.log(1.0e-6 * ctl.abs_tol))[0]
    if below.size and below[0] <= np.argmin(np.where(np.isfinite(lead), lead, np.inf)):
        k, c = k[:below[0] + 1], c[:below[0] + 1]
    # terms t_k = -c_k z^{-k}, summed up to the smallest term
    logaz = np.log(az)
    with np.errstate(divide="ignore"):
        logmag = np.log(np.abs(c))[None, :] - k[None, :] * logaz[:, None]
    # smallest term and its index, ignoring exact zeros (c_k = 0)
    finite = np.where(np.isfinite(logmag), logmag, np.inf)
    kmin = np.argmin(finite, axis=1)
    smallest = np.exp(finite[np.arange(len(z)), kmin])

    # beyond-all-orders size, exp(|z|^{1/alpha} cos(pi/alpha)) for alpha < 1
    ctheta = abs(math.cos(math.pi / alpha)) if alpha < 1.0 else 1.0
    with np.errstate(over="ignore"):
        hidden = np.exp(-ctheta * az ** (1.0 / alpha)) * az ** (abs(1.0 - beta) / alpha) / alpha
    # sum each row up to its smallest term, smallest terms first
    keep = k[None, :] <= kmin[:, None] + 1
    sign = np.where(z < 0, -1.0, 1.0)[:, None] ** k[None, :]
    with np.errstate(over="ignore", invalid="ignore"):
        terms = np.where(keep, -np.sign(c)[None, :] * sign * np.exp(logmag), 0.0)
    out = np.sum(terms[:, ::-1], axis=1)
    accepted = (smallest <= 1.0e-2 * ctl.abs_tol) & (hidden <= 1.0e-2 * ctl.abs_tol)
    return out, accepted


def _ml_contour(alpha, beta, z, n_nodes=_CONTOUR_NODES):
    r"""Inverse Laplace transform of s^{alpha - beta} / (s^alpha - z) at t = 1.

    Poles on the principal sheet (z > 0) to the right of the contour are
    added as residues.
    """
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)

    # contour parameters: h = 3 / N and mu = pi N / 12 for N nodes per side,
    # shrinking mu to keep a positive real pole well outside the contour
    pole = np.where(z > 0, np.abs(z) ** (1.0 / alpha), 0.0)
    mu_opt = math.pi * n_nodes / 12.0
    mu = np.where(pole > 0.25 * mu_opt, np.minimum(mu_opt, 0.25 * pole), mu_opt)
    h = 3.0 / n_nodes

    u = h * np.arange(n_nodes + 1)
    w = np.full(n_nodes + 1, 2.0)
    w[0] = 1.0

    s = mu[:, None] * (1.0 + 1j * u[None, :]) ** 2
    ds = 2j * mu[:, None] * (1.0 + 1j * u[None, :])
    sa = s ** alpha
    F = s ** (alpha - beta) / (sa - z[:, None])
    g = np.exp(s) * F * ds / (2j * math.pi)
    out = h * np.real(np.sum(w[None, :] * g, axis=1))

    outside = pole > mu
    if np.any(outside):
        p = pole[outside]
        with np.errstate(over="ignore"):
            out[outside] += np.exp(p) * p ** (1.0 - beta) / alpha
    return out


def mittag_leffler(alpha, beta, z, ctl: SeriesControl | None = None):
    r"""Two-parameter Mittag-Leffler function :math:`E_{\alpha,\beta}(z)`.

    Real arguments only, :math:`0 < \alpha \le 2`. The absolute error is
    about ``ctl.abs_tol`` (relative for values larger than one).
    """
    if ctl is None:
        ctl = DEFAULT_CONTROL
    if not alpha > 0:
        raise ValueError(f"alpha must be positive: {alpha}")
    if alpha > 2:
        raise ValueError(f"alpha must be at most 2: {alpha}")

    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=float))
    shape = z.shape
    z = z.ravel()
    out = np.full(z.shape, np.nan)
    done = np.zeros(z.shape, dtype=bool)

    if alpha == 1.0 and beta == 1.0:
        with np.errstate(over="ignore"):
            out = np.exp(z)
        done[:] = True

    # 1. Taylor series, where the terms do not cancel catastrophically
    neg_radius, pos_radius = _ml_series_radii(float(alpha), float(beta), ctl)
    for mask, radius in (((~done) & (z < 0) & (-z <= neg_radius), neg_radius),
                         ((~done) & (z >= 0) & (z <= pos_radius), pos_radius)):
        if np.any(mask):
            n, _ = _ml_series_plan(alpha, beta, float(np.max(np.abs(z[mask]))), ctl)
            out[mask] = _ml_series(alpha, beta, z[mask], n)
            done |= mask

    # 2. asymptotic expansion for large negative z
    todo = (~done) & (z < 0) & (np.abs(z) > ctl.switch_radius)
    if np.any(todo) and alpha < 2.0:
        # chunked: the expansion builds a (points x max_terms) table
        for idx in np.array_split(np.nonzero(todo)[0], 1 + np.count_nonzero(todo) // 2048):
            vals, ok = _ml_asymptotic(alpha, beta, z[idx], ctl)
            out[idx[ok]] = vals[ok]
            done[idx[ok]] = True

    # 3. integral representation for everything else
    todo = ~done
    if np.any(todo):
        if alpha > 1.0:
            raise ConvergenceError("contour branch is only available for alpha <= 1")
        out[todo] = _ml_contour(alpha, beta, z[todo])

    if not np.all(np.isfinite(out)):
        if np.any(np.isinf(out)):
            raise OverflowError("Mittag-Leffler value overflows double precision")
        raise ConvergenceError("Mittag-Leffler evaluation did not converge")

    out = out.reshape(shape)
    return _wrap(out, scalar)

# }}}


# {{{ Wright-type function

def _kanter(phi, nu):
    s = np.sin(phi)
    return (np.sin(nu * phi) ** nu * np.sin((1.0 - nu) * phi) ** (1.0 - nu) / s) ** (
        1.0 / (1.0 - nu))


def _wright_integral(alpha, tau):
    r"""Integral form of the M-Wright density through Kanter's function.

    .. math::

        \Phi_\alpha(\tau) = \frac{\tau^{\alpha/(1-\alpha)}}{(1-\alpha)\pi}
            \int_0^\pi A(\phi) e^{-\tau^{1/(1-\alpha)} A(\phi)} \,\mathrm{d}\phi
    """
    x = tau ** (1.0 / (1.0 - alpha))

    def integrand(phi):
        # endpoints are excluded by the quadrature nodes
        a = _kanter(phi, alpha)
        return a * np.exp(-x * a)

    val, _ = quad_vec(integrand, 0.0, math.pi, epsabs=1.0e-15, epsrel=1.0e-12)
    return tau ** (alpha / (1.0 - alpha)) / ((1.0 - alpha) * math.pi) * val


def _wright_series(alpha, tau, n_terms):
    n = np.arange(n_terms, dtype=float)
    logc = (lgamma_fn(alpha * n + alpha)[0] - lgamma_fn(n + 1.0)[0])
    # 1 / Gamma(1 - alpha - alpha n) = sin(pi x) Gamma(alpha n + alpha) / pi
    sn = _sinpi(1.0 - alpha - alpha * n) / math.pi
    coeff = sn * np.exp(logc) * (-1.0) ** n
    acc = np.zeros_like(tau)
    for c in coeff[::-1]:
        acc = acc * tau + c
    return acc


def _wright_series_plan(alpha, tau, ctl):
    n = np.arange(ctl.max_terms, dtype=float)
    logc = lgamma_fn(alpha * n + alpha)[0] - lgamma_fn(n + 1.0)[0]
    with np.errstate(divide="ignore"):
        logterm = logc + n * math.log(tau) if tau > 0 else np.where(n == 0, logc, -np.inf)
    peak = int(np.argmax(logterm))
    tail = np.nonzero((logterm < math.log(1.0e-2 * ctl.abs_tol)) & (n > peak))[0]
    if len(tail) == 0:
        return None, float(logterm[peak])
    return int(tail[0]) + 1, float(logterm[peak])


@lru_cache(maxsize=64)
def _wright_series_radius(alpha, ctl):
    """Largest tau where the series is well conditioned, and its term count."""
    limit = math.log(ctl.abs_tol / (64.0 * _EPS))

    def ok(tau):
        n, big = _wright_series_plan(alpha, tau, ctl)
        return n is not None and big <= limit

    lo, hi = 0.0, 64.0
    if not ok(hi):
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if ok(mid):
                lo = mid
            else:
                hi = mid
    else:
        lo = hi
    return lo, _wright_series_plan(alpha, lo, ctl)[0]


def wright_phi(alpha, tau, ctl: SeriesControl | None = None):
    r"""Wright-type (M-Wright) function

    .. math::

        \Phi_\alpha(\tau) = \sum_{n=0}^\infty
            \frac{(-\tau)^n}{n!\,\Gamma(1 - \alpha - \alpha n)},
        \qquad 0 < \alpha < 1,\ \tau \ge 0.

    The series is used while its terms stay small enough to avoid
    cancellation; larger arguments switch to a non-oscillatory integral.
    """
    if ctl is None:
        ctl = DEFAULT_CONTROL
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1): {alpha}")

    scalar = np.ndim(tau) == 0
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(tau < 0):
        raise ValueError("tau must be non-negative")
    shape = tau.shape
    tau = tau.ravel()
    out = np.empty_like(tau)

    radius, n_terms = _wright_series_radius(float(alpha), ctl)
    series = tau <= radius
    if np.any(series):
        out[series] = _wright_series(alpha, tau[series], n_terms)
    if not np.all(series):
        out[~series] = _wright_integral(alpha, tau[~series])

    if not np.all(np.isfinite(out)):
        raise ConvergenceError("Wright function evaluation did not converge")
    out = out.reshape(shape)
    return _wrap(out, scalar)


def wright_moment(alpha, delta):
    r"""Closed-form moment :math:`\int_0^\infty \tau^\delta \Phi_\alpha(\tau)\,d\tau`."""
    return gamma_fn(delta + 1.0) * rgamma(alpha * delta + 1.0)

# }}}
