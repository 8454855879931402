r"""Discrete fractional calculus on sampled functions of time.

The operators work on a (possibly graded) mesh :math:`0 = t_0 < \dots < t_N = T`
and treat samples as the piecewise-linear interpolant. Weakly singular kernels
are integrated exactly on each subinterval:

* the Caputo derivative uses the L1 scheme,
* Riemann-Liouville integrals use product-trapezoid weights,
* right-sided derivatives differentiate the right-sided integral.

The ``verify_*`` helpers return residuals, never booleans; what counts as a
pass depends on the mesh and is decided by the caller.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.integrate import trapezoid

from fracvolterra.specfun import gamma_fn, mittag_leffler

__all__ = [
    "TimeMesh",
    "SampledFn",
    "default_grading",
    "product_weights",
    "caputo_derivative",
    "rl_integral_left",
    "rl_integral_right",
    "rl_derivative_right",
    "verify_fundamental",
    "verify_int_by_parts",
    "gronwall_envelope",
    "gronwall_residual",
    "convex_chain_gap",
    "verify_convex_chain",
]


def default_grading(alpha: float, cap: float = 4.0) -> float:
    """Grading exponent ``(2 - alpha) / alpha`` capped at ``cap``."""
    return min((2.0 - alpha) / alpha, cap)


@dataclass(frozen=True)
class TimeMesh:
    """Nodes :math:`t_k = T (k / N)^r`, :math:`k = 0, \\dots, N`."""

    T: float
    N: int
    r: float = 1.0

    def __post_init__(self) -> None:
        if not self.T > 0:
            raise ValueError(f"horizon must be positive: T = {self.T}")
        if self.N < 2:
            raise ValueError(f"need at least 2 intervals: N = {self.N}")
        if not self.r >= 1:
            raise ValueError(f"grading exponent must be >= 1: r = {self.r}")

    @classmethod
    def graded(cls, T: float, N: int, alpha: float) -> "TimeMesh":
        return cls(T, N, default_grading(alpha))

    @cached_property
    def nodes(self) -> np.ndarray:
        t = self.T * (np.arange(self.N + 1) / self.N) ** self.r
        t[-1] = self.T
        t.flags.writeable = False
        return t

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def is_uniform(self) -> bool:
        return self.r == 1.0

    def __len__(self) -> int:
        return self.N + 1


@dataclass(frozen=True)
class SampledFn:
    """Values of a function of time at the nodes of a :class:`TimeMesh`."""

    mesh: TimeMesh
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.shape != (len(self.mesh),):
            raise ValueError(
                f"expected {len(self.mesh)} values, got shape {values.shape}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, mesh: TimeMesh, f: Callable) -> "SampledFn":
        return cls(mesh, np.asarray(f(mesh.nodes), dtype=float))

    @property
    def t(self) -> np.ndarray:
        return self.mesh.nodes

    def __add__(self, other: "SampledFn") -> "SampledFn":
        return SampledFn(self.mesh, self.values + other.values)

    def __mul__(self, c: float) -> "SampledFn":
        return SampledFn(self.mesh, c * self.values)

    __rmul__ = __mul__


# {{{ kernels on node arrays

def product_weights(t, k, F1, F2):
    """Weights of samples ``f_0 .. f_k`` in :math:`\\int_0^{t_k} p(t_k - s) f(s) ds`.

    ``F1`` is an antiderivative of the kernel ``p`` and ``F2`` one of ``F1``,
    both vanishing at zero; ``f`` is the piecewise-linear interpolant on
    ``t``. The result is exact for that interpolant.
    """
    w = np.zeros(k + 1)
    if k == 0:
        return w
    h = np.diff(t[:k + 1])
    ta = t[k] - t[1:k + 1]
    tb = t[k] - t[:k]
    f1a, f1b = F1(ta), F1(tb)
    d2 = F2(tb) - F2(ta)
    # left node of each interval, then right node
    w[:k] += (h * f1b - d2) / h
    w[1:] += (d2 - h * f1a) / h
    return w


def _rl_primitives(alpha):
    c1 = 1.0 / gamma_fn(alpha + 1.0)
    c2 = 1.0 / gamma_fn(alpha + 2.0)
    return (lambda tau: c1 * tau ** alpha), (lambda tau: c2 * tau ** (alpha + 1.0))


def _rl_left(t, f, alpha):
    F1, F2 = _rl_primitives(alpha)
    out = np.zeros_like(f, dtype=float)
    for k in range(1, len(t)):
        out[k] = product_weights(t, k, F1, F2) @ f[:k + 1]
    return out


def _rl_right(t, f, alpha):
    # reflect s -> T - s, integrate on the left, reflect back
    T = t[-1]
    tr = (T - t)[::-1]
    tr[0] = 0.0
    return _rl_left(tr, f[::-1], alpha)[::-1]


def _caputo_l1(t, f, alpha):
    out = np.zeros_like(f, dtype=float)
    c = 1.0 / gamma_fn(2.0 - alpha)
    df = np.diff(f) / np.diff(t)
    for k in range(1, len(t)):
        a = (t[k] - t[:k]) ** (1.0 - alpha) - (t[k] - t[1:k + 1]) ** (1.0 - alpha)
        out[k] = c * (a @ df[:k])
    return out


def _check_order(alpha, upper=None):
    if not alpha > 0:
        raise ValueError(f"order must be positive: alpha = {alpha}")
    if upper is not None and not alpha < upper:
        raise ValueError(f"order must lie in (0, {upper}): alpha = {alpha}")

# }}}


def caputo_derivative(f: SampledFn, alpha: float) -> SampledFn:
    r"""L1 approximation of :math:`\mathcal{D}^\alpha_{0|t} f`, zero at ``t_0``."""
    _check_order(alpha, 1.0)
    return SampledFn(f.mesh, _caputo_l1(f.t, f.values, alpha))


def rl_integral_left(f: SampledFn, alpha: float) -> SampledFn:
    r"""Left Riemann-Liouville integral :math:`I^\alpha_{0|t} f`."""
    _check_order(alpha)
    return SampledFn(f.mesh, _rl_left(f.t, f.values, alpha))


def rl_integral_right(f: SampledFn, alpha: float) -> SampledFn:
    r"""Right Riemann-Liouville integral :math:`I^\alpha_{t|T} f`, zero at ``T``."""
    _check_order(alpha)
    return SampledFn(f.mesh, _rl_right(f.t, f.values, alpha))


def rl_derivative_right(f: SampledFn, alpha: float) -> SampledFn:
    r"""Right Riemann-Liouville derivative :math:`-\frac{d}{dt} I^{1-\alpha}_{t|T} f`.

    Differentiated with second-order differences, one-sided at both ends.
    The derivative is typically singular at ``T``, so the last value is only
    a finite-difference estimate.
    """
    _check_order(alpha, 1.0)
    g = _rl_right(f.t, f.values, 1.0 - alpha)
    return SampledFn(f.mesh, -np.gradient(g, f.t, edge_order=2))


def verify_fundamental(f: SampledFn, alpha: float) -> float:
    r"""Max-norm of :math:`I^\alpha \mathcal{D}^\alpha f - (f - f(0))`."""
    d = _caputo_l1(f.t, f.values, alpha)
    back = _rl_left(f.t, d, alpha)
    return float(np.max(np.abs(back - (f.values - f.values[0]))))


def verify_int_by_parts(x: SampledFn, y: SampledFn, alpha: float) -> float:
    r"""Residual of the fractional integration-by-parts formula

    .. math::

        \int_0^T y\, \mathcal{D}^\alpha_{0|t} x \,dt
        - \int_0^T x\, {}^{RL}D^\alpha_{t|T} y \,dt
        - \left[x\, I^{1-\alpha}_{t|T} y\right]_0^T.
    """
    if x.mesh != y.mesh:
        raise ValueError("x and y must share a mesh")
    t = x.t
    lhs = trapezoid(y.values * _caputo_l1(t, x.values, alpha), t)
    iy = _rl_right(t, y.values, 1.0 - alpha)
    dy = -np.gradient(iy, t, edge_order=2)
    rhs = trapezoid(x.values * dy, t)
    bracket = x.values[-1] * iy[-1] - x.values[0] * iy[0]
    return float(abs(lhs - rhs - bracket))


def gronwall_envelope(psi0: float, C: float, alpha: float, t):
    r"""Weakly singular Gronwall bound :math:`\psi(0) E_{\alpha,1}(C t^\alpha)`."""
    t = np.asarray(t, dtype=float)
    if psi0 == 0:
        return 0.0 if t.ndim == 0 else np.zeros_like(t)
    return psi0 * mittag_leffler(alpha, 1.0, C * t ** alpha)


def gronwall_residual(psi0: float, C: float, alpha: float, mesh: TimeMesh) -> float:
    r"""Max of :math:`|\psi - \psi(0) - C I^\alpha \psi|` for the envelope ``psi``.

    The envelope solves the integral inequality with equality, so this is a
    pure quadrature error.
    """
    t = mesh.nodes
    psi = np.asarray(gronwall_envelope(psi0, C, alpha, t))
    return float(np.max(np.abs(psi - psi0 - C * _rl_left(t, psi, alpha))))


def convex_chain_gap(x: SampledFn, alpha: float,
                     phi: Callable | None = None,
                     dphi: Callable | None = None) -> np.ndarray:
    r"""Pointwise :math:`\mathcal{D}^\alpha \varphi(x) - \varphi'(x) \mathcal{D}^\alpha x`.

    Defaults to :math:`\varphi(u) = u^2`. For convex :math:`\varphi` the gap
    is non-positive.
    """
    if phi is None:
        phi, dphi = np.square, (lambda u: 2.0 * u)
    elif dphi is None:
        raise ValueError("a custom phi needs its derivative dphi")
    t, v = x.t, x.values
    return _caputo_l1(t, phi(v), alpha) - dphi(v) * _caputo_l1(t, v, alpha)


def verify_convex_chain(x: SampledFn, alpha: float,
                        phi: Callable | None = None,
                        dphi: Callable | None = None) -> float:
    """Worst (largest) convexity gap from the second interior node onward.

    The first node after ``t_0`` is skipped: sampled trajectories are only
    Hölder continuous there. Use :func:`convex_chain_gap` to inspect it.
    """
    gap = convex_chain_gap(x, alpha, phi, dphi)
    return float(np.max(gap[2:])) if len(gap) > 2 else 0.0
