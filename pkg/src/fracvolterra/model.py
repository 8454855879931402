r"""Problem definition for the fractional Volterra population model

.. math::

    \mathcal{D}^\alpha_{0|t} u + (-\Delta_N)^\sigma u
        = u (1 + a u - b u^2) - a u\, (K * u),
    \qquad (K * u)(t) = \int_0^t K(t - s) u(s)\, ds,

with homogeneous Neumann conditions. This module holds the parameters, the
delay kernels, the history convolution, the reaction term and a few
closed-form facts about the constant states ``R`` and ``1/sqrt(b)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import NamedTuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import PchipInterpolator

from fracvolterra.spectral import GridSpec, NodalField

__all__ = [
    "ExponentialKernel",
    "GammaKernel",
    "TabulatedKernel",
    "KernelSpec",
    "load_kernel_csv",
    "kernel_eval",
    "ModelParams",
    "EquilibriumReport",
    "carrying_root",
    "equilibrium_report",
    "kernel_lag_weights",
    "kernel_weights",
    "ExponentialMemory",
    "convolve_history",
    "reaction",
    "stationary_residual",
    "LinearSpectrum",
    "linear_spectrum",
]

_GL_ORDER = 8


# {{{ delay kernels

@dataclass(frozen=True)
class ExponentialKernel:
    r""":math:`K(t) = \gamma e^{-\gamma t}`."""

    gamma: float = 1.0

    def __post_init__(self) -> None:
        if not self.gamma > 0:
            raise ValueError(f"kernel rate must be positive: gamma = {self.gamma}")

    @property
    def support(self) -> float:
        return math.inf

    def __call__(self, t):
        return self.gamma * np.exp(-self.gamma * np.asarray(t, dtype=float))

    def cumulative(self, t):
        r""":math:`\int_0^t K`."""
        return -np.expm1(-self.gamma * np.asarray(t, dtype=float))


@dataclass(frozen=True)
class GammaKernel:
    r"""Order-two gamma kernel :math:`K(t) = \gamma^2 t e^{-\gamma t}`."""

    gamma: float = 1.0

    def __post_init__(self) -> None:
        if not self.gamma > 0:
            raise ValueError(f"kernel rate must be positive: gamma = {self.gamma}")

    @property
    def support(self) -> float:
        return math.inf

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.gamma ** 2 * t * np.exp(-self.gamma * t)

    def cumulative(self, t):
        gt = self.gamma * np.asarray(t, dtype=float)
        return -np.expm1(-gt) - gt * np.exp(-gt)


@dataclass(frozen=True)
class TabulatedKernel:
    """Kernel given by samples, interpolated by monotone cubic Hermite pieces.

    The interpolant is rescaled to unit mass on ``[nodes[0], nodes[-1]]``;
    it is undefined (and evaluation raises) beyond the last node.
    """

    nodes: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        t = np.array(self.nodes, dtype=float)
        k = np.array(self.values, dtype=float)
        if t.ndim != 1 or t.shape != k.shape or t.size < 2:
            raise ValueError("need matching 1-D node and value arrays of length >= 2")
        if t[0] != 0.0:
            raise ValueError(f"tabulation must start at t = 0, got {t[0]}")
        if np.any(np.diff(t) <= 0):
            raise ValueError("tabulation nodes must be strictly increasing")
        if np.any(k < 0) or not np.all(np.isfinite(k)):
            raise ValueError("kernel values must be finite and non-negative")
        mass = PchipInterpolator(t, k, extrapolate=False).integrate(t[0], t[-1])
        if not mass > 0:
            raise ValueError("tabulated kernel has zero mass")
        k = k / mass
        for arr in (t, k):
            arr.flags.writeable = False
        object.__setattr__(self, "nodes", t)
        object.__setattr__(self, "values", k)

    @cached_property
    def _interp(self) -> PchipInterpolator:
        return PchipInterpolator(self.nodes, self.values, extrapolate=False)

    @property
    def support(self) -> float:
        return float(self.nodes[-1])

    def _check(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.support * (1 + 1e-14)):
            raise ValueError(
                f"kernel evaluated outside its tabulated support [0, {self.support}]")
        return np.minimum(t, self.support)

    def __call__(self, t):
        return np.maximum(self._interp(self._check(t)), 0.0)

    def cumulative(self, t):
        t = self._check(t)
        anti = self._interp.antiderivative()
        return anti(t) - anti(0.0)


KernelSpec = Union[ExponentialKernel, GammaKernel, TabulatedKernel]


def load_kernel_csv(path) -> TabulatedKernel:
    """Read a two-column ``t, K(t)`` table (an optional header line is skipped)."""
    rows = []
    with Path(path).open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                if lineno == 1:
                    continue
                raise ValueError(f"{path}:{lineno}: expected two numeric columns") from None
    if not rows:
        raise ValueError(f"{path}: no kernel samples")
    t, k = np.array(rows).T
    return TabulatedKernel(t, k)


def kernel_eval(k: KernelSpec, t):
    """Evaluate ``K(t)`` for ``t >= 0``."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("kernel is only defined for t >= 0")
    return k(t)

# }}}


# {{{ parameters and constant states

@dataclass(frozen=True)
class ModelParams:
    """Model coefficients.

    ``alpha = 1`` is accepted so that the classical limit can be run through
    the same code; the fractional solvers are meant for ``0 < alpha < 1``.
    """

    alpha: float
    sigma: float
    a: float
    b: float
    kernel: KernelSpec = field(default_factory=ExponentialKernel)

    def __post_init__(self) -> None:
        errors = []
        if not 0 < self.alpha <= 1:
            errors.append(f"alpha must lie in (0,1): alpha = {self.alpha}")
        if not 0 < self.sigma < 1:
            errors.append(f"sigma must lie in (0,1): sigma = {self.sigma}")
        if not self.a > 0:
            errors.append(f"a must be positive: a = {self.a}")
        if not self.b > 0:
            errors.append(f"b must be positive: b = {self.b}")
        if errors:
            raise ValueError("; ".join(errors))

    @property
    def u_star(self) -> float:
        return 1.0 / math.sqrt(self.b)

    @property
    def R(self) -> float:
        return carrying_root(self.a, self.b)


def carrying_root(a: float, b: float) -> float:
    r"""Positive root of :math:`1 + a w - b w^2`."""
    if not (a > 0 and b > 0):
        raise ValueError(f"a and b must be positive: a = {a}, b = {b}")
    return (a + math.sqrt(a * a + 4.0 * b)) / (2.0 * b)


class EquilibriumReport(NamedTuple):
    R: float
    u_star: float
    satisfies_order: bool


def equilibrium_report(a: float, b: float) -> EquilibriumReport:
    R = carrying_root(a, b)
    u_star = 1.0 / math.sqrt(b)
    return EquilibriumReport(R, u_star, R >= u_star)

# }}}


# {{{ history convolution

def _interval_weights(kernel, tau_a, tau_b):
    r"""Hat-function moments of ``K`` over :math:`[\tau_a, \tau_b]`.

    Returns the weights of the samples at the left and right end of the
    ``s`` interval for :math:`\int K(t_k - s) u(s) ds` with ``u`` linear,
    where :math:`\tau = t_k - s`. Gauss-Legendre with a fixed order.
    """
    x, w = leggauss(_GL_ORDER)
    tau_a = np.asarray(tau_a, dtype=float)[..., None]
    tau_b = np.asarray(tau_b, dtype=float)[..., None]
    half = 0.5 * (tau_b - tau_a)
    tau = tau_a + half * (1.0 + x)
    kw = half * w * kernel(tau)
    h = 2.0 * half
    # left node of the s-interval sits at tau_b
    left = np.sum(kw * (tau - tau_a), axis=-1) / h[..., 0]
    right = np.sum(kw * (tau_b - tau), axis=-1) / h[..., 0]
    return left, right


def kernel_weights(kernel: KernelSpec, t: np.ndarray, k: int) -> np.ndarray:
    r"""Weights of ``u(t_0) .. u(t_k)`` in :math:`(K * u)(t_k)` on any mesh."""
    w = np.zeros(k + 1)
    if k == 0:
        return w
    left, right = _interval_weights(kernel, t[k] - t[1:k + 1], t[k] - t[:k])
    w[:k] += left
    w[1:] += right
    return w


def kernel_lag_weights(kernel: KernelSpec, h: float, n: int):
    """Per-lag weights on a uniform mesh with step ``h``.

    Returns ``(W, B)`` such that the weight of ``u_j`` in ``(K*u)(t_k)`` is
    ``W[k - j]`` for ``0 < j <= k`` and ``W[k] - B[k + 1]`` for ``j = 0``.
    ``W`` has ``n + 1`` entries and ``B`` has ``n + 2``.
    """
    lags = np.arange(1, n + 2)
    left, right = _interval_weights(kernel, (lags - 1) * h, lags * h)
    A = np.concatenate([[0.0], left])       # A[l], left-node weight at lag l
    B = np.concatenate([[0.0], right])      # B[l], right-node weight at lag l
    W = A[:n + 1] + B[1:n + 2]
    return W, B


@dataclass(frozen=True)
class ExponentialMemory:
    r"""Exact one-step update of :math:`c(t) = \int_0^t \gamma e^{-\gamma(t-s)} u(s) ds`.

    For ``u`` linear on :math:`[t_k, t_{k+1}]`,
    :math:`c_{k+1} = e^{-\gamma h} c_k + w_0 u_k + w_1 u_{k+1}`.
    """

    gamma: float

    def coefficients(self, h: float):
        g = self.gamma
        x = g * h
        decay = math.exp(-x)
        em1 = -math.expm1(-x)               # 1 - e^{-x}
        if x > 1.0e-3:
            w1 = 1.0 - em1 / x
        else:
            # 1 - (1 - e^{-x})/x by its Taylor series
            w1 = x / 2.0 - x * x / 6.0 + x ** 3 / 24.0 - x ** 4 / 120.0
        w0 = em1 - w1
        return decay, w0, w1

    def step(self, c, u_old, u_new, h: float):
        decay, w0, w1 = self.coefficients(h)
        return decay * c + w0 * u_old + w1 * u_new

    def run(self, t: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Memory values at every node for samples ``u`` (time on axis 0)."""
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        for k in range(len(t) - 1):
            out[k + 1] = self.step(out[k], u[k], u[k + 1], t[k + 1] - t[k])
        return out


def convolve_history(traj, k: KernelSpec, t_index: int,
                     recursive: bool | None = None) -> NodalField:
    r"""Delay field :math:`(K * u)(\cdot, t_k)` from a stored trajectory.

    Product-trapezoid quadrature on the trajectory's time nodes. The
    exponential kernel uses the recursive update unless ``recursive=False``.
    """
    times = np.asarray(traj.times)
    if not 0 <= t_index < len(times):
        raise IndexError(f"t_index {t_index} outside trajectory of length {len(times)}")
    grid = traj.states[0].grid
    if t_index == 0:
        return NodalField(grid, np.zeros(grid.shape))
    u = np.stack([s.values for s in traj.states[:t_index + 1]])
    if recursive is None:
        recursive = isinstance(k, ExponentialKernel)
    if recursive:
        if not isinstance(k, ExponentialKernel):
            raise ValueError("the recursive update needs an exponential kernel")
        c = ExponentialMemory(k.gamma).run(times[:t_index + 1], u)[-1]
    else:
        w = kernel_weights(k, times, t_index)
        c = np.tensordot(w, u, axes=(0, 0))
    return NodalField(grid, c)

# }}}


# {{{ reaction, stationary residual, linearization

def reaction_values(u, conv, a: float, b: float):
    """Array form of :func:`reaction`."""
    return u * (1.0 + a * u - b * u * u) - a * u * conv


def reaction(u: NodalField, conv: NodalField, a: float, b: float) -> NodalField:
    r""":math:`f = u(1 + a u - b u^2) - a u (K * u)` pointwise on the nodal grid.

    The nodal grid doubles as the dealiasing grid when it carries at least
    twice as many points as retained modes.
    """
    if u.grid != conv.grid:
        raise ValueError("fields live on different grids")
    return NodalField(u.grid, reaction_values(u.values, conv.values, a, b))


def stationary_residual(phi: NodalField, sigma: float, b: float) -> float:
    r""":math:`\| (-\Delta_N)^\sigma \varphi - \varphi (1 - b\varphi^2) \|_{L^2}`.

    Both terms are expanded in the full cosine basis of the nodal grid, so the
    norm is exact for band-limited ``phi`` resolved by the grid.
    """
    grid = phi.grid
    full = GridSpec(grid.lengths, grid.points, grid.points)
    lam = full.eigenvalues
    c = full.modal_from_values(phi.values)
    g = full.modal_from_values(phi.values * (1.0 - b * phi.values ** 2))
    return float(np.sqrt(np.sum((lam ** sigma * c - g) ** 2)))


class LinearSpectrum(NamedTuple):
    eigenvalues: np.ndarray
    unstable: tuple


def linear_spectrum(grid: GridSpec, sigma: float,
                    exponent: str | float = "sigma") -> LinearSpectrum:
    r"""Eigenvalues :math:`1 - \lambda_n^{s}` of the linearization at ``u = 0``.

    ``exponent`` selects ``s``: ``"sigma"`` (default), ``"half"`` for
    :math:`\sigma/2`, or an explicit number.
    """
    if exponent == "sigma":
        s = sigma
    elif exponent == "half":
        s = sigma / 2.0
    else:
        s = float(exponent)
    mu = 1.0 - grid.eigenvalues ** s
    mu[(0,) * grid.dim] = 1.0
    unstable = tuple(idx for idx in np.ndindex(*mu.shape) if mu[idx] > 0)
    return LinearSpectrum(mu, unstable)

# }}}
