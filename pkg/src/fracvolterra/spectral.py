r"""Neumann-Laplacian eigenbasis on an interval or rectangle.

On :math:`[0, L]` the eigenpairs of :math:`-\Delta` with homogeneous Neumann
conditions are

.. math::

    \lambda_n = (n\pi/L)^2, \quad
    e_0 = L^{-1/2}, \quad e_n = \sqrt{2/L}\cos(n\pi x/L),

and rectangles use tensor products. Nodal values live on the cell-centred
grid :math:`x_i = (i + 1/2) L / N`, where the DCT-II is an exact discrete
cosine transform for the first ``N`` modes. Every operator here is diagonal
in the modal coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import NamedTuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.fft import dctn, idctn

from fracvolterra.specfun import mittag_leffler, wright_moment, wright_phi

__all__ = [
    "GridSpec",
    "ModalField",
    "NodalField",
    "Eigenpair",
    "eigenpairs",
    "to_modal",
    "to_nodal",
    "frac_laplacian",
    "s_alpha_factor",
    "p_alpha_factor",
    "apply_S_alpha",
    "apply_P_alpha",
    "subordination_integral",
    "verify_subordination",
    "verify_stroock_varopoulos",
    "verify_symmetry",
    "l2_norm",
]


def _as_tuple(v, dim=None):
    if np.ndim(v) == 0:
        return (v,) * (dim or 1)
    return tuple(v)


@dataclass(frozen=True)
class GridSpec:
    """Interval (1-D) or rectangle (2-D) with a nodal grid and a mode budget.

    ``points`` is the number of nodal points per dimension, ``modes`` the
    number of retained cosine modes (at most ``points``). Keeping
    ``points >= 2 * modes`` makes nodal cubic products alias-free after
    truncation to the mode budget.
    """

    lengths: tuple = (math.pi,)
    points: tuple = (128,)
    modes: tuple | None = None

    def __post_init__(self) -> None:
        lengths = tuple(float(v) for v in _as_tuple(self.lengths))
        points = tuple(int(v) for v in _as_tuple(self.points, len(lengths)))
        if self.modes is None:
            modes = tuple(min(64, n) for n in points)
        else:
            modes = tuple(int(v) for v in _as_tuple(self.modes, len(lengths)))
        if len(lengths) not in (1, 2):
            raise ValueError("only 1-D and 2-D domains are supported")
        if not len(points) == len(modes) == len(lengths):
            raise ValueError("lengths, points and modes must have equal dimension")
        if any(v <= 0 for v in lengths):
            raise ValueError(f"lengths must be positive: {lengths}")
        if any(n < 4 for n in points):
            raise ValueError(f"need at least 4 points per dimension: {points}")
        if any(m < 1 or m > n for m, n in zip(modes, points)):
            raise ValueError(f"mode cap must satisfy 1 <= M <= N: {modes} vs {points}")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "modes", modes)

    @property
    def dim(self) -> int:
        return len(self.lengths)

    @property
    def shape(self) -> tuple:
        return self.points

    @property
    def mode_shape(self) -> tuple:
        return self.modes

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @property
    def cell_volume(self) -> float:
        return self.volume / float(np.prod(self.points))

    @cached_property
    def axes(self) -> tuple:
        return tuple((np.arange(n) + 0.5) * L / n for L, n in zip(self.lengths, self.points))

    @cached_property
    def coords(self) -> tuple:
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Laplacian eigenvalues on the mode grid, ``lambda[0, ...] = 0``."""
        lam = np.zeros(self.modes)
        for axis, (L, m) in enumerate(zip(self.lengths, self.modes)):
            shape = [1] * self.dim
            shape[axis] = m
            lam = lam + ((np.arange(m) * math.pi / L) ** 2).reshape(shape)
        lam.flags.writeable = False
        return lam

    def eigenfunction(self, index, *x) -> np.ndarray:
        """Evaluate the normalised eigenfunction with multi-index ``index``."""
        index = _as_tuple(index, self.dim)
        if len(x) != self.dim:
            raise ValueError(f"expected {self.dim} coordinate arrays")
        out = 1.0
        for n, L, xi in zip(index, self.lengths, x):
            if n == 0:
                out = out * np.full_like(np.asarray(xi, dtype=float), 1.0 / math.sqrt(L))
            else:
                out = out * math.sqrt(2.0 / L) * np.cos(n * math.pi * np.asarray(xi) / L)
        return out

    def sample(self, func) -> "NodalField":
        """Sample ``func(*coords)`` on the nodal grid."""
        return NodalField(self, np.broadcast_to(func(*self.coords), self.shape))

    # transforms on raw arrays

    @cached_property
    def _scale(self) -> float:
        return math.sqrt(self.volume / float(np.prod(self.points)))

    def modal_from_values(self, values: np.ndarray, full: bool = False) -> np.ndarray:
        """Cosine coefficients of nodal ``values`` (truncated unless ``full``)."""
        c = self._scale * dctn(values, type=2, norm="ortho", axes=range(-self.dim, 0))
        if full:
            return c
        return c[(Ellipsis,) + tuple(slice(0, m) for m in self.modes)]

    def values_from_modal(self, coeffs: np.ndarray) -> np.ndarray:
        """Nodal values from (possibly truncated) cosine coefficients."""
        lead = coeffs.shape[:-self.dim]
        padded = np.zeros(lead + self.points)
        padded[(Ellipsis,) + tuple(slice(0, m) for m in coeffs.shape[-self.dim:])] = coeffs
        return idctn(padded, type=2, norm="ortho", axes=range(-self.dim, 0)) / self._scale


@dataclass(frozen=True)
class NodalField:
    """Field values on the nodal grid of ``grid``."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ValueError(f"expected shape {self.grid.shape}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("nodal values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class ModalField:
    """Cosine coefficients :math:`u_n = \\langle u, e_n \\rangle` up to the mode cap."""

    grid: GridSpec
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.shape != self.grid.mode_shape:
            raise ValueError(f"expected shape {self.grid.mode_shape}, got {coeffs.shape}")
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)

    def _new(self, coeffs) -> "ModalField":
        return ModalField(self.grid, coeffs)


class Eigenpair(NamedTuple):
    index: tuple
    value: float
    grid: GridSpec

    def __call__(self, *x):
        return self.grid.eigenfunction(self.index, *x)


def eigenpairs(grid: GridSpec) -> list[Eigenpair]:
    """All retained eigenpairs, in mode-grid order (``lambda_0 = 0`` first)."""
    lam = grid.eigenvalues
    return [Eigenpair(idx, float(lam[idx]), grid) for idx in np.ndindex(*grid.modes)]


def to_modal(f: NodalField) -> ModalField:
    return ModalField(f.grid, f.grid.modal_from_values(f.values))


def to_nodal(c: ModalField) -> NodalField:
    return NodalField(c.grid, c.grid.values_from_modal(c.coeffs))


def _check_grid(a, b) -> None:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


def l2_norm(f: NodalField) -> float:
    """Midpoint-rule L2 norm, exact for band-limited fields."""
    return math.sqrt(float(np.sum(f.values ** 2)) * f.grid.cell_volume)


def frac_laplacian(c: ModalField, sigma: float) -> ModalField:
    r"""Spectral fractional Laplacian :math:`\sum_n \lambda_n^\sigma u_n e_n`."""
    if not 0 < sigma <= 1:
        raise ValueError(f"sigma must lie in (0, 1]: {sigma}")
    return c._new(c.grid.eigenvalues ** sigma * c.coeffs)


def s_alpha_factor(lam, t: float, alpha: float):
    r"""Mode multiplier of :math:`S_\alpha(t)`: :math:`E_{\alpha,1}(-\lambda t^\alpha)`."""
    if t < 0:
        raise ValueError(f"t must be non-negative: {t}")
    lam = np.asarray(lam, dtype=float)
    if t == 0:
        return np.ones_like(lam)
    return mittag_leffler(alpha, 1.0, -lam * t ** alpha)


def p_alpha_factor(lam, t: float, alpha: float):
    r"""Mode multiplier of :math:`P_\alpha(t)`: :math:`t^{\alpha-1} E_{\alpha,\alpha}(-\lambda t^\alpha)`."""
    if not t > 0:
        raise ValueError(f"P_alpha(t) is singular at t = 0 (got t = {t})")
    lam = np.asarray(lam, dtype=float)
    return t ** (alpha - 1.0) * mittag_leffler(alpha, alpha, -lam * t ** alpha)


def apply_S_alpha(c: ModalField, t: float, alpha: float, sigma: float) -> ModalField:
    lam = c.grid.eigenvalues ** sigma
    return c._new(s_alpha_factor(lam, t, alpha) * c.coeffs)


def apply_P_alpha(c: ModalField, t: float, alpha: float, sigma: float) -> ModalField:
    lam = c.grid.eigenvalues ** sigma
    return c._new(p_alpha_factor(lam, t, alpha) * c.coeffs)


# {{{ Wright subordination oracle

def _tail_cutoff(alpha: float, power: int, tol: float) -> float:
    """Cutoff with int_{tau_max}^inf tau^power Phi_alpha(tau) dtau <= tol.

    Markov's inequality with the closed-form moments of order power + delta.
    """
    best = math.inf
    for delta in range(1, 80):
        moment = wright_moment(alpha, float(power + delta))
        if not math.isfinite(moment):
            break
        best = min(best, (moment / tol) ** (1.0 / delta))
    return best


@lru_cache(maxsize=64)
def _wright_rule(alpha: float, power: int, tol: float, panels: int, order: int):
    tau_max = _tail_cutoff(alpha, power, tol)
    nodes, weights = leggauss(order)
    edges = np.linspace(0.0, tau_max, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    tau = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    return tau, w * tau ** power * wright_phi(alpha, tau)


def subordination_integral(alpha: float, x: float, power: int = 0,
                           tol: float = 1.0e-9, panels: int = 64,
                           order: int = 16) -> float:
    r""":math:`\int_0^\infty \tau^{p} \Phi_\alpha(\tau) e^{-x\tau}\,d\tau` by composite Gauss-Legendre.

    The domain is cut at a point where the moment bound on the tail falls
    below ``tol``.
    """
    tau, w = _wright_rule(float(alpha), int(power), tol, panels, order)
    return float(np.sum(w * np.exp(-x * tau)))


def verify_subordination(alpha: float, lam: float, t: float, kind: str = "S") -> float:
    r"""Residual between the Wright-subordinated semigroup and the closed form.

    ``kind="S"`` checks :math:`\int \Phi_\alpha(\tau) e^{-\lambda\tau t^\alpha}d\tau
    = E_{\alpha,1}(-\lambda t^\alpha)`; ``kind="P"`` checks
    :math:`\alpha t^{\alpha-1}\int \tau\Phi_\alpha(\tau) e^{-\lambda\tau t^\alpha}d\tau
    = t^{\alpha-1} E_{\alpha,\alpha}(-\lambda t^\alpha)`.
    """
    x = lam * t ** alpha
    if x > 10.0 + 1e-12:
        raise ValueError(f"lambda t^alpha = {x} is outside the oracle range [0, 10]")
    if kind == "S":
        return abs(subordination_integral(alpha, x, 0) - mittag_leffler(alpha, 1.0, -x))
    if kind == "P":
        if not t > 0:
            raise ValueError("P_alpha needs t > 0")
        quad = alpha * t ** (alpha - 1.0) * subordination_integral(alpha, x, 1)
        return abs(quad - t ** (alpha - 1.0) * mittag_leffler(alpha, alpha, -x))
    raise ValueError(f"unknown kind {kind!r}")

# }}}


def verify_stroock_varopoulos(u: NodalField, sigma: float, p: float,
                              oversample: int = 4) -> float:
    r"""Margin of the Stroock-Varopoulos inequality

    .. math::

        \int u^{p-1} (-\Delta_N)^{\sigma/2} u
        - \frac{4(p-1)}{p^2} \int \left|(-\Delta_N)^{\sigma/4} u^{p/2}\right|^2.

    ``u`` is taken as its band-limited interpolant and the nonlinear powers are
    resolved on a grid refined ``oversample`` times.
    """
    if not p > 1:
        raise ValueError(f"p must exceed 1: {p}")
    if np.min(u.values) < -1.0e-12:
        raise ValueError("Stroock-Varopoulos needs a non-negative field")
    grid = u.grid
    fine = GridSpec(grid.lengths, tuple(oversample * n for n in grid.points),
                    tuple(oversample * n for n in grid.points))
    coeffs = np.zeros(fine.modes)
    coeffs[tuple(slice(0, m) for m in grid.modes)] = grid.modal_from_values(u.values)
    uf = np.maximum(fine.values_from_modal(coeffs), 0.0)
    lam = fine.eigenvalues

    lhs = np.sum(fine.modal_from_values(uf ** (p - 1.0)) * lam ** (sigma / 2.0) * coeffs)
    w = fine.modal_from_values(uf ** (p / 2.0))
    rhs = 4.0 * (p - 1.0) / p ** 2 * np.sum(lam ** (sigma / 2.0) * w ** 2)
    return float(lhs - rhs)


def verify_symmetry(u: NodalField, v: NodalField, sigma: float) -> float:
    r""":math:`|\int u (-\Delta_N)^\sigma v - \int v (-\Delta_N)^\sigma u|` by quadrature."""
    _check_grid(u, v)
    grid = u.grid
    au = to_nodal(frac_laplacian(to_modal(u), sigma)).values
    av = to_nodal(frac_laplacian(to_modal(v), sigma)).values
    dv = grid.cell_volume
    return float(abs(np.sum(u.values * av) * dv - np.sum(v.values * au) * dv))
