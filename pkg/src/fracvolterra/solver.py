r"""Time integration of the fractional Volterra population model.

Two schemes are provided.

``MildPicard``
    Fixed-point iteration on the mild formulation

    .. math::

        u(t) = S_\alpha(t) u_0 + \int_0^t P_\alpha(t - s) f(u)(s)\, ds,

    mode by mode, with product-integration weights that are exact for
    piecewise-linear ``f`` against the weakly singular kernel
    :math:`P_\alpha`. The iteration runs on the whole mesh first and on
    shorter windows if it stalls. Uniform meshes only.

``L1Spectral``
    L1 discretization of the Caputo derivative with the diffusion treated
    implicitly per mode and the reaction by a predictor-corrector. Defaults to
    a graded mesh.

:func:`reference_ode` integrates the space-homogeneous problem with a
fractional Adams predictor-corrector and serves as an independent oracle.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.signal import fftconvolve

from fracvolterra.fracops import SampledFn, TimeMesh
from fracvolterra.model import (
    ExponentialKernel,
    ExponentialMemory,
    ModelParams,
    kernel_lag_weights,
    kernel_weights,
    reaction_values,
    stationary_residual,
)
from fracvolterra.spectral import GridSpec, NodalField
from fracvolterra.specfun import ConvergenceError, gamma_fn, mittag_leffler

__all__ = [
    "SCHEMES",
    "SolverConfig",
    "Trajectory",
    "BlowUpError",
    "ConvergenceError",
    "solve",
    "reference_ode",
    "DiagnosticsReport",
    "run_diagnostics",
    "zero_instability_check",
    "gronwall_constant",
]

logger = logging.getLogger(__name__)

SCHEMES = ("MildPicard", "L1Spectral")


@dataclass(frozen=True)
class SolverConfig:
    """Settings of a single solve.

    ``reaction=False`` switches the right-hand side off entirely, leaving the
    linear fractional diffusion problem. ``diagnostics_every`` is the logging
    cadence in steps.
    """

    mesh: TimeMesh
    scheme: str = "MildPicard"
    picard_tol: float = 1.0e-10
    picard_max_iters: int = 50
    blowup_threshold: float = 1.0e6
    diagnostics_every: int = 100
    reaction: bool = True
    corrector_steps: int = 1

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}, expected one of {SCHEMES}")
        if self.scheme == "MildPicard" and not self.mesh.is_uniform:
            raise ValueError("MildPicard needs a uniform mesh")
        if not self.picard_tol > 0:
            raise ValueError(f"picard_tol must be positive: {self.picard_tol}")
        if self.picard_max_iters < 1:
            raise ValueError(f"picard_max_iters must be >= 1: {self.picard_max_iters}")
        if not self.blowup_threshold > 0:
            raise ValueError(f"blowup_threshold must be positive: {self.blowup_threshold}")
        if self.diagnostics_every < 1:
            raise ValueError(f"diagnostics_every must be >= 1: {self.diagnostics_every}")
        if self.corrector_steps < 0:
            raise ValueError(f"corrector_steps must be >= 0: {self.corrector_steps}")


@dataclass(frozen=True)
class Trajectory:
    """States on the time nodes with per-node ``(min, max, dist, mean)``.

    ``dist`` is the sup-norm distance to the constant state ``1/sqrt(b)``.
    """

    times: np.ndarray
    states: tuple
    diagnostics: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        times = np.array(self.times, dtype=float)
        if len(times) != len(self.states) or self.diagnostics.shape != (len(times), 4):
            raise ValueError("times, states and diagnostics must have matching length")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        times.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", tuple(self.states))

    @classmethod
    def from_values(cls, grid: GridSpec, times, values, u_star: float) -> "Trajectory":
        values = np.asarray(values, dtype=float)
        axes = tuple(range(1, values.ndim))
        diag = np.stack([
            values.min(axis=axes),
            values.max(axis=axes),
            np.abs(values - u_star).max(axis=axes),
            values.mean(axis=axes),
        ], axis=1)
        return cls(times, tuple(NodalField(grid, v) for v in values), diag)

    @property
    def grid(self) -> GridSpec:
        return self.states[0].grid

    @property
    def values(self) -> np.ndarray:
        """All states stacked along a leading time axis."""
        return np.stack([s.values for s in self.states])

    def __len__(self) -> int:
        return len(self.times)


class BlowUpError(RuntimeError):
    """The sup-norm exceeded the configured threshold.

    ``trajectory`` holds every state accepted before the exit time ``t_exit``.
    """

    def __init__(self, t_exit: float, sup_norm: float, trajectory: Trajectory | None):
        super().__init__(f"sup-norm {sup_norm:.6g} exceeded the threshold at t = {t_exit:.6g}")
        self.t_exit = t_exit
        self.sup_norm = sup_norm
        self.trajectory = trajectory


# {{{ shared pieces

class _Problem:
    """Arrays shared by both schemes: flattened modes, reaction, memory."""

    def __init__(self, params, grid, cfg, t):
        self.params = params
        self.grid = grid
        self.cfg = cfg
        self.t = t
        self.lam = (grid.eigenvalues ** params.sigma).ravel()
        self.modes = grid.mode_shape
        self.exp_memory = (ExponentialMemory(params.kernel.gamma)
                           if isinstance(params.kernel, ExponentialKernel) else None)

    def to_nodal(self, U):
        U = np.asarray(U)
        return self.grid.values_from_modal(U.reshape(U.shape[:-1] + self.modes))

    def to_modal(self, V):
        V = np.asarray(V)
        C = self.grid.modal_from_values(V)
        return C.reshape(C.shape[:-self.grid.dim] + (-1,))

    def reaction(self, V, C):
        if not self.cfg.reaction:
            return np.zeros_like(V)
        p = self.params
        return reaction_values(V, C, p.a, p.b)

    def check_kernel_support(self):
        T = self.t[-1]
        if self.cfg.reaction and T > self.params.kernel.support:
            raise ValueError(
                f"horizon {T} exceeds the tabulated kernel support {self.params.kernel.support}")


def _check_initial(u0: NodalField, grid: GridSpec, cfg: SolverConfig):
    if u0.grid != grid:
        raise ValueError("u0 lives on a different grid")
    # signed data only makes sense for the linear problem
    if cfg.reaction and np.min(u0.values) < 0:
        raise ValueError("initial data must be non-negative")
    sup = float(np.max(np.abs(u0.values)))
    return sup > cfg.blowup_threshold, sup

# }}}


# {{{ MildPicard

def _mild_lag_weights(alpha, lam, h, n):
    r"""Lag weights of :math:`\int_0^{t_k} P_\alpha(t_k - s) f(s) ds` per mode.

    Returns ``(W, B)`` of shapes ``(n + 1, M)`` and ``(n + 2, M)`` with the
    same layout as :func:`fracvolterra.model.kernel_lag_weights`. The first
    lag uses the closed-form primitives
    :math:`\tau^\alpha E_{\alpha,\alpha+1}` and
    :math:`\tau^{\alpha+1} E_{\alpha,\alpha+2}`, which absorb the endpoint
    singularity; the others use Gauss-Legendre on the smooth kernel.
    """
    lam = np.asarray(lam, dtype=float)
    A = np.zeros((n + 2, lam.size))
    B = np.zeros((n + 2, lam.size))

    # lag 1: tau in [0, h]
    F1 = h ** alpha * mittag_leffler(alpha, alpha + 1.0, -lam * h ** alpha)
    F2 = h ** (alpha + 1.0) * mittag_leffler(alpha, alpha + 2.0, -lam * h ** alpha)
    A[1] = (h * F1 - F2) / h
    B[1] = F2 / h

    # lags 2 .. n + 1
    x, w = leggauss(8)
    lags = np.arange(2, n + 2)
    s = 0.5 * (1.0 + x)                      # fraction of the step
    tau = ((lags - 1)[:, None] + s[None, :]) * h
    z = -(tau[:, :, None] ** alpha) * lam[None, None, :]
    p = tau[:, :, None] ** (alpha - 1.0) * mittag_leffler(alpha, alpha, z)
    wq = 0.5 * h * w
    A[2:] = np.einsum("q,lqm->lm", wq * s, p)
    B[2:] = np.einsum("q,lqm->lm", wq * (1.0 - s), p)

    W = A[:n + 1] + B[1:n + 2]
    return W, B


class _MildPicard:
    def __init__(self, prob: _Problem, U0):
        self.prob = prob
        cfg, p = prob.cfg, prob.params
        t = prob.t
        self.N = len(t) - 1
        self.h = t[1] - t[0]
        z = -(t[:, None] ** p.alpha) * prob.lam[None, :]
        self.free = mittag_leffler(p.alpha, 1.0, z) * U0[None, :]
        self.W, self.B = _mild_lag_weights(p.alpha, prob.lam, self.h, self.N)
        if not prob.exp_memory and cfg.reaction:
            self.KW, self.KB = kernel_lag_weights(p.kernel, self.h, self.N)

        self.U = np.zeros((self.N + 1, prob.lam.size))
        self.U[0] = U0
        self.V = np.zeros((self.N + 1,) + prob.grid.shape)
        self.V[0] = prob.to_nodal(U0)
        self.C = np.zeros_like(self.V)
        self.F = np.zeros_like(self.U)
        self.F[0] = prob.to_modal(prob.reaction(self.V[0], self.C[0]))

    def _memory(self, V, a, b):
        """Delay field on nodes ``a..b`` given nodal values on ``0..b``."""
        prob = self.prob
        if prob.exp_memory is not None:
            out = np.empty((b - a + 1,) + V.shape[1:])
            c = self.C[a - 1]
            for i, k in enumerate(range(a, b + 1)):
                c = prob.exp_memory.step(c, V[k - 1], V[k], self.h)
                out[i] = c
            return out
        conv = fftconvolve(self.KW[:b + 1].reshape((-1,) + (1,) * (V.ndim - 1)),
                           V[:b + 1], axes=0)[a:b + 1]
        corr = self.KB[a + 1:b + 2].reshape((-1,) + (1,) * (V.ndim - 1)) * V[0]
        return conv - corr

    def _update(self, F, a, b):
        hist = fftconvolve(self.W[:b + 1], F[:b + 1], axes=0)[a:b + 1]
        return self.free[a:b + 1] + hist - self.B[a + 1:b + 2] * F[0]

    def _window(self, a, b):
        """Relaxed Picard iteration on nodes ``a..b``; True on convergence.

        Each sweep applies the mild-solution map ``G`` and moves the iterate
        by ``omega (G(u) - u)``, with ``omega`` from Aitken's dynamic
        relaxation. Fixed points are those of plain Picard; the relaxation
        only repairs slow or oscillating contraction.
        """
        prob, cfg = self.prob, self.prob.cfg
        U, F = self.U.copy(), self.F.copy()
        # initial guess: the free evolution plus the known history
        U[a:b + 1] = self._update(F, a, b)
        omega, r_prev, best, stalled = 1.0, None, math.inf, 0
        for it in range(cfg.picard_max_iters):
            V = prob.to_nodal(U[a:b + 1])
            C = (self._memory(np.concatenate([self.V[:a], V]), a, b)
                 if cfg.reaction else np.zeros_like(V))
            F[a:b + 1] = prob.to_modal(prob.reaction(V, C))
            Unew = self._update(F, a, b)
            if not np.all(np.isfinite(Unew)):
                return False
            Vnew = prob.to_nodal(Unew)
            if np.max(np.abs(Vnew)) > 10.0 * cfg.blowup_threshold:
                return False
            delta = float(np.max(np.abs(Vnew - V)))
            if delta < cfg.picard_tol:
                self.U[a:b + 1] = Unew
                self.V[a:b + 1] = Vnew
                if cfg.reaction:
                    self.C[a:b + 1] = self._memory(np.concatenate([self.V[:a], Vnew]), a, b)
                    self.F[a:b + 1] = prob.to_modal(prob.reaction(Vnew, self.C[a:b + 1]))
                logger.debug("window [%d, %d] converged in %d sweeps", a, b, it + 1)
                return True

            # no progress over several sweeps means the window is too long
            if delta < 0.9 * best:
                best, stalled = delta, 0
            else:
                stalled += 1
                if stalled >= 4:
                    return False

            r = (Unew - U[a:b + 1]).ravel()
            if r_prev is not None:
                dr = r - r_prev
                denom = float(dr @ dr)
                if denom > 0:
                    omega = min(max(-omega * float(r_prev @ dr) / denom, 1.0e-2), 2.0)
            U[a:b + 1] += omega * r.reshape(Unew.shape)
            r_prev = r
        return False

    def run(self):
        cfg = self.prob.cfg
        a, size = 1, self.N
        while a <= self.N:
            b = min(self.N, a + size - 1)
            if self._window(a, b):
                sup = np.abs(self.V[a:b + 1]).reshape(b - a + 1, -1).max(axis=1)
                over = np.nonzero(sup > cfg.blowup_threshold)[0]
                if over.size:
                    return a + int(over[0])
                logger.info("MildPicard reached t = %.6g", self.prob.t[b])
                a = b + 1
                size *= 2
            elif size > 1:
                size //= 2
            else:
                raise ConvergenceError(
                    f"Picard iteration stalled at t = {self.prob.t[a]:.6g} "
                    "on a single-step window")
        return None

# }}}


# {{{ L1Spectral

class _L1Spectral:
    def __init__(self, prob: _Problem, U0):
        self.prob = prob
        p = prob.params
        t = prob.t
        self.N = len(t) - 1
        self.U = np.zeros((self.N + 1, prob.lam.size))
        self.U[0] = U0
        self.V = np.zeros((self.N + 1,) + prob.grid.shape)
        self.V[0] = prob.to_nodal(U0)
        self.C = np.zeros_like(self.V)
        self.c_gamma = 1.0 / gamma_fn(2.0 - p.alpha)

    def _memory(self, k, Vk):
        prob = self.prob
        t = prob.t
        if prob.exp_memory is not None:
            return prob.exp_memory.step(self.C[k - 1], self.V[k - 1], Vk, t[k] - t[k - 1])
        w = kernel_weights(prob.params.kernel, t, k)
        return np.tensordot(w[:k], self.V[:k], axes=(0, 0)) + w[k] * Vk

    def step(self, k):
        prob, cfg = self.prob, self.prob.cfg
        t = prob.t
        alpha = prob.params.alpha
        tau = t[1:k + 1] - t[:k]
        if alpha < 1.0:
            a = self.c_gamma * ((t[k] - t[:k]) ** (1.0 - alpha)
                                - (t[k] - t[1:k + 1]) ** (1.0 - alpha)) / tau
        else:
            # backward Euler, the alpha -> 1 limit of the L1 weights
            a = np.zeros(k)
            a[-1] = 1.0 / tau[-1]
        dU = np.diff(self.U[:k], axis=0)
        hist = a[:k - 1] @ dU if k > 1 else 0.0
        rhs0 = a[k - 1] * self.U[k - 1] - hist
        denom = a[k - 1] + prob.lam

        Vk = self.V[k - 1]
        for _ in range(1 + cfg.corrector_steps):
            C = self._memory(k, Vk) if cfg.reaction else 0.0
            Fk = prob.to_modal(prob.reaction(Vk, C))
            Uk = (rhs0 + Fk) / denom
            Vk = prob.to_nodal(Uk)
        self.U[k] = Uk
        self.V[k] = Vk
        if cfg.reaction:
            self.C[k] = self._memory(k, Vk)

    def run(self):
        cfg = self.prob.cfg
        for k in range(1, self.N + 1):
            self.step(k)
            sup = float(np.max(np.abs(self.V[k])))
            if not math.isfinite(sup) or sup > cfg.blowup_threshold:
                return k
            if k % cfg.diagnostics_every == 0:
                logger.info("L1Spectral t = %.6g", self.prob.t[k])
        return None

# }}}


def solve(params: ModelParams, grid: GridSpec, u0: NodalField,
          cfg: SolverConfig) -> Trajectory:
    """Integrate from ``u0`` over ``cfg.mesh``.

    ``u0`` is projected onto the retained modes; the stored initial state is
    that projection. Raises :class:`BlowUpError` (carrying the partial
    trajectory) when the sup-norm passes ``cfg.blowup_threshold``, and
    :class:`ConvergenceError` when the Picard iteration cannot be made to
    contract.
    """
    t = cfg.mesh.nodes
    tripped, sup0 = _check_initial(u0, grid, cfg)
    prob = _Problem(params, grid, cfg, t)
    prob.check_kernel_support()
    U0 = prob.to_modal(u0.values)
    u_star = params.u_star

    if tripped:
        partial = Trajectory.from_values(grid, t[:1], u0.values[None], u_star)
        raise BlowUpError(0.0, sup0, partial)

    engine = (_MildPicard if cfg.scheme == "MildPicard" else _L1Spectral)(prob, U0)
    exit_index = engine.run()
    if exit_index is not None:
        partial = Trajectory.from_values(grid, t[:exit_index], engine.V[:exit_index], u_star)
        raise BlowUpError(float(t[exit_index]),
                          float(np.max(np.abs(engine.V[exit_index]))), partial)
    return Trajectory.from_values(grid, t, engine.V, u_star)


# {{{ scalar oracle

def _adams_weights(alpha, n):
    l = np.arange(n + 2, dtype=float)
    b = (l[1:] ** alpha - l[:-1] ** alpha)              # b[m], m = 0..n
    c = np.zeros(n + 2)
    lp = l[1:]
    c[1:] = (lp + 1.0) ** (alpha + 1.0) - 2.0 * lp ** (alpha + 1.0) + (lp - 1.0) ** (alpha + 1.0)
    return b, c


def reference_ode(params: ModelParams, u0: float, mesh: TimeMesh,
                  prehistory: bool = False,
                  blowup_threshold: float = 1.0e6) -> SampledFn:
    r"""Space-homogeneous problem by a fractional Adams predictor-corrector.

    Solves :math:`\mathcal{D}^\alpha U = U(1 + aU - bU^2) - a U (K * U)` on a
    uniform mesh. With ``prehistory=True`` the past is filled with ``u0``,
    i.e. the delay term becomes :math:`(K*U)(t) + u_0 \int_t^\infty K`.
    """
    if not mesh.is_uniform:
        raise ValueError("the Adams scheme needs a uniform mesh")
    if u0 < 0:
        raise ValueError("initial value must be non-negative")
    alpha, a, b = params.alpha, params.a, params.b
    kernel = params.kernel
    t = mesh.nodes
    N = mesh.N
    h = mesh.T / N
    if mesh.T > kernel.support:
        raise ValueError(f"horizon exceeds the kernel support {kernel.support}")

    bw, cw = _adams_weights(alpha, N)
    b_rev = bw[::-1].copy()              # b_rev[N - m] = b[m]
    c_rev = cw[::-1].copy()
    cp = h ** alpha / gamma_fn(alpha + 1.0)
    cc = h ** alpha / gamma_fn(alpha + 2.0)
    tail = u0 * (1.0 - kernel.cumulative(t)) if prehistory else np.zeros(N + 1)

    memory = ExponentialMemory(kernel.gamma) if isinstance(kernel, ExponentialKernel) else None
    if memory is None:
        KW, KB = kernel_lag_weights(kernel, h, N)
        KW_rev = KW[::-1].copy()
    else:
        decay, w0, w1 = memory.coefficients(h)

    U = np.zeros(N + 1)
    conv = np.zeros(N + 1)
    f = np.zeros(N + 1)
    U[0] = u0
    f[0] = reaction_values(u0, tail[0], a, b)

    def delay(k, Uk):
        if memory is not None:
            return decay * conv[k - 1] + w0 * U[k - 1] + w1 * Uk
        # weights W[k - j] for j >= 1, W[k] - B[k + 1] for j = 0
        s = np.dot(KW_rev[N - k:N], U[:k]) + KW[0] * Uk
        return s - KB[k + 1] * U[0]

    for k in range(N):
        n = k + 1
        pred = u0 + cp * np.dot(b_rev[N - k:N + 1], f[:n])
        # corrector weights: a_0 = k^{a+1} - (k - alpha)(k+1)^alpha, then c[k - j + 1]
        a0 = k ** (alpha + 1.0) - (k - alpha) * (k + 1.0) ** alpha
        known = a0 * f[0] + (np.dot(c_rev[N + 1 - k:N + 1], f[1:n]) if k > 0 else 0.0)
        cn = delay(n, pred)
        Un = u0 + cc * (known + reaction_values(pred, cn + tail[n], a, b))
        conv[n] = delay(n, Un)
        U[n] = Un
        f[n] = reaction_values(Un, conv[n] + tail[n], a, b)
        if not math.isfinite(Un) or abs(Un) > blowup_threshold:
            raise BlowUpError(float(t[n]), abs(Un), None)
    return SampledFn(mesh, U)

# }}}


# {{{ diagnostics

class DiagnosticsReport(NamedTuple):
    """Monitors of a finished run.

    ``increments[k]`` is the L2 distance between states ``k`` and ``k + 1``.
    """

    min_margin: float
    max_value: float
    bound: float
    positivity_ok: bool
    bound_ok: bool
    dist_to_equilibrium: np.ndarray
    increments: np.ndarray
    continuity_modulus: float
    final_residual: float

    def increments_from(self, times, t_start: float) -> np.ndarray:
        return self.increments[np.asarray(times)[:-1] >= t_start]


def run_diagnostics(traj: Trajectory, params: ModelParams,
                    delta: float = 0.0,
                    positivity_tol: float = 1.0e-8,
                    bound_tol: float = 1.0e-6) -> DiagnosticsReport:
    """Positivity, boundedness, equilibrium distance and continuity monitors.

    ``delta`` is the start of the window over which the continuity modulus
    (largest L2 increment between consecutive states) is taken.
    """
    V = traj.values
    axes = tuple(range(1, V.ndim))
    min_margin = float(np.min(traj.diagnostics[:, 0]))
    max_value = float(np.max(traj.diagnostics[:, 1]))
    bound = max(float(np.max(np.abs(V[0]))), params.R)
    inc = np.sqrt(np.sum(np.diff(V, axis=0) ** 2, axis=axes) * traj.grid.cell_volume)
    window = inc[traj.times[:-1] >= delta]
    return DiagnosticsReport(
        min_margin=min_margin,
        max_value=max_value,
        bound=bound,
        positivity_ok=min_margin >= -positivity_tol,
        bound_ok=max_value <= bound * (1.0 + bound_tol),
        dist_to_equilibrium=traj.diagnostics[:, 2].copy(),
        increments=inc,
        continuity_modulus=float(np.max(window)) if window.size else 0.0,
        final_residual=stationary_residual(traj.states[-1], params.sigma, params.b),
    )


def gronwall_constant(params: ModelParams, rho: float) -> float:
    r"""Lipschitz bound of the reaction on the ball of radius ``rho``.

    For :math:`\|u\|, \|v\| \le \rho`, the delay term has unit-mass kernel, so
    :math:`|f(u) - f(v)| \le (1 + 2a\rho + 3b\rho^2 + 2a\rho) \|u - v\|`.
    """
    return 1.0 + 4.0 * params.a * rho + 3.0 * params.b * rho ** 2


def zero_instability_check(params: ModelParams, grid: GridSpec, eps: float,
                           scheme: str = "MildPicard", N: int = 200) -> float | None:
    r"""Growth of a small constant state over ``[0, 1]``.

    Returns :math:`u(1) / (\epsilon E_{\alpha,1}(1))`, close to one when the
    linearization :math:`\mathcal{D}^\alpha u = u` governs. For ``eps = 0``
    the solution stays identically zero and ``None`` is returned.
    """
    if not 0 <= eps <= 1.0e-4:
        raise ValueError(f"eps must lie in [0, 1e-4]: {eps}")
    mesh = TimeMesh(1.0, N) if scheme == "MildPicard" else TimeMesh.graded(1.0, N, params.alpha)
    cfg = SolverConfig(mesh, scheme=scheme)
    u0 = NodalField(grid, np.full(grid.shape, eps))
    traj = solve(params, grid, u0, cfg)
    final = traj.states[-1].values
    if eps == 0:
        if np.any(final != 0):
            raise AssertionError("zero initial data left the zero state")
        return None
    growth = mittag_leffler(params.alpha, 1.0, 1.0)
    return float(np.mean(final) / (eps * growth))

# }}}
