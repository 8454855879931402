"""Verification suites run by ``fracvolterra verify``.

Each check returns one :class:`CheckResult`: a residual compared against an
upper threshold, or a margin/order compared against a lower one.
"""

from __future__ import annotations

import math
import time
from typing import Callable, NamedTuple

import numpy as np
from scipy.integrate import quad

from fracvolterra import fracops, model, solver, spectral, specfun
from fracvolterra.fracops import SampledFn, TimeMesh
from fracvolterra.model import ExponentialKernel, GammaKernel, ModelParams
from fracvolterra.spectral import GridSpec, NodalField

__all__ = ["CheckResult", "SUITES", "run_suite", "format_report"]


class CheckResult(NamedTuple):
    name: str
    value: float
    threshold: float
    passed: bool
    relation: str = "<="
    seconds: float = 0.0

    def line(self) -> str:
        return (f"{self.name},{self.value:.6e},{self.relation},{self.threshold:.6e},"
                f"{'PASS' if self.passed else 'FAIL'}")


def _le(name, value, threshold):
    value = float(value)
    return CheckResult(name, value, threshold, bool(value <= threshold))


def _ge(name, value, threshold):
    value = float(value)
    return CheckResult(name, value, threshold, bool(value >= threshold), ">=")


# {{{ specfun

def ml_goldens():
    e = specfun.mittag_leffler
    err = abs(e(1.0, 1.0, 1.0) - math.e)
    err = max(err, abs(e(0.5, 1.0, -1.0) - math.e * math.erfc(1.0)))
    for alpha in (0.3, 0.5, 0.8, 1.0):
        for beta in (0.5, 1.0, 1.7, 2.5):
            err = max(err, abs(e(alpha, beta, 0.0) - 1.0 / math.gamma(beta)))
    # E_{2,1}(-x^2) = cos(x) inside the series range of alpha = 2
    x = np.linspace(0.0, 2.0, 21)
    err = max(err, np.max(np.abs(e(2.0, 1.0, -x * x) - np.cos(x))))
    return _le("ml_goldens", err, 1.0e-9)


def ml_branch_overlap():
    """Series and integral branches agree around the series radius."""
    err = 0.0
    for alpha, beta in ((0.3, 1.0), (0.5, 1.0), (0.6, 0.6), (0.8, 1.8)):
        neg, _ = specfun._ml_series_radii(alpha, beta, specfun.DEFAULT_CONTROL)
        z = -np.linspace(0.5 * neg, neg, 9)
        n, _ = specfun._ml_series_plan(alpha, beta, float(np.max(np.abs(z))),
                                       specfun.DEFAULT_CONTROL)
        a = specfun._ml_series(alpha, beta, z, n)
        b = specfun._ml_contour(alpha, beta, z)
        err = max(err, float(np.max(np.abs(a - b))))
    return _le("ml_series_vs_contour", err, 1.0e-9)


def wright_closed_form():
    tau = np.linspace(0.0, 10.0, 101)
    err = np.max(np.abs(specfun.wright_phi(0.5, tau) - np.exp(-tau ** 2 / 4) / math.sqrt(math.pi)))
    return _le("wright_half_closed_form", err, 1.0e-9)


def wright_moments():
    err = 0.0
    for alpha in (0.3, 0.5, 0.8):
        for delta in (0.0, 1.0, 2.0):
            val = spectral.subordination_integral(alpha, 0.0, int(delta))
            ref = specfun.wright_moment(alpha, delta)
            err = max(err, abs(val - ref) / ref)
    return _le("wright_moments", err, 1.0e-8)


def gamma_reflection():
    x = np.linspace(-20.5, 20.5, 83)
    x = x[np.abs(x - np.round(x)) > 1e-3]
    lhs = specfun.gamma_fn(x) * specfun.gamma_fn(1.0 - x)
    rhs = math.pi / np.sin(math.pi * x)
    return _le("gamma_reflection", np.max(np.abs(lhs / rhs - 1.0)), 1.0e-12)

# }}}


# {{{ fracops

def fundamental_relation():
    res = []
    for N in (256, 512, 1024):
        f = SampledFn.from_callable(TimeMesh(1.0, N), lambda t: t ** 2)
        res.append(fracops.verify_fundamental(f, 0.5))
    order = math.log2(res[-2] / res[-1])
    return [_le("fundamental_relation_N1024", res[-1], 1.0e-3),
            _ge("fundamental_relation_order", order, 1.0)]


def int_by_parts_time():
    res = []
    for N in (256, 512, 1024):
        mesh = TimeMesh(1.0, N)
        x = SampledFn.from_callable(mesh, lambda t: t)
        y = SampledFn.from_callable(mesh, lambda t: 1.0 - t)
        res.append(fracops.verify_int_by_parts(x, y, 0.5))
    return [_le("int_by_parts_time_N1024", res[-1], 1.0e-4),
            _le("int_by_parts_time_halving", res[-1] / res[-2], 0.5)]


def int_by_parts_space():
    grid = GridSpec((math.pi,), (64,), (32,))
    rng = np.random.default_rng(7)
    u = NodalField(grid, grid.values_from_modal(rng.normal(size=32) / np.arange(1, 33) ** 2))
    v = NodalField(grid, grid.values_from_modal(rng.normal(size=32) / np.arange(1, 33) ** 2))
    return _le("int_by_parts_space", spectral.verify_symmetry(u, v, 0.6), 1.0e-12)


def gronwall_envelope():
    res = fracops.gronwall_residual(1.0, 1.0, 0.5, TimeMesh(1.0, 2048))
    return _le("gronwall_envelope", res, 1.0e-4)


def convex_chain():
    grid = GridSpec((math.pi,), (32,), (16,))
    params = ModelParams(0.6, 0.5, 1.0, 1.0, ExponentialKernel(1.0))
    mesh = TimeMesh(2.0, 1024)
    u0 = grid.sample(lambda x: 0.5 + 0.2 * np.cos(x))
    traj = solver.solve(params, grid, u0, solver.SolverConfig(mesh, scheme="L1Spectral"))
    V = traj.values
    worst = -math.inf
    for i in (0, grid.shape[0] // 2, grid.shape[0] - 1):
        x = SampledFn(mesh, V[:, i])
        worst = max(worst, fracops.verify_convex_chain(x, 0.6))
    return _le("convex_chain", worst, 1.0e-3)

# }}}


# {{{ spectral

def subordination():
    worst = 0.0
    for alpha in (0.3, 0.5, 0.8):
        for x in np.linspace(0.0, 10.0, 50):
            for kind in ("S", "P"):
                worst = max(worst, spectral.verify_subordination(alpha, x, 1.0, kind))
    return _le("subordination", worst, 1.0e-6)


def stroock_varopoulos():
    grid = GridSpec((math.pi,), (64,), (32,))
    rng = np.random.default_rng(11)
    worst = math.inf
    for _ in range(100):
        c = np.zeros(32)
        c[0] = 2.0 * math.sqrt(math.pi)
        c[1:8] = rng.normal(size=7) / np.arange(1, 8) ** 2
        v = grid.values_from_modal(c)
        v = v - min(0.0, v.min())
        sigma = rng.uniform(0.2, 1.0)
        p = rng.uniform(1.2, 4.0)
        worst = min(worst, spectral.verify_stroock_varopoulos(NodalField(grid, v), sigma, p))
    return _ge("stroock_varopoulos_margin", worst, -1.0e-8)


def transform_roundtrip():
    grid = GridSpec((math.pi, 2.0), (32, 24), (16, 12))
    rng = np.random.default_rng(3)
    c = rng.normal(size=grid.mode_shape)
    back = grid.modal_from_values(grid.values_from_modal(c))
    return _le("transform_roundtrip", np.max(np.abs(back - c)), 1.0e-12)

# }}}


# {{{ model

def carrying_root():
    rng = np.random.default_rng(5)
    worst, order_ok = 0.0, True
    for a, b in rng.uniform(1e-3, 10.0, size=(200, 2)):
        R = model.carrying_root(a, b)
        worst = max(worst, abs(1.0 + a * R - b * R * R) / (1.0 + a * R + b * R * R))
        order_ok &= R >= 1.0 / math.sqrt(b)
    return [_le("carrying_root_quadratic", worst, 1.0e-12),
            _ge("carrying_root_order", float(order_ok), 1.0)]


def kernel_normalization():
    worst = 0.0
    for k in (ExponentialKernel(0.5), ExponentialKernel(2.0), GammaKernel(0.7), GammaKernel(3.0)):
        worst = max(worst, abs(quad(k, 0.0, np.inf, epsabs=1e-14, epsrel=1e-13)[0] - 1.0))
    t = np.linspace(0.0, 8.0, 65)
    tab = model.TabulatedKernel(t, t * np.exp(-t))
    worst = max(worst, abs(float(tab.cumulative(8.0)) - 1.0))
    return _le("kernel_normalization", worst, 1.0e-10)


def memory_recursion():
    rng = np.random.default_rng(9)
    t = np.sort(np.concatenate([[0.0], rng.uniform(0.0, 5.0, 300)]))
    u = rng.uniform(0.0, 2.0, size=(len(t), 5))
    k = ExponentialKernel(1.3)
    rec = model.ExponentialMemory(k.gamma).run(t, u)
    direct = np.stack([model.kernel_weights(k, t, i) @ u[:i + 1] for i in range(len(t))])
    return _le("memory_recursion_vs_quadrature", np.max(np.abs(rec - direct)), 1.0e-8)


def stationary_constant():
    grid = GridSpec((math.pi,), (64,), (32,))
    b = 2.5
    phi = NodalField(grid, np.full(grid.shape, 1.0 / math.sqrt(b)))
    return _le("stationary_residual_constant", model.stationary_residual(phi, 0.5, b), 1.0e-12)

# }}}


# {{{ solver

def linear_mode():
    grid = GridSpec((math.pi,), (32,), (16,))
    params = ModelParams(0.6, 0.7, 1.0, 1.0)
    u0 = grid.sample(lambda x: grid.eigenfunction(2, x))
    out = []
    for name, mesh, scheme, tol in (
            ("linear_mode_mild_picard", TimeMesh(1.0, 200), "MildPicard", 1.0e-8),
            ("linear_mode_l1_spectral", TimeMesh.graded(1.0, 2048, 0.6), "L1Spectral", 1.0e-4)):
        traj = solver.solve(params, grid, u0, solver.SolverConfig(mesh, scheme=scheme,
                                                                  reaction=False))
        exact = specfun.mittag_leffler(0.6, 1.0, -(4.0 ** 0.7) * traj.times ** 0.6)
        ref = exact[:, None] * u0.values[None, :]
        scale = np.max(np.abs(ref), axis=1, keepdims=True)
        out.append(_le(name, np.max(np.abs(traj.values - ref) / scale), tol))
    return out


def oracle_equivalence():
    params = ModelParams(0.7, 0.5, 1.0, 1.0, ExponentialKernel(1.0))
    ref = solver.reference_ode(params, 0.2, TimeMesh(10.0, 100000))
    grid = GridSpec((math.pi,), (16,), (8,))
    u0 = NodalField(grid, np.full(grid.shape, 0.2))
    traj = solver.solve(params, grid, u0, solver.SolverConfig(TimeMesh(10.0, 1000)))
    gap = np.max(np.abs(traj.values - np.interp(traj.times, ref.t, ref.values)[:, None]))
    return _le("oracle_equivalence", gap, 1.0e-3)


def instability_growth():
    grid = GridSpec((math.pi,), (16,), (8,))
    ratio = solver.zero_instability_check(ModelParams(0.7, 0.5, 1.0, 1.0), grid, 1.0e-6)
    zero = solver.zero_instability_check(ModelParams(0.7, 0.5, 1.0, 1.0), grid, 0.0)
    return [_le("instability_growth", abs(ratio - 1.0), 0.05),
            _ge("zero_stays_zero", float(zero is None), 1.0)]

# }}}


SUITES: dict[str, tuple[Callable, ...]] = {
    "specfun": (ml_goldens, ml_branch_overlap, wright_closed_form, wright_moments,
                gamma_reflection),
    "fracops": (fundamental_relation, int_by_parts_time, gronwall_envelope, convex_chain),
    "spectral": (subordination, int_by_parts_space, stroock_varopoulos, transform_roundtrip),
    "model": (carrying_root, kernel_normalization, memory_recursion, stationary_constant),
    "solver": (linear_mode, oracle_equivalence, instability_growth),
}


def run_suite(name: str) -> list[CheckResult]:
    """Run one suite (or ``"all"``); a check that raises is reported as failed."""
    if name == "all":
        names = list(SUITES)
    elif name in SUITES:
        names = [name]
    else:
        raise ValueError(f"unknown suite {name!r}, expected one of {list(SUITES) + ['all']}")
    results = []
    for suite in names:
        for check in SUITES[suite]:
            start = time.perf_counter()
            try:
                out = check()
            except Exception as exc:  # noqa: BLE001, reported as a failed line
                out = CheckResult(f"{check.__name__}[{type(exc).__name__}]",
                                  math.nan, math.nan, False)
            elapsed = time.perf_counter() - start
            for r in out if isinstance(out, list) else [out]:
                results.append(r._replace(name=f"{suite}.{r.name}", seconds=elapsed))
    return results


def format_report(results) -> str:
    lines = ["name,value,relation,threshold,status"]
    lines += [r.line() for r in results]
    return "\n".join(lines)
