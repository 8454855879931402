"""Acceptance criteria 1-10, one recorded line per criterion.

Each test records its numbers with the session ``acceptance`` log, which
prints a pass/fail line per criterion at the end of the run, and then asserts
the same thresholds and time budget.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from fracvolterra import fracops, solver, spectral
from fracvolterra.fracops import SampledFn, TimeMesh
from fracvolterra.harness import suites
from fracvolterra.harness.config import random_smooth_field
from fracvolterra.model import ExponentialKernel, GammaKernel, ModelParams
from fracvolterra.model import stationary_residual
from fracvolterra.solver import SolverConfig, run_diagnostics, solve
from fracvolterra.spectral import GridSpec, NodalField
from fracvolterra.specfun import mittag_leffler, wright_phi

# e * erfc(1) to 20 digits
E_ERFC_1 = 0.42758357615580700441


def _assert(entry):
    assert entry.passed, entry.line()


# {{{ 1: special-function goldens

def test_special_function_goldens(acceptance):
    with acceptance.timer() as clock:
        e_err = abs(mittag_leffler(1.0, 1.0, 1.0) - math.e)
        zero_err = max(abs(mittag_leffler(alpha, beta, 0.0) - 1.0 / math.gamma(beta))
                       for alpha in (0.1, 0.3, 0.5, 0.8, 1.0)
                       for beta in (0.1, 0.5, 1.0, 1.7, 3.0))
        erfc_err = abs(mittag_leffler(0.5, 1.0, -1.0) - E_ERFC_1)
        tau = np.linspace(0.0, 10.0, 201)
        phi_err = float(np.max(np.abs(
            wright_phi(0.5, tau) - np.exp(-tau ** 2 / 4.0) / math.sqrt(math.pi))))
    _assert(acceptance.record(1, "special-function goldens", {
        "E11(1)": (e_err, "<=", 1e-9),
        "Eab(0)": (zero_err, "<=", 1e-9),
        "E05(-1)": (erfc_err, "<=", 1e-9),
        "Phi_1/2": (phi_err, "<=", 1e-9),
    }, clock["seconds"], 1.0))

# }}}


# {{{ 2: subordination

def test_subordination_identity(acceptance):
    with acceptance.timer() as clock:
        worst = 0.0
        for alpha in (0.3, 0.5, 0.8):
            for x in np.linspace(0.0, 10.0, 50):
                worst = max(worst, spectral.verify_subordination(alpha, x, 1.0, "S"))
                worst = max(worst, spectral.verify_subordination(alpha, x, 1.0, "P"))
    _assert(acceptance.record(2, "subordination identity", {
        "max residual": (worst, "<=", 1e-6),
    }, clock["seconds"], 30.0))

# }}}


# {{{ 3: linear-mode exactness

def _linear_mode_error(scheme, mesh):
    grid = GridSpec((math.pi,), (32,), (16,))
    params = ModelParams(0.6, 0.7, 1.0, 1.0)
    u0 = grid.sample(lambda x: grid.eigenfunction(2, x))
    traj = solve(params, grid, u0, SolverConfig(mesh, scheme=scheme, reaction=False))
    decay = mittag_leffler(0.6, 1.0, -(4.0 ** 0.7) * traj.times ** 0.6)
    exact = decay[:, None] * u0.values[None, :]
    return float(np.max(np.abs(traj.values - exact)) / np.max(np.abs(u0.values)))


def test_linear_mode_exactness(acceptance):
    with acceptance.timer() as clock:
        mild = _linear_mode_error("MildPicard", TimeMesh(1.0, 256))
        l1 = _linear_mode_error("L1Spectral", TimeMesh.graded(1.0, 2048, 0.6))
    _assert(acceptance.record(3, "linear-mode exactness", {
        "MildPicard rel": (mild, "<=", 1e-8),
        "L1Spectral": (l1, "<=", 1e-4),
    }, clock["seconds"], 10.0))

# }}}


# {{{ 4: homogeneous oracle

def test_homogeneous_oracle(acceptance):
    params = ModelParams(0.7, 0.5, 1.0, 1.0, ExponentialKernel(1.0))
    grid = GridSpec((math.pi,), (16,), (8,))
    u0 = NodalField(grid, np.full(grid.shape, 0.2))
    with acceptance.timer() as clock:
        ref = solver.reference_ode(params, 0.2, TimeMesh(10.0, 100_000))
        gaps = {}
        for scheme, mesh in (("MildPicard", TimeMesh(10.0, 1000)),
                             ("L1Spectral", TimeMesh.graded(10.0, 2000, 0.7))):
            traj = solve(params, grid, u0, SolverConfig(mesh, scheme=scheme))
            oracle = np.interp(traj.times, ref.t, ref.values)
            gaps[scheme] = float(np.max(np.abs(traj.values - oracle[:, None])))
    _assert(acceptance.record(4, "homogeneous oracle", {
        "MildPicard gap": (gaps["MildPicard"], "<=", 1e-3),
        "L1Spectral gap": (gaps["L1Spectral"], "<=", 1e-3),
    }, clock["seconds"], 60.0))

# }}}


# {{{ 5: positivity and bound

def _random_configs(n, seed=2024):
    rng = np.random.default_rng(seed)
    grid = GridSpec((math.pi,), (32,), (16,))
    for i in range(n):
        alpha, sigma = rng.uniform(0.3, 0.9, size=2)
        a, b = rng.uniform(0.5, 4.0, size=2)
        gamma = rng.uniform(0.5, 2.0)
        kernel = ExponentialKernel(gamma) if i % 2 == 0 else GammaKernel(gamma)
        mean = rng.uniform(0.1, 1.5)
        u0 = NodalField(grid, random_smooth_field(grid, rng, mean, 0.5 * mean))
        yield ModelParams(alpha, sigma, a, b, kernel), grid, u0


def test_positivity_and_bound(acceptance):
    worst_min, worst_excess = math.inf, -math.inf
    with acceptance.timer() as clock:
        for params, grid, u0 in _random_configs(20):
            for mesh, scheme in ((TimeMesh(5.0, 500), "MildPicard"),
                                 (TimeMesh.graded(5.0, 500, params.alpha), "L1Spectral")):
                traj = solve(params, grid, u0, SolverConfig(mesh, scheme=scheme))
                diag = run_diagnostics(traj, params)
                worst_min = min(worst_min, diag.min_margin)
                worst_excess = max(worst_excess, diag.max_value / diag.bound - 1.0)
    _assert(acceptance.record(5, "positivity and bound (20 configs x 2 schemes)", {
        "min u": (worst_min, ">=", -1e-8),
        "max u/bound - 1": (worst_excess, "<=", 1e-6),
    }, clock["seconds"], 300.0))

# }}}


# {{{ 6 and 7: long-horizon relaxation

RELAX_PARAMS = ModelParams(0.8, 0.5, 1.0, 1.0, ExponentialKernel(1.0))
RELAX_GRID = GridSpec((math.pi,), (64,), (32,))


def _relax_initial():
    return RELAX_GRID.sample(lambda x: 0.5 + 0.2 * np.cos(x))


@pytest.fixture(scope="module")
def relaxation_run(acceptance):
    with acceptance.timer() as clock:
        traj = solve(RELAX_PARAMS, RELAX_GRID, _relax_initial(),
                     SolverConfig(TimeMesh(200.0, 2000), scheme="MildPicard"))
    return traj, clock["seconds"]


def test_long_horizon_asymptotics(acceptance, relaxation_run):
    traj, seconds = relaxation_run
    with acceptance.timer() as clock:
        diag = run_diagnostics(traj, RELAX_PARAMS, delta=1.0)
        dist = float(diag.dist_to_equilibrium[-1])
        inc = diag.increments_from(traj.times, 1.0)
        # each increment against the bound set by all earlier ones
        running = np.maximum.accumulate(inc)[:-1]
        growth = float(np.max(inc[1:] / running))
        tail = float(inc[-1] / inc.max())
    _assert(acceptance.record(6, "asymptotics u(200) -> 1/sqrt(b)", {
        "|u(200)-1|_inf": (dist, "<=", 0.02),
        "increment growth": (growth, "<=", 2.0),
        "tail/peak increment": (tail, "<=", 1e-3),
    }, seconds + clock["seconds"], 120.0))


def test_stationary_residual(acceptance, relaxation_run):
    traj, _ = relaxation_run
    with acceptance.timer() as clock:
        const = max(stationary_residual(NodalField(RELAX_GRID, np.full(RELAX_GRID.shape,
                                                                         1.0 / math.sqrt(b))),
                                        0.5, b)
                    for b in (0.25, 1.0, 2.5))
        final = stationary_residual(traj.states[-1], RELAX_PARAMS.sigma, RELAX_PARAMS.b)
    _assert(acceptance.record(7, "stationary residual", {
        "phi=1/sqrt(b)": (const, "<=", 1e-12),
        "final state": (final, "<=", 5e-2),
    }, clock["seconds"], 1.0))

# }}}


# {{{ 8: instability of zero

def test_zero_instability(acceptance):
    grid = GridSpec((math.pi,), (16,), (8,))
    params = ModelParams(0.7, 0.5, 1.0, 1.0)
    with acceptance.timer() as clock:
        ratio = solver.zero_instability_check(params, grid, 1.0e-6)
    _assert(acceptance.record(8, "instability of zero", {
        "|ratio - 1|": (abs(ratio - 1.0), "<=", 0.05),
    }, clock["seconds"], 10.0))

# }}}


# {{{ 9: lemma suite

def test_lemma_suite(acceptance):
    with acceptance.timer() as clock:
        fundamental, order = suites.fundamental_relation()
        ibp_res = []
        for N in (256, 512, 1024):
            mesh = TimeMesh(1.0, N)
            x = SampledFn.from_callable(mesh, lambda t: t)
            y = SampledFn.from_callable(mesh, lambda t: 1.0 - t)
            ibp_res.append(fracops.verify_int_by_parts(x, y, 0.5))
        halving = max(ibp_res[1] / ibp_res[0], ibp_res[2] / ibp_res[1])
        chain = suites.convex_chain()
        sv = suites.stroock_varopoulos()
        gronwall = fracops.gronwall_residual(1.0, 1.0, 0.5, TimeMesh(1.0, 2048))
    _assert(acceptance.record(9, "lemma suite", {
        "fundamental N1024": (fundamental.value, "<=", 1e-3),
        "fundamental order": (order.value, ">=", 1.0),
        "int-by-parts ratio": (halving, "<=", 0.5),
        "convex chain": (chain.value, "<=", 1e-3),
        "Stroock-Varopoulos": (sv.value, ">=", -1e-8),
        "Gronwall": (gronwall, "<=", 1e-4),
    }, clock["seconds"], 180.0))

# }}}


# {{{ 10: scheme cross-consistency

def test_scheme_cross_consistency(acceptance):
    with acceptance.timer() as clock:
        mesh = TimeMesh(5.0, 2000)
        runs = [solve(RELAX_PARAMS, RELAX_GRID, _relax_initial(),
                      SolverConfig(mesh, scheme=scheme)).values
                for scheme in ("MildPicard", "L1Spectral")]
        gap = float(np.max(np.abs(runs[0] - runs[1])))
    _assert(acceptance.record(10, "scheme cross-consistency on [0, 5]", {
        "Linf(Linf) gap": (gap, "<=", 5e-3),
    }, clock["seconds"], 120.0))

# }}}

