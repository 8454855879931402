from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad

from fracvolterra.model import (
    ExponentialKernel,
    ExponentialMemory,
    GammaKernel,
    ModelParams,
    TabulatedKernel,
    carrying_root,
    convolve_history,
    equilibrium_report,
    kernel_eval,
    kernel_lag_weights,
    kernel_weights,
    linear_spectrum,
    load_kernel_csv,
    reaction,
    stationary_residual,
)
from fracvolterra.solver import Trajectory
from fracvolterra.spectral import GridSpec, NodalField

GRID = GridSpec((math.pi,), (64,), (32,))


def _field(value):
    return NodalField(GRID, np.broadcast_to(value, GRID.shape))


# {{{ parameters and constant states

def test_params_ranges_are_enforced_together():
    with pytest.raises(ValueError) as err:
        ModelParams(1.5, 1.0, 0.0, -1.0)
    msg = str(err.value)
    for name in ("alpha", "sigma", "a must", "b must"):
        assert name in msg
    p = ModelParams(0.5, 0.5, 1.0, 4.0)
    assert p.u_star == 0.5
    assert p.R == pytest.approx(carrying_root(1.0, 4.0))


@pytest.mark.parametrize(("a", "b", "expected"), [
    (1.0, 1.0, (1.0 + math.sqrt(5.0)) / 2.0),
    (1e-12, 1.0, 1.0),
    (2.0, 3.0, 1.0),
])
def test_carrying_root_values(a, b, expected):
    assert carrying_root(a, b) == pytest.approx(expected, rel=1e-12)


def test_carrying_root_domain():
    with pytest.raises(ValueError):
        carrying_root(0.0, 1.0)
    with pytest.raises(ValueError):
        carrying_root(1.0, -1.0)


def test_equilibrium_report():
    rep = equilibrium_report(1.0, 1.0)
    assert rep.R == pytest.approx(1.6180339887, abs=1e-10)
    assert rep.u_star == 1.0 and rep.satisfies_order
    assert abs(1.0 + rep.R - rep.R ** 2) <= 1e-12

# }}}


# {{{ kernels

def test_exponential_and_gamma_kernel_values():
    assert kernel_eval(ExponentialKernel(2.0), 0.0) == 2.0
    assert kernel_eval(GammaKernel(1.0), 1.0) == pytest.approx(0.3678794412, abs=1e-10)
    with pytest.raises(ValueError):
        kernel_eval(ExponentialKernel(), -1.0)
    with pytest.raises(ValueError):
        GammaKernel(0.0)


@pytest.mark.parametrize("kernel", [ExponentialKernel(0.3), ExponentialKernel(4.0),
                                    GammaKernel(0.5), GammaKernel(2.5)])
def test_builtin_kernels_unit_mass_and_cumulative(kernel):
    mass = quad(kernel, 0.0, np.inf, epsabs=1e-14, epsrel=1e-13)[0]
    assert mass == pytest.approx(1.0, abs=1e-10)
    t = 1.7
    assert kernel.cumulative(t) == pytest.approx(quad(kernel, 0.0, t, epsabs=1e-14)[0],
                                                 abs=1e-12)


def test_tabulated_kernel_normalised_and_bounded(tmp_path):
    t = np.linspace(0.0, 10.0, 81)
    k = 3.0 * t * np.exp(-t)
    tab = TabulatedKernel(t, k)
    assert float(tab.cumulative(10.0)) == pytest.approx(1.0, abs=1e-12)
    assert np.all(tab(np.linspace(0, 10, 333)) >= 0)
    with pytest.raises(ValueError, match="support"):
        tab(10.5)

    path = tmp_path / "kernel.csv"
    path.write_text("t,K\n" + "".join(f"{float(a)!r},{float(b)!r}\n" for a, b in zip(t, k)))
    loaded = load_kernel_csv(path)
    np.testing.assert_array_equal(loaded.values, tab.values)


@pytest.mark.parametrize(("nodes", "values"), [
    ([0.0, 1.0], [1.0, -1.0]),
    ([0.5, 1.0], [1.0, 1.0]),
    ([0.0, 0.0, 1.0], [1.0, 1.0, 1.0]),
    ([0.0, 1.0], [0.0, 0.0]),
])
def test_tabulated_kernel_rejects_bad_tables(nodes, values):
    with pytest.raises(ValueError):
        TabulatedKernel(np.array(nodes), np.array(values))

# }}}


# {{{ history convolution

def _traj(times, values):
    return Trajectory.from_values(GRID, times, values, 1.0)


def test_convolve_history_empty_and_constant():
    t = np.linspace(0.0, 3.0, 61)
    traj = _traj(t, np.full((61,) + GRID.shape, 0.7))
    assert np.all(convolve_history(traj, ExponentialKernel(), 0).values == 0.0)
    for gamma in (0.5, 2.0):
        k = ExponentialKernel(gamma)
        for recursive in (True, False):
            c = convolve_history(traj, k, 60, recursive=recursive).values
            np.testing.assert_allclose(c, 0.7 * -math.expm1(-gamma * 3.0), rtol=1e-12)


def test_recursive_update_matches_quadrature_on_random_history():
    rng = np.random.default_rng(8)
    t = np.sort(np.concatenate([[0.0], rng.uniform(0.0, 4.0, 200)]))
    values = rng.uniform(0.0, 2.0, size=(len(t),) + GRID.shape)
    traj = _traj(t, values)
    k = ExponentialKernel(1.7)
    for idx in (1, 50, len(t) - 1):
        rec = convolve_history(traj, k, idx, recursive=True).values
        direct = convolve_history(traj, k, idx, recursive=False).values
        assert np.max(np.abs(rec - direct)) <= 1e-8


def test_recursion_needs_exponential_kernel():
    traj = _traj(np.linspace(0, 1, 5), np.zeros((5,) + GRID.shape))
    with pytest.raises(ValueError):
        convolve_history(traj, GammaKernel(), 3, recursive=True)
    with pytest.raises(IndexError):
        convolve_history(traj, GammaKernel(), 5)


def test_memory_coefficients_small_step_branch_is_continuous():
    mem = ExponentialMemory(1.0)
    below = np.array(mem.coefficients(0.999e-3))
    above = np.array(mem.coefficients(1.001e-3))
    assert np.max(np.abs(below - above)) <= 1e-5
    decay, w0, w1 = mem.coefficients(0.3)
    # constants are reproduced exactly: c = 1 - e^{-gamma h} from c = 0
    assert w0 + w1 == pytest.approx(1.0 - decay, rel=1e-15)


def test_lag_weights_match_general_weights():
    k = GammaKernel(1.3)
    h, n = 0.05, 40
    W, B = kernel_lag_weights(k, h, n)
    t = h * np.arange(n + 1)
    for idx in (1, 7, n):
        w = kernel_weights(k, t, idx)
        expected = np.array([W[idx - j] for j in range(idx + 1)])
        expected[0] = W[idx] - B[idx + 1]
        np.testing.assert_allclose(w, expected, rtol=1e-13, atol=1e-16)

# }}}


# {{{ reaction and stationary problem

def test_reaction_cases():
    a, b = 1.3, 2.0
    us = 1.0 / math.sqrt(b)
    assert np.max(np.abs(reaction(_field(us), _field(us), a, b).values)) <= 1e-15
    R = carrying_root(a, b)
    np.testing.assert_allclose(reaction(_field(R), _field(R), a, b).values, -a * R * R,
                               rtol=1e-12)
    assert np.all(reaction(_field(0.0), _field(0.4), a, b).values == 0.0)
    other = GridSpec((math.pi,), (32,), (16,))
    with pytest.raises(ValueError):
        reaction(_field(1.0), NodalField(other, np.zeros(32)), a, b)


def test_stationary_residual_constant_and_zero():
    for b in (0.3, 1.0, 4.0):
        assert stationary_residual(_field(1.0 / math.sqrt(b)), 0.5, b) <= 1e-12
    assert stationary_residual(_field(0.0), 0.5, 1.0) == 0.0


def test_stationary_residual_against_dense_quadrature():
    x = GRID.coords[0]
    e1 = GRID.eigenfunction(1, x)
    phi = NodalField(GRID, 1.0 + 0.1 * e1)

    def e1f(s):
        return math.sqrt(2.0 / math.pi) * math.cos(s)

    def integrand(s):
        p = 1.0 + 0.1 * e1f(s)
        # lambda_1 = 1 on [0, pi], so (-Delta)^sigma phi = 0.1 e_1
        return (0.1 * e1f(s) - p * (1.0 - p * p)) ** 2

    oracle = math.sqrt(quad(integrand, 0.0, math.pi, epsabs=1e-14, epsrel=1e-13)[0])
    assert stationary_residual(phi, 0.5, 1.0) == pytest.approx(oracle, abs=1e-8)
    assert oracle > 0.1


def test_linear_spectrum_cases():
    spec = linear_spectrum(GRID, 0.5)
    assert spec.eigenvalues[0] == 1.0
    assert spec.eigenvalues[1] == pytest.approx(0.0, abs=1e-15)
    assert np.all(spec.eigenvalues <= 1.0)
    assert spec.unstable == ((0,),)
    half = linear_spectrum(GridSpec((4.0 * math.pi,), (32,), (16,)), 0.5, "half")
    # lambda_n = (n/4)^2, exponent 1/4: unstable while (n/4)^{1/2} < 1
    assert half.unstable == ((0,), (1,), (2,), (3,))
    numeric = linear_spectrum(GRID, 0.5, 0.25)
    np.testing.assert_allclose(numeric.eigenvalues[1:], 1.0 - GRID.eigenvalues[1:] ** 0.25)

# }}}
