from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import cumulative_trapezoid

from fracvolterra.fracops import (
    SampledFn,
    TimeMesh,
    caputo_derivative,
    convex_chain_gap,
    gronwall_envelope,
    gronwall_residual,
    product_weights,
    rl_derivative_right,
    rl_integral_left,
    rl_integral_right,
    verify_convex_chain,
    verify_fundamental,
    verify_int_by_parts,
)


def _sample(N, f, T=1.0, r=1.0):
    return SampledFn.from_callable(TimeMesh(T, N, r), f)


# {{{ mesh and samples

def test_mesh_nodes_and_grading():
    mesh = TimeMesh(2.0, 4, 2.0)
    np.testing.assert_allclose(mesh.nodes, 2.0 * (np.arange(5) / 4) ** 2)
    assert len(mesh) == 5 and not mesh.is_uniform
    assert TimeMesh.graded(1.0, 8, 0.5).r == pytest.approx(3.0)
    assert TimeMesh.graded(1.0, 8, 0.2).r == 4.0


@pytest.mark.parametrize("kwargs", [dict(T=0.0, N=4), dict(T=1.0, N=1), dict(T=1.0, N=4, r=0.5)])
def test_mesh_rejects_bad_input(kwargs):
    with pytest.raises(ValueError):
        TimeMesh(**kwargs)


def test_sampled_fn_shape_is_checked():
    with pytest.raises(ValueError):
        SampledFn(TimeMesh(1.0, 4), np.zeros(4))

# }}}


# {{{ operators

@pytest.mark.parametrize("r", [1.0, 2.5])
def test_caputo_of_constant_vanishes(r):
    d = caputo_derivative(_sample(64, lambda t: 3.0 + 0 * t, r=r), 0.4)
    assert np.max(np.abs(d.values)) == 0.0


@pytest.mark.parametrize(("f", "expected"), [
    (lambda t: t, 1.1283791671),
    (lambda t: t ** 2, 1.5045055561),
])
def test_caputo_power_rule_at_one(f, expected):
    d = caputo_derivative(_sample(2048, f), 0.5)
    assert d.values[0] == 0.0
    assert d.values[-1] == pytest.approx(expected, abs=2e-4)


def test_caputo_linear_function_is_exact():
    # the L1 scheme integrates piecewise-linear data exactly
    d = caputo_derivative(_sample(16, lambda t: t), 0.5)
    t = d.t
    np.testing.assert_allclose(d.values, t ** 0.5 / math.gamma(1.5), atol=1e-14)


def test_caputo_order_two_minus_alpha():
    alpha = 0.5
    exact = 2.0 / math.gamma(3.0 - alpha)
    err = [abs(caputo_derivative(_sample(N, lambda t: t ** 2), alpha).values[-1] - exact)
           for N in (128, 256, 512)]
    assert math.log2(err[1] / err[2]) == pytest.approx(2.0 - alpha, abs=0.05)


@pytest.mark.parametrize(("r", "lo", "hi"), [(1.0, 0.4, 0.6), (3.0, 1.4, 1.6)])
def test_graded_mesh_restores_order_for_singular_data(r, lo, hi):
    # f = t^alpha: uniform meshes lose the order, r = (2 - alpha)/alpha restores it
    alpha = 0.5
    res = [verify_fundamental(_sample(N, lambda t: t ** alpha, r=r), alpha)
           for N in (256, 512, 1024)]
    assert lo <= math.log2(res[1] / res[2]) <= hi


def test_rl_left_power_rule():
    f = _sample(256, lambda t: np.ones_like(t))
    for alpha in (0.3, 0.5, 1.7):
        i = rl_integral_left(f, alpha)
        np.testing.assert_allclose(i.values, i.t ** alpha / math.gamma(alpha + 1), atol=1e-13)
    assert rl_integral_left(f, 0.5).values[-1] == pytest.approx(1.1283791671, abs=1e-10)


def test_rl_left_order_one_is_trapezoid():
    f = _sample(100, np.sin)
    i = rl_integral_left(f, 1.0)
    np.testing.assert_allclose(i.values, cumulative_trapezoid(f.values, f.t, initial=0),
                               atol=1e-14)


def test_rl_right_power_rule_and_reflection():
    T = 2.0
    f = _sample(200, lambda t: np.ones_like(t), T=T)
    i = rl_integral_right(f, 0.6)
    np.testing.assert_allclose(i.values, (T - i.t) ** 0.6 / math.gamma(1.6), atol=1e-13)
    assert i.values[-1] == 0.0

    g = _sample(200, lambda t: np.exp(-t) * np.cos(3 * t), T=T)
    reflected = SampledFn(g.mesh, g.values[::-1])
    np.testing.assert_allclose(rl_integral_right(g, 0.6).values,
                               rl_integral_left(reflected, 0.6).values[::-1], atol=1e-14)


def test_rl_derivative_right_of_constant():
    T, alpha, c = 1.0, 0.4, 2.0
    f = _sample(1024, lambda t: c + 0 * t, T=T)
    d = rl_derivative_right(f, alpha)
    t = d.t[1:-1]
    expected = c * (T - t) ** (-alpha) / math.gamma(1 - alpha)
    inner = t < 0.9
    np.testing.assert_allclose(d.values[1:-1][inner], expected[inner], rtol=1e-3)


def test_rl_derivative_right_inverts_right_integral():
    f = _sample(2048, lambda t: np.cos(2 * t))
    back = rl_derivative_right(rl_integral_right(f, 0.5), 0.5)
    inner = slice(8, -8)
    assert np.max(np.abs(back.values[inner] - f.values[inner])) <= 5e-3


@pytest.mark.parametrize("op", [caputo_derivative, rl_integral_left, rl_integral_right])
def test_zero_maps_to_zero(op):
    assert np.all(op(_sample(32, np.zeros_like), 0.5).values == 0.0)


@pytest.mark.parametrize(("op", "alpha"), [
    (caputo_derivative, 1.0), (caputo_derivative, 0.0),
    (rl_integral_left, 0.0), (rl_integral_right, -1.0),
    (rl_derivative_right, 1.0),
])
def test_order_domain_errors(op, alpha):
    with pytest.raises(ValueError):
        op(_sample(8, np.sin), alpha)


def test_product_weights_are_exact_for_linear_data():
    t = np.sort(np.random.default_rng(0).uniform(0, 1, 30))
    t = np.concatenate([[0.0], t])
    F1 = lambda s: s ** 0.5 / math.gamma(1.5)  # noqa: E731
    F2 = lambda s: s ** 1.5 / math.gamma(2.5)  # noqa: E731
    k = len(t) - 1
    w = product_weights(t, k, F1, F2)
    # I^{1/2} of f(s) = s at t_k
    assert w @ t == pytest.approx(t[k] ** 1.5 / math.gamma(2.5), rel=1e-13)

# }}}


# {{{ lemma verifiers

def test_fundamental_relation_and_refinement():
    res = [verify_fundamental(_sample(N, lambda t: t ** 2), 0.5) for N in (256, 512, 1024)]
    assert res[-1] <= 1e-3
    assert res[1] / res[2] >= 2.0
    assert verify_fundamental(_sample(64, lambda t: 5 + 0 * t), 0.5) == 0.0


def test_int_by_parts_cases():
    mesh = TimeMesh(1.0, 512)
    one = SampledFn.from_callable(mesh, np.ones_like)
    y = SampledFn.from_callable(mesh, lambda t: np.exp(t))
    # only the boundary bracket survives; the rest is quadrature error
    coarse = verify_int_by_parts(one, y, 0.5)
    fine_mesh = TimeMesh(1.0, 2048)
    fine = verify_int_by_parts(SampledFn.from_callable(fine_mesh, np.ones_like),
                               SampledFn.from_callable(fine_mesh, np.exp), 0.5)
    assert coarse <= 3e-2
    assert fine <= 0.6 * coarse
    zero = SampledFn.from_callable(mesh, np.zeros_like)
    assert verify_int_by_parts(zero, zero, 0.5) == 0.0

    res = []
    for N in (512, 1024):
        m = TimeMesh(1.0, N)
        res.append(verify_int_by_parts(SampledFn.from_callable(m, lambda t: t),
                                       SampledFn.from_callable(m, lambda t: 1 - t), 0.5))
    assert res[0] <= 1e-2
    assert res[1] <= 0.5 * res[0]


def test_int_by_parts_needs_common_mesh():
    with pytest.raises(ValueError):
        verify_int_by_parts(_sample(8, np.sin), _sample(16, np.sin), 0.5)


def test_gronwall_envelope_cases():
    t = np.linspace(0, 2, 9)
    assert np.all(gronwall_envelope(0.0, 2.0, 0.5, t) == 0.0)
    np.testing.assert_allclose(gronwall_envelope(1.5, 0.7, 1.0, t), 1.5 * np.exp(0.7 * t),
                               rtol=1e-12)
    assert gronwall_residual(1.0, 1.0, 0.5, TimeMesh(1.0, 2048)) <= 1e-4


def test_convex_chain_cases():
    const = _sample(64, lambda t: 2.0 + 0 * t)
    assert verify_convex_chain(const, 0.5) == 0.0
    lin = _sample(1024, lambda t: t)
    gap = convex_chain_gap(lin, 0.5)
    assert np.max(gap) <= 1e-6
    # exact values: D t^2 - 2t D t = t^{2-a} (2/Gamma(3-a) - 2/Gamma(2-a)) < 0
    t = lin.t[-1]
    exact = t ** 1.5 * (2 / math.gamma(2.5) - 2 / math.gamma(1.5))
    assert gap[-1] == pytest.approx(exact, abs=1e-3)


def test_convex_chain_random_monotone_walk():
    rng = np.random.default_rng(4)
    mesh = TimeMesh(1.0, 1024)
    x = SampledFn(mesh, np.cumsum(rng.uniform(0, 1e-3, len(mesh))))
    assert verify_convex_chain(x, 0.7) <= 1e-3


def test_convex_chain_custom_phi_needs_derivative():
    with pytest.raises(ValueError):
        convex_chain_gap(_sample(8, np.sin), 0.5, phi=np.exp)
    gap = convex_chain_gap(_sample(256, lambda t: t), 0.5, phi=np.exp, dphi=np.exp)
    assert np.max(gap) <= 1e-10

# }}}
