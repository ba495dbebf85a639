"""Per-cell reconstruction and Hermite-Taylor evolution."""

import numpy as np
import pytest

import hermite3d as h3
from hermite3d.kernels import space_time_tensor

from conftest import (
    rel_err,
    shifted_coeffs,
    ulp_distance,
    unit_coeffs,
    vertex_dofs_from_coeffs,
)


def _ops(order_n, spacings=(1.0, 1.0, 1.0)):
    interp = h3.build_interp_operator(order_n)
    derivs = tuple(h3.build_deriv_operator(order_n, h) for h in spacings)
    return (interp, interp, interp), derivs


def test_taylor_params_validation():
    with pytest.raises(ValueError):
        h3.TaylorParams(stages_q=0, dt=0.1)
    with pytest.raises(ValueError):
        h3.TaylorParams(stages_q=3, dt=0.0)
    assert h3.TaylorParams(stages_q=4, dt=0.5).half_dt == 0.25


def test_default_stages():
    assert h3.default_stages(1) == 9
    assert h3.default_stages(2) == 15
    assert h3.default_stages(3) == 21


def test_reconstruct_constant_cell():
    h_ops, _ = _ops(1)
    u_loc = np.zeros((4, 4, 4))
    for a3 in (0, 2):
        for a2 in (0, 2):
            for a1 in (0, 2):
                u_loc[a3, a2, a1] = 7.5
    coeffs = h3.reconstruct_cell(h_ops, u_loc)
    expected = np.zeros((4, 4, 4))
    expected[0, 0, 0] = 7.5
    assert np.allclose(coeffs.data, expected, rtol=0, atol=1e-14)


def test_reconstruct_n0_two_values():
    # constant in x2/x3; uL, uR along x1 -> mean and difference
    h_ops, _ = _ops(0)
    u_left, u_right = 1.25, -0.75
    u_loc = np.empty((2, 2, 2))
    u_loc[:, :, 0] = u_left
    u_loc[:, :, 1] = u_right
    coeffs = h3.reconstruct_cell(h_ops, u_loc)
    expected = np.zeros((2, 2, 2))
    expected[0, 0, 0] = (u_left + u_right) / 2
    expected[0, 0, 1] = u_right - u_left
    assert np.allclose(coeffs.data, expected, rtol=0, atol=1e-15)


def test_reconstruct_monomial_z1cubed_z2squared():
    # u = z1^3 z2^2, degrees within 2N+1 = 3 for N = 1: exact recovery
    order_n = 1
    h_ops, _ = _ops(order_n)
    coeffs = np.zeros((4, 4, 4))
    coeffs[0, 2, 3] = 1.0  # [n3][n2][n1]
    u_loc = vertex_dofs_from_coeffs(coeffs, order_n)
    out = h3.reconstruct_cell(h_ops, u_loc)
    assert rel_err(out.data, coeffs) <= 1e-12


@pytest.mark.parametrize("order_n", [1, 2, 3])
def test_reconstruction_exactness_random(order_n, rng):
    # error measured against the cell's data scale: random +-1 coefficient
    # tensors describe polynomials whose vertex values reach ~50, and
    # double-precision recovery is conditioned on that magnitude
    h_ops, _ = _ops(order_n)
    side = 2 * order_n + 2
    for _ in range(20):
        coeffs = rng.uniform(-1, 1, (side, side, side))
        u_loc = vertex_dofs_from_coeffs(coeffs, order_n)
        out = h3.reconstruct_cell(h_ops, u_loc)
        scale = max(np.abs(coeffs).max(), np.abs(u_loc).max())
        assert np.abs(out.data - coeffs).max() / scale <= 1e-11


def test_advect_constant_is_zero():
    _, d_ops = _ops(1)
    out = h3.advect_time_derivative(d_ops, unit_coeffs(1, (0, 0, 0)).data)
    assert np.array_equal(out, np.zeros((4, 4, 4)))


def test_advect_linear_terms():
    _, d_ops = _ops(1)
    out = h3.advect_time_derivative(d_ops, unit_coeffs(1, (0, 0, 1)).data)
    assert np.array_equal(out, unit_coeffs(1, (0, 0, 0)).data)

    w = unit_coeffs(1, (0, 0, 1)).data + unit_coeffs(1, (0, 1, 0)).data \
        + unit_coeffs(1, (1, 0, 0)).data
    out = h3.advect_time_derivative(d_ops, w)
    assert np.array_equal(out, 3.0 * unit_coeffs(1, (0, 0, 0)).data)


def test_horner_constant_unchanged():
    _, d_ops = _ops(2)
    coeffs = unit_coeffs(2, (0, 0, 0), 4.2)
    params = h3.TaylorParams(stages_q=15, dt=0.8)
    out = h3.taylor_evolve_horner(coeffs, d_ops, params, step=0.4)
    assert np.array_equal(out.data, coeffs.data)


def test_horner_linear_exact_shift():
    # u = z1, h1 = 1: solution after delta is z1 + delta, exactly representable
    _, d_ops = _ops(1)
    coeffs = unit_coeffs(1, (0, 0, 1))
    params = h3.TaylorParams(stages_q=9, dt=0.6)
    out = h3.taylor_evolve_horner(coeffs, d_ops, params, step=0.3)
    expected = coeffs.data + 0.3 * unit_coeffs(1, (0, 0, 0)).data
    assert np.array_equal(out.data, expected)


@pytest.mark.parametrize("order_n", [1, 2, 3])
def test_horner_extra_stages_are_noops(order_n, rng):
    # nilpotency: stages beyond d(2N+1) change nothing, bit for bit
    side = 2 * order_n + 2
    q = h3.default_stages(order_n)
    _, d_ops = _ops(order_n, (0.1, 0.1, 0.1))
    dt = 0.09
    coeffs = h3.CellCoeffs(order_n=order_n, data=rng.uniform(-1, 1, (side, side, side)))
    out_q = h3.taylor_evolve_horner(coeffs, d_ops, h3.TaylorParams(q, dt), step=dt / 2)
    out_q3 = h3.taylor_evolve_horner(coeffs, d_ops, h3.TaylorParams(q + 3, dt), step=dt / 2)
    assert np.array_equal(out_q.data, out_q3.data)


def test_recursion_constant_unchanged():
    _, d_ops = _ops(1)
    coeffs = unit_coeffs(1, (0, 0, 0), -2.0)
    params = h3.TaylorParams(stages_q=9, dt=0.5)
    for tau in (0.25, 0.5, 1.0):
        out = h3.taylor_evolve_recursion(coeffs, d_ops, params, tau=tau)
        assert np.array_equal(out.data, coeffs.data)


def test_recursion_linear_half_step():
    # b[(0,0,0), 1] = 1 * dt * 1; evaluating at tau = 1/2 adds dt/2 = 0.3
    _, d_ops = _ops(1)
    coeffs = unit_coeffs(1, (0, 0, 1))
    params = h3.TaylorParams(stages_q=9, dt=0.6)
    out = h3.taylor_evolve_recursion(coeffs, d_ops, params, tau=0.5)
    expected = coeffs.data + 0.3 * unit_coeffs(1, (0, 0, 0)).data
    assert np.array_equal(out.data, expected)


def test_recursion_validates_tau():
    _, d_ops = _ops(1)
    params = h3.TaylorParams(stages_q=9, dt=0.5)
    coeffs = unit_coeffs(1, (0, 0, 0))
    for bad in (0.0, -0.5, 1.5):
        with pytest.raises(ValueError):
            h3.taylor_evolve_recursion(coeffs, d_ops, params, tau=bad)


@pytest.mark.parametrize("order_n", [1, 2, 3])
def test_horner_recursion_agreement_ulps(order_n, rng):
    side = 2 * order_n + 2
    q = h3.default_stages(order_n)
    spacings = (0.1, 0.125, 0.1)
    _, d_ops = _ops(order_n, spacings)
    dt = 0.9 * min(spacings)
    params = h3.TaylorParams(stages_q=q, dt=dt)
    worst = 0.0
    for _ in range(100):
        coeffs = h3.CellCoeffs(order_n=order_n, data=rng.uniform(-1, 1, (side, side, side)))
        a = h3.taylor_evolve_horner(coeffs, d_ops, params, step=dt / 2)
        b = h3.taylor_evolve_recursion(coeffs, d_ops, params, tau=0.5)
        worst = max(worst, ulp_distance(a.data, b.data))
    assert worst <= 8


@pytest.mark.parametrize("order_n", [1, 2, 3])
def test_exact_local_evolution_matches_shift(order_n, rng):
    # q = d(2N+1) makes evolution exact: compare against the symbolically
    # shifted polynomial p(z + delta/h per axis)
    side = 2 * order_n + 2
    q = h3.default_stages(order_n)
    spacings = (0.2, 0.25, 0.5)
    _, d_ops = _ops(order_n, spacings)
    dt = 0.9 * min(spacings)
    delta = dt / 2
    params = h3.TaylorParams(stages_q=q, dt=dt)
    for _ in range(10):
        data = rng.uniform(-1, 1, (side, side, side))
        out = h3.taylor_evolve_horner(h3.CellCoeffs(order_n, data), d_ops, params, step=delta)
        expected = shifted_coeffs(data, tuple(delta / h for h in spacings))
        assert rel_err(out.data, expected) <= 1e-12


def test_evolution_linearity(rng):
    order_n = 2
    side = 6
    _, d_ops = _ops(order_n, (0.1, 0.1, 0.1))
    params = h3.TaylorParams(stages_q=15, dt=0.09)
    u = rng.uniform(-1, 1, (side, side, side))
    v = rng.uniform(-1, 1, (side, side, side))
    a, b = 0.7, -1.3
    combo = h3.taylor_evolve_horner(h3.CellCoeffs(order_n, a * u + b * v),
                                    d_ops, params, step=0.045)
    separate = a * h3.taylor_evolve_horner(h3.CellCoeffs(order_n, u), d_ops, params, 0.045).data \
        + b * h3.taylor_evolve_horner(h3.CellCoeffs(order_n, v), d_ops, params, 0.045).data
    assert rel_err(combo.data, separate) <= 1e-13


def test_space_time_identity_zero_and_linear():
    _, d_ops = _ops(1)
    params = h3.TaylorParams(stages_q=9, dt=0.5)
    zero = h3.CellCoeffs.zeros(1)
    assert h3.verify_space_time_identity(zero, d_ops, params) == 0.0
    linear = unit_coeffs(1, (0, 0, 1))
    assert h3.verify_space_time_identity(linear, d_ops, params) == 0.0


@pytest.mark.parametrize("order_n", [1, 2, 3])
def test_space_time_identity_random(order_n, rng):
    # checked at dt/h = 0.2: the structural content of the recursion is
    # step-size independent, and at this ratio the temporal slabs stay
    # O(1) so double precision certifies the 1e-12 contract with margin
    side = 2 * order_n + 2
    q = h3.default_stages(order_n)
    _, d_ops = _ops(order_n, (1.0, 1.0, 1.0))
    params = h3.TaylorParams(stages_q=q, dt=0.2)
    for _ in range(20):
        coeffs = h3.CellCoeffs(order_n, rng.uniform(-1, 1, (side, side, side)))
        residual = h3.verify_space_time_identity(coeffs, d_ops, params)
        assert residual <= 1e-12 * np.abs(coeffs.data).max()


def test_space_time_tensor_top_slab_closes():
    # with q = d(2N+1), one more recursion step is structurally zero
    order_n = 1
    _, d_ops = _ops(order_n, (0.25, 0.25, 0.25))
    rng = np.random.default_rng(7)
    coeffs = h3.CellCoeffs(order_n, rng.uniform(-1, 1, (4, 4, 4)))
    params = h3.TaylorParams(stages_q=h3.default_stages(order_n) + 1, dt=0.2)
    st = space_time_tensor(coeffs, d_ops, params)
    assert np.array_equal(st[-1], np.zeros_like(st[-1]))
