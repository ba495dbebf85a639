"""Operator construction and per-axis application."""

import numpy as np
import pytest

from hermite3d import apply_along_axis, build_deriv_operator, build_interp_operator

from conftest import endpoint_eval_matrix, rel_err, ulp_distance

# Derived by solving the 2x2 endpoint system by hand:
# b0 -+ b1/2 = u(-+1/2)  ->  b0 = (uL + uR)/2, b1 = uR - uL.
H0_EXPECTED = np.array([[0.5, 0.5], [-1.0, 1.0]])

# Derived by exact rational elimination of the N=1 endpoint conditions
# (value and scaled slope at z = -+1/2) in a scratch computation.
H1_EXPECTED = np.array([
    [1 / 2, 1 / 8, 1 / 2, -1 / 8],
    [-3 / 2, -1 / 4, 3 / 2, -1 / 4],
    [0.0, -1 / 2, 0.0, 1 / 2],
    [2.0, 1.0, -2.0, 1.0],
])


def test_interp_matrix_n0_exact():
    op = build_interp_operator(0)
    assert np.array_equal(op.matrix, H0_EXPECTED)


def test_interp_matrix_n1_exact():
    op = build_interp_operator(1)
    assert np.array_equal(op.matrix, H1_EXPECTED)


def test_interp_constant_reproduction_n1():
    # DOF vector of u(z) = 1: values 1, scaled slopes 0, both endpoints
    op = build_interp_operator(1)
    dof = np.array([1.0, 0.0, 1.0, 0.0])
    expected = np.array([1.0, 0.0, 0.0, 0.0])
    assert np.allclose(op.matrix @ dof, expected, rtol=0, atol=1e-15)


def test_interp_linear_reproduction_n1():
    # u(z) = z: values -+1/2, scaled slope h u' = 1 at both endpoints
    op = build_interp_operator(1)
    dof = np.array([-0.5, 1.0, 0.5, 1.0])
    expected = np.array([0.0, 1.0, 0.0, 0.0])
    assert np.allclose(op.matrix @ dof, expected, rtol=0, atol=1e-15)


@pytest.mark.parametrize("order_n", [0, 1, 2, 3, 4])
def test_monomial_exactness_1d(order_n):
    # applying H to the endpoint DOFs of z^j must return e_j
    op = build_interp_operator(order_n)
    e_mat = endpoint_eval_matrix(order_n)  # oracle columns: DOFs of z^j
    side = 2 * order_n + 2
    recovered = op.matrix @ e_mat
    assert rel_err(recovered, np.eye(side)) <= 1e-12


@pytest.mark.parametrize("order_n", [0, 1, 2, 3, 4])
def test_tensor_monomial_exactness_3d(order_n, rng):
    side = 2 * order_n + 2
    op = build_interp_operator(order_n)
    e_mat = endpoint_eval_matrix(order_n)
    for _ in range(5):
        j1, j2, j3 = rng.integers(0, side, size=3)
        coeffs = np.zeros((side, side, side))
        coeffs[j3, j2, j1] = 1.0
        dofs = np.einsum("ai,bj,ck,ijk->abc", e_mat, e_mat, e_mat, coeffs)
        out = apply_along_axis(op.matrix, dofs, 1)
        out = apply_along_axis(op.matrix, out, 2)
        out = apply_along_axis(op.matrix, out, 3)
        assert rel_err(out, coeffs) <= 1e-11


def test_deriv_matrix_entries():
    op = build_deriv_operator(1, 0.25)
    expected = np.zeros((4, 4))
    expected[0, 1] = 1 / 0.25
    expected[1, 2] = 2 / 0.25
    expected[2, 3] = 3 / 0.25
    assert np.array_equal(op.matrix, expected)


def test_deriv_monomials():
    op = build_deriv_operator(1, 1.0)
    e2 = np.zeros(4)
    e2[2] = 1.0
    out = op.matrix @ e2
    expected = np.zeros(4)
    expected[1] = 2.0  # d/dz z^2 = 2 z
    assert np.array_equal(out, expected)

    op_half = build_deriv_operator(1, 0.5)
    e1 = np.zeros(4)
    e1[1] = 1.0
    out = op_half.matrix @ e1
    expected = np.zeros(4)
    expected[0] = 2.0  # (0+1)/0.5 on the superdiagonal
    assert np.array_equal(out, expected)

    e0 = np.zeros(4)
    e0[0] = 1.0
    assert np.array_equal(op.matrix @ e0, np.zeros(4))


@pytest.mark.parametrize("order_n", [0, 1, 2, 3])
def test_deriv_nilpotency_exact(order_n, rng):
    side = 2 * order_n + 2
    op = build_deriv_operator(order_n, 0.1)
    tensor = rng.uniform(-1, 1, (side, side, side))
    for _ in range(side):
        tensor = apply_along_axis(op.matrix, tensor, 2)
    assert np.array_equal(tensor, np.zeros_like(tensor))


def test_build_validation():
    with pytest.raises(ValueError):
        build_interp_operator(-1)
    with pytest.raises(ValueError):
        build_deriv_operator(1, 0.0)
    with pytest.raises(ValueError):
        build_deriv_operator(1, -0.5)


def test_apply_identity(rng):
    tensor = rng.uniform(-1, 1, (4, 4, 4))
    eye = np.eye(4)
    for axis in (1, 2, 3):
        assert np.array_equal(apply_along_axis(eye, tensor, axis), tensor)


def test_apply_n0_ones_tensor():
    # rows of H0 applied to (1, 1): first coefficient 1, second 0
    op = build_interp_operator(0)
    ones = np.ones((2, 2, 2))
    out = apply_along_axis(op.matrix, ones, 1)
    assert np.array_equal(out[..., 0], np.ones((2, 2)))
    assert np.array_equal(out[..., 1], np.zeros((2, 2)))


def test_apply_mixed_trilinear_derivative():
    # d3/dx1dx2dx3 of z1 z2 z3 -> constant 1 (h = 1 on every axis)
    op = build_deriv_operator(1, 1.0)
    tensor = np.zeros((4, 4, 4))
    tensor[1, 1, 1] = 1.0
    for axis in (1, 2, 3):
        tensor = apply_along_axis(op.matrix, tensor, axis)
    expected = np.zeros((4, 4, 4))
    expected[0, 0, 0] = 1.0
    assert np.array_equal(tensor, expected)


def test_axis_commutativity_within_ulps(rng):
    op = build_interp_operator(2)
    tensor = rng.uniform(-1, 1, (6, 6, 6))
    a12 = apply_along_axis(op.matrix, apply_along_axis(op.matrix, tensor, 1), 2)
    a21 = apply_along_axis(op.matrix, apply_along_axis(op.matrix, tensor, 2), 1)
    assert ulp_distance(a12, a21) <= 4


def test_apply_dimension_mismatch():
    with pytest.raises(ValueError):
        apply_along_axis(np.eye(4), np.zeros((2, 2, 2)), 1)
    with pytest.raises(ValueError):
        apply_along_axis(np.eye(2), np.zeros((2, 2, 2)), 5)
    with pytest.raises(ValueError):
        apply_along_axis(np.zeros((2, 3)), np.zeros((2, 2, 2)), 1)


def test_operator_matrices_immutable():
    op = build_interp_operator(1)
    with pytest.raises(ValueError):
        op.matrix[0, 0] = 99.0
    dop = build_deriv_operator(1, 1.0)
    with pytest.raises(ValueError):
        dop.matrix[0, 1] = 99.0
