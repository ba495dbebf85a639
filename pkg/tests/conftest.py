"""Shared test helpers: independent oracles and comparison utilities."""

import math

import numpy as np
import pytest
from numpy.polynomial import polynomial as npoly

import hermite3d as h3


def ulp_distance(a, b):
    """Max |a - b| in units of the floating-point spacing at the result scale.

    Entries that cancel to ~0 carry no information at their own exponent,
    so agreement between two summation orders is measured against the
    largest magnitude either result attains.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    scale = max(np.abs(a).max(), np.abs(b).max())
    if scale == 0:
        return 0.0
    return float(np.abs(a - b).max() / np.spacing(scale))


def rel_err(got, expected):
    """Max |got - expected| over the max magnitude of expected (or 1 if zero)."""
    got = np.asarray(got, dtype=float)
    expected = np.asarray(expected, dtype=float)
    scale = np.abs(expected).max()
    return float(np.abs(got - expected).max() / (scale if scale > 0 else 1.0))


def scaled_deriv_1d(coeffs_1d, z, k):
    """Oracle: k-th scaled derivative (1/k!) p^(k)(z) of a 1D polynomial.

    Uses numpy's polynomial differentiation, independent of the binomial
    construction inside the package.
    """
    return npoly.polyval(z, npoly.polyder(coeffs_1d, k)) / math.factorial(k)


def endpoint_eval_matrix(order_n):
    """Oracle matrix E[(e,k)][j]: scaled deriv k of z^j at endpoint e."""
    side = 2 * order_n + 2
    e_mat = np.zeros((side, side))
    for e, z in enumerate((-0.5, 0.5)):
        for k in range(order_n + 1):
            for j in range(side):
                mono = np.zeros(j + 1)
                mono[j] = 1.0
                e_mat[e * (order_n + 1) + k, j] = scaled_deriv_1d(mono, z, k)
    return e_mat


def vertex_dofs_from_coeffs(coeffs3d, order_n):
    """Oracle: 8-vertex DOF tensor of a coefficient tensor.

    Contracted in extended precision and rounded once, so the only
    double-precision error in the test data is the final representation.
    """
    e_mat = endpoint_eval_matrix(order_n).astype(np.longdouble)
    dofs = np.einsum("ai,bj,ck,ijk->abc", e_mat, e_mat, e_mat,
                     coeffs3d.astype(np.longdouble))
    return dofs.astype(np.float64)


def shift_matrix(side, a):
    """Oracle: coefficient map of z -> z + a, S[m][j] = C(j, m) a^(j-m)."""
    s_mat = np.zeros((side, side))
    for j in range(side):
        for m in range(j + 1):
            s_mat[m, j] = math.comb(j, m) * a ** (j - m)
    return s_mat


def shifted_coeffs(coeffs3d, shifts):
    """Oracle: coefficients of p(z1 + a1, z2 + a2, z3 + a3), exact expansion."""
    side = coeffs3d.shape[0]
    s1 = shift_matrix(side, shifts[0])
    s2 = shift_matrix(side, shifts[1])
    s3 = shift_matrix(side, shifts[2])
    return np.einsum("ai,bj,ck,ijk->abc", s3, s2, s1, coeffs3d)


def unit_coeffs(order_n, index, value=1.0, dtype=np.float64):
    """Coefficient tensor with a single entry set: index = (n3, n2, n1)."""
    side = 2 * order_n + 2
    data = np.zeros((side, side, side), dtype=dtype)
    data[index] = value
    return h3.CellCoeffs(order_n=order_n, data=data)


def random_multi_mode_ic(rng, n_terms=4, max_wavenumber=2):
    """Random separable fourier-product IC, reproducible from rng."""
    terms = []
    for _ in range(n_terms):
        terms.append(tuple(
            h3.FourierMode(
                amplitude=float(rng.uniform(-1.0, 1.0)),
                wavenumber=int(rng.integers(1, max_wavenumber + 1)),
                phase=float(rng.uniform(0.0, 2.0 * np.pi)),
            )
            for _ in range(3)
        ))
    return h3.SeparableIC(terms=tuple(terms))


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
