"""One-dimensional Hermite operators applied along tensor axes.

Cells use the scaled coordinate z = (x - x_mid) / h, so a cell spans
z in [-1/2, 1/2].  Local polynomials are stored as coefficient tensors
c[n3][n2][n1] of the monomial basis z1^n1 z2^n2 z3^n3 with n_k up to
2N+1; degrees of freedom are the scaled derivatives p_k = h^k/k! u^(k),
which are O(1) on smooth data.

Operators:
    InterpOperator: dense (2N+2)x(2N+2) matrix H mapping the endpoint
        DOF vector (left-vertex scaled derivatives 0..N, then right) to
        midpoint-centered monomial coefficients.  H is the inverse of
        the generalized Vandermonde matrix
            V[(e,k)][j] = C(j,k) * z_e^(j-k),   z_e = -+1/2,
        which is exactly the statement "the k-th scaled derivative of
        sum_j b_j z^j at z_e equals the given endpoint value".  V has
        rational entries, so H is computed once per N in exact rational
        arithmetic and cached.
    DerivOperator: the strictly upper-bidiagonal matrix
        D[i][i+1] = (i+1)/h, zero elsewhere, i.e. d/dx in the scaled
        basis.  Nilpotent: D^(2N+2) annihilates every coefficient vector.

Both are immutable after construction and safe to share across workers.
Per-axis application (apply_along_axis) accumulates the contraction in
ascending k so results are reproducible for a given precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

__all__ = [
    "InterpOperator",
    "DerivOperator",
    "build_interp_operator",
    "build_deriv_operator",
    "apply_along_axis",
]


def _rational_inverse(rows: list[list[Fraction]]) -> list[list[Fraction]]:
    """Invert a matrix of Fractions by Gauss-Jordan elimination (exact)."""
    n = len(rows)
    aug = [row[:] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(rows)]
    for col in range(n):
        pivot = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv_p = 1 / aug[col][col]
        aug[col] = [x * inv_p for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


@lru_cache(maxsize=None)
def _interp_matrix(order_n: int) -> np.ndarray:
    side = 2 * order_n + 2
    vand: list[list[Fraction]] = [[Fraction(0)] * side for _ in range(side)]
    for endpoint, z in enumerate((Fraction(-1, 2), Fraction(1, 2))):
        for k in range(order_n + 1):
            row = endpoint * (order_n + 1) + k
            for j in range(k, side):
                vand[row][j] = math.comb(j, k) * z ** (j - k)
    inv = _rational_inverse(vand)
    matrix = np.array([[float(x) for x in row] for row in inv], dtype=np.float64)
    matrix.setflags(write=False)
    return matrix


@dataclass(frozen=True)
class InterpOperator:
    """Endpoint-DOFs -> midpoint-coefficients interpolation matrix."""

    order_n: int
    matrix: np.ndarray = field(repr=False)

    @property
    def side(self) -> int:
        return 2 * self.order_n + 2


@dataclass(frozen=True)
class DerivOperator:
    """Scaled-basis differentiation matrix, superdiagonal (i+1)/h."""

    order_n: int
    spacing: float
    matrix: np.ndarray = field(repr=False)

    @property
    def side(self) -> int:
        return 2 * self.order_n + 2


def build_interp_operator(order_n: int) -> InterpOperator:
    """Build the interpolation operator for derivative order N >= 0.

    The same matrix serves every axis; axis selection happens at
    application time.
    """
    if order_n < 0:
        raise ValueError(f"order_n must be >= 0, got {order_n}")
    return InterpOperator(order_n=order_n, matrix=_interp_matrix(order_n))


def build_deriv_operator(order_n: int, spacing: float) -> DerivOperator:
    """Build the derivative operator for grid spacing h > 0."""
    if order_n < 0:
        raise ValueError(f"order_n must be >= 0, got {order_n}")
    if not spacing > 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    side = 2 * order_n + 2
    matrix = np.zeros((side, side), dtype=np.float64)
    idx = np.arange(side - 1)
    matrix[idx, idx + 1] = (idx + 1) / spacing
    matrix.setflags(write=False)
    return DerivOperator(order_n=order_n, spacing=float(spacing), matrix=matrix)


def apply_along_axis(op_matrix, tensor: np.ndarray, axis: int) -> np.ndarray:
    """Apply a square matrix to every line of `tensor` parallel to `axis`.

    `axis` is 1, 2 or 3 for the x1/x2/x3 tensor directions, which map to
    the last / second-to-last / third-to-last array axes (the tensor is
    indexed [n3][n2][n1]).  Leading array axes, if any, are treated as a
    batch.  The inner contraction runs in ascending k.
    """
    matrix = getattr(op_matrix, "matrix", op_matrix)
    if axis not in (1, 2, 3):
        raise ValueError(f"axis must be 1, 2 or 3, got {axis}")
    side = matrix.shape[0]
    if matrix.shape != (side, side):
        raise ValueError(f"operator matrix must be square, got {matrix.shape}")
    if tensor.ndim < 3 or tensor.shape[-axis] != side:
        raise ValueError(
            f"tensor axis {axis} has length {tensor.shape[-axis] if tensor.ndim >= 3 else None}, "
            f"operator needs {side}"
        )
    moved = np.moveaxis(tensor, -axis, -1)
    out = np.zeros_like(moved)
    col = matrix.astype(tensor.dtype, copy=False)
    for k in range(side):
        out += col[:, k] * moved[..., k][..., None]
    return np.moveaxis(out, -1, -axis)
