"""Per-cell computational cores: reconstruction and Hermite-Taylor evolution.

Every operation here is a pure function of small local tensors (side
2N+2), so cells can be processed in any order or in parallel.  The grid
pipeline reuses the same arithmetic in batched form; these reference
versions stay in plain numpy and serve as the oracle side of every
cross-check.

Evolution solves u_t = u_x1 + u_x2 + u_x3 locally.  Writing the local
polynomial's time derivative as the operator sum L = D_x1 + D_x2 + D_x3,
the solution advanced by a step delta is

    w = sum_{s=0}^{q} (delta^s / s!) L^s b,

which taylor_evolve_horner evaluates as the nested recurrence
w <- b + (delta/k) L w for k = q..1.  Since L is nilpotent (it shifts
coefficient indices upward), q = 3(2N+1) stages make the local evolution
exact; more stages change nothing, fewer may need a smaller step.

taylor_evolve_recursion builds the space-time coefficient tensor
b[j, s] instead, stepping s with

    b[j, s+1] = 1/(s+1) * sum_k (j_k + 1) (dt / h_k) b[j + e_k, s],

and sums b[j, s] tau^s at a fraction tau of the full step.  The two
paths are algebraically identical summations in different orders and are
held together by an ulp-level test.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import CellCoeffs
from .operators import DerivOperator, InterpOperator, apply_along_axis

__all__ = [
    "TaylorParams",
    "reconstruct_cell",
    "advect_time_derivative",
    "taylor_evolve_horner",
    "taylor_evolve_recursion",
    "verify_space_time_identity",
    "default_stages",
]


def default_stages(order_n: int, dims: int = 3) -> int:
    """Stage count making local evolution exact: d(2N+1)."""
    return dims * (2 * order_n + 1)


@dataclass(frozen=True)
class TaylorParams:
    """Temporal expansion parameters: q stages over a full step dt."""

    stages_q: int
    dt: float

    def __post_init__(self):
        if self.stages_q < 1:
            raise ValueError(f"stages_q must be >= 1, got {self.stages_q}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")

    @property
    def half_dt(self) -> float:
        return self.dt / 2


def reconstruct_cell(
    h_ops: tuple[InterpOperator, InterpOperator, InterpOperator],
    u_loc: np.ndarray,
) -> CellCoeffs:
    """Interpolate the 8-vertex DOF tensor into midpoint coefficients.

    Three dimension-by-dimension sweeps in the fixed order x1, x2, x3.
    The result is the unique tensor polynomial of per-axis degree 2N+1
    matching value and first N scaled derivatives at all eight vertices.
    """
    h1, h2, h3 = h_ops
    ru = apply_along_axis(h1.matrix, u_loc, 1)
    ru = apply_along_axis(h2.matrix, ru, 2)
    ru = apply_along_axis(h3.matrix, ru, 3)
    return CellCoeffs(order_n=h1.order_n, data=ru)


def _axis_shift_scale(w: np.ndarray, inv_h: float, axis: int) -> np.ndarray:
    """Sparse derivative along one axis: out[i] = (i+1)/h * w[i+1], top row 0."""
    side = w.shape[-axis]
    moved = np.moveaxis(w, -axis, -1)
    out = np.zeros_like(moved)
    out[..., :-1] = moved[..., 1:] * (np.arange(1, side) * inv_h).astype(w.dtype)
    return np.moveaxis(out, -1, -axis)


def advect_time_derivative(
    d_ops: tuple[DerivOperator, DerivOperator, DerivOperator],
    w: np.ndarray,
) -> np.ndarray:
    """Coefficients of u_x1 + u_x2 + u_x3, accumulated in axis order."""
    d1, d2, d3 = d_ops
    out = _axis_shift_scale(w, 1.0 / d1.spacing, 1)
    out += _axis_shift_scale(w, 1.0 / d2.spacing, 2)
    out += _axis_shift_scale(w, 1.0 / d3.spacing, 3)
    return out


def taylor_evolve_horner(
    coeffs: CellCoeffs,
    d_ops: tuple[DerivOperator, DerivOperator, DerivOperator],
    params: TaylorParams,
    step: float,
) -> CellCoeffs:
    """Advance a cell's coefficients by time `step` (delta = dt/2 in production).

    Each stage reads the previous stage's tensor in full before the axpy,
    never in place; that makes extra stages beyond d(2N+1) exact no-ops.
    """
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    b = coeffs.data
    w = b.copy()
    for k in range(params.stages_q, 0, -1):
        w = b + np.asarray(step / k, dtype=b.dtype) * advect_time_derivative(d_ops, w)
    return CellCoeffs(order_n=coeffs.order_n, data=w)


def space_time_tensor(
    coeffs: CellCoeffs,
    d_ops: tuple[DerivOperator, DerivOperator, DerivOperator],
    params: TaylorParams,
) -> np.ndarray:
    """Rank-4 space-time coefficients b[s][n3][n2][n1], s = 0..q."""
    b = coeffs.data
    out = np.empty((params.stages_q + 1,) + b.shape, dtype=b.dtype)
    out[0] = b
    for s in range(params.stages_q):
        out[s + 1] = (params.dt / (s + 1)) * advect_time_derivative(d_ops, out[s])
    return out

def taylor_evolve_recursion(
    coeffs: CellCoeffs,
    d_ops: tuple[DerivOperator, DerivOperator, DerivOperator],
    params: TaylorParams,
    tau: float,
) -> CellCoeffs:
    """Evaluate the space-time expansion at fraction tau of the full step.

    Independent oracle for taylor_evolve_horner: builds all temporal
    coefficient tensors first, then sums b[s] * tau^s in ascending s.
    Production evaluation point is tau = 1/2.
    """
    if not 0 < tau <= 1:
        raise ValueError(f"tau must be in (0, 1], got {tau}")
    st = space_time_tensor(coeffs, d_ops, params)
    acc = st[0].copy()
    tau_pow = 1.0
    for s in range(1, st.shape[0]):
        tau_pow *= tau
        acc += st[s] * np.asarray(tau_pow, dtype=acc.dtype)
    return CellCoeffs(order_n=coeffs.order_n, data=acc)


def verify_space_time_identity(
    coeffs: CellCoeffs,
    d_ops: tuple[DerivOperator, DerivOperator, DerivOperator],
    params: TaylorParams,
) -> float:
    """Max |coefficient| of d/dt (expansion) - sum_k d/dx_k (expansion).

    Both derivatives are taken term by term in the scaled bases, so the
    residual measures how exactly the space-time tensor satisfies the
    advection equation as a polynomial identity.  Requires q = d(2N+1),
    where the top temporal slab's spatial derivative vanishes
    structurally and the identity closes.
    """
    st = space_time_tensor(coeffs, d_ops, params)
    q = params.stages_q
    inv_dt = 1.0 / params.dt
    worst = 0.0
    for s in range(q + 1):
        spatial = advect_time_derivative(d_ops, st[s])
        if s < q:
            residual = (s + 1) * inv_dt * st[s + 1] - spatial
        else:
            residual = -spatial
        worst = max(worst, float(np.abs(residual).max()))
    return worst
