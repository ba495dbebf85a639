"""Analytic initial conditions, exact advection solutions, error norms.

Initial conditions are sums of separable terms u(x) = prod_k f_k(x_k),
so every mixed scaled derivative is a product of per-axis derivative
tables and all (N+1)^3 DOFs can be filled exactly, without symbolic
machinery.  The exact solution of u_t = u_x1 + u_x2 + u_x3 is the
characteristic shift u0(x + t, y + t, z + t) with periodic wrapping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .field import DofField, GridSpec, PRECISION_DTYPES

__all__ = [
    "FourierMode",
    "Constant",
    "Monomial",
    "SeparableIC",
    "ErrorNorms",
    "init_field",
    "exact_solution",
    "compute_error",
    "plane_wave",
]


@dataclass(frozen=True)
class FourierMode:
    """f(x) = amplitude * sin(2 pi k x / L + phase), k integer."""

    amplitude: float = 1.0
    wavenumber: int = 1
    phase: float = 0.0
    periodic = True
    smoothness = "analytic"

    def __post_init__(self):
        if self.wavenumber != int(self.wavenumber):
            raise ValueError(f"wavenumber must be an integer, got {self.wavenumber}")

    def deriv_table(self, x: np.ndarray, h: float, count: int, length: float) -> np.ndarray:
        # d^n/dx^n sin(w x + p) = w^n sin(w x + p + n pi/2)
        omega = 2 * np.pi * self.wavenumber / length
        out = np.empty((len(x), count))
        for n in range(count):
            out[:, n] = (h ** n / math.factorial(n)) * self.amplitude * omega ** n \
                * np.sin(omega * x + self.phase + n * np.pi / 2)
        return out

    def eval(self, x, length: float):
        omega = 2 * np.pi * self.wavenumber / length
        return self.amplitude * np.sin(omega * x + self.phase)


@dataclass(frozen=True)
class Constant:
    """f(x) = value."""

    value: float = 1.0
    periodic = True
    smoothness = "analytic"

    def deriv_table(self, x, h, count, length):
        out = np.zeros((len(x), count))
        out[:, 0] = self.value
        return out

    def eval(self, x, length):
        return np.full_like(np.asarray(x, dtype=float), self.value)


@dataclass(frozen=True)
class Monomial:
    """f(x) = ((x - L/2) / L)^degree, the scaled coordinate of a single cell.

    Not periodic; usable only on axes with one cell (reconstruction and
    evolution exactness tests).
    """

    degree: int
    periodic = False
    smoothness = "polynomial"

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError(f"degree must be >= 0, got {self.degree}")

    def deriv_table(self, x, h, count, length):
        z = (np.asarray(x, dtype=float) - length / 2) / length
        ratio = h / length
        out = np.zeros((len(z), count))
        for n in range(min(count, self.degree + 1)):
            out[:, n] = math.comb(self.degree, n) * ratio ** n * z ** (self.degree - n)
        return out

    def eval(self, x, length):
        z = (np.asarray(x, dtype=float) - length / 2) / length
        return z ** self.degree


Factor = FourierMode | Constant | Monomial


@dataclass(frozen=True)
class SeparableIC:
    """Sum of separable terms; each term is one factor per axis."""

    terms: tuple[tuple[Factor, Factor, Factor], ...]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("initial condition needs at least one term")
        for term in self.terms:
            if len(term) != 3:
                raise ValueError("each term needs exactly three per-axis factors")

    @property
    def smoothness_class(self) -> str:
        kinds = {f.smoothness for term in self.terms for f in term}
        return "polynomial" if "polynomial" in kinds else "analytic"

    def periodic_axes(self) -> tuple[bool, bool, bool]:
        return tuple(all(term[k].periodic for term in self.terms) for k in range(3))


def plane_wave(wavenumber: int = 1, amplitude: float = 1.0, phase: float = 0.0) -> SeparableIC:
    """sin(2 pi k (x1 + x2 + x3) / L + phase) as four separable terms.

    Expansion of sin(A1 + A2 + A3) with cos folded in as a quarter-period
    phase shift; the extra phase rides on the first axis.
    """
    half = np.pi / 2

    def mode(amp, ph):
        return FourierMode(amplitude=amp, wavenumber=wavenumber, phase=ph)

    return SeparableIC(terms=(
        (mode(amplitude, phase), mode(1.0, half), mode(1.0, half)),
        (mode(amplitude, phase + half), mode(1.0, 0.0), mode(1.0, half)),
        (mode(amplitude, phase + half), mode(1.0, half), mode(1.0, 0.0)),
        (mode(-amplitude, phase), mode(1.0, 0.0), mode(1.0, 0.0)),
    ))


def init_field(
    ic: SeparableIC,
    grid: GridSpec,
    order_n: int,
    precision: str = "double",
) -> DofField:
    """Fill every DOF with the exact scaled derivative of the IC at its node."""
    for k, ok in enumerate(ic.periodic_axes()):
        if not ok and grid.cells_per_axis[k] > 1:
            raise ValueError(
                f"non-periodic factor along axis {k + 1} requires a single cell, "
                f"grid has {grid.cells_per_axis[k]}"
            )
    npts = order_n + 1
    hs = grid.spacings
    ls = grid.domain_lengths
    coords = [grid.axis_coords(k) for k in (1, 2, 3)]
    m1, m2, m3 = grid.cells_per_axis
    data = np.zeros((m3, m2, m1, npts, npts, npts))
    for f1, f2, f3 in ic.terms:
        a1 = f1.deriv_table(coords[0], hs[0], npts, ls[0])
        a2 = f2.deriv_table(coords[1], hs[1], npts, ls[1])
        a3 = f3.deriv_table(coords[2], hs[2], npts, ls[2])
        data += np.einsum("ap,bq,cr->abcpqr", a3, a2, a1)
    return DofField(grid=grid, order_n=order_n,
                    data=data.astype(PRECISION_DTYPES[precision], copy=False))


def exact_solution(ic: SeparableIC, t: float, domain_lengths=(1.0, 1.0, 1.0)):
    """Evaluator x -> u0(x1 + t, x2 + t, x3 + t) with periodic wrapping."""

    def evaluate(x1, x2, x3):
        xs = [np.mod(np.asarray(x, dtype=float) + t, l)
              for x, l in zip((x1, x2, x3), domain_lengths)]
        total = 0.0
        for f1, f2, f3 in ic.terms:
            total = total + f1.eval(xs[0], domain_lengths[0]) \
                * f2.eval(xs[1], domain_lengths[1]) \
                * f3.eval(xs[2], domain_lengths[2])
        return total

    return evaluate


@dataclass(frozen=True)
class ErrorNorms:
    """Node-value error norms: max and volume-weighted l2."""

    l_inf: float
    l2: float


def compute_error(field: DofField, exact) -> ErrorNorms:
    """Compare node values (the n = (0,0,0) DOF) against an exact evaluator."""
    if field.grid.parity != "primary":
        raise ValueError("error norms are computed on the primary grid")
    x1 = field.grid.axis_coords(1)[None, None, :]
    x2 = field.grid.axis_coords(2)[None, :, None]
    x3 = field.grid.axis_coords(3)[:, None, None]
    diff = field.values.astype(np.float64) - exact(x1, x2, x3)
    h1, h2, h3 = field.grid.spacings
    l_inf = float(np.abs(diff).max())
    l2 = float(np.sqrt(h1 * h2 * h3 * np.sum(diff * diff)))
    return ErrorNorms(l_inf=l_inf, l2=l2)
