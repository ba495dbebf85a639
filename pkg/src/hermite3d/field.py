"""Degree-of-freedom storage over the periodic 3D grid.

The field is the rank-6 tensor data[m3][m2][m1][n3][n2][n1]: grid node
(m1, m2, m3) holds the (N+1)^3 scaled derivatives h^|n|/n! D^n u.  The
innermost index is n1, so each node's DOF block is contiguous.

Two staggered node families share one index set: primary nodes sit at
m*h, dual nodes at (m + 1/2)*h.  A half step always reads one parity
and writes the other.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "GridSpec",
    "DofField",
    "CellCoeffs",
    "gather_cell",
    "scatter_dofs",
    "write_snapshot",
    "read_snapshot",
]

PARITIES = ("primary", "dual")
PRECISION_DTYPES = {"single": np.float32, "double": np.float64}


@dataclass(frozen=True)
class GridSpec:
    """Periodic tensor grid: M_k cells and domain length L_k per axis."""

    cells_per_axis: tuple[int, int, int]
    domain_lengths: tuple[float, float, float] = (1.0, 1.0, 1.0)
    parity: str = "primary"

    def __post_init__(self):
        if len(self.cells_per_axis) != 3 or any(m < 1 for m in self.cells_per_axis):
            raise ValueError(f"cells_per_axis must be three positive ints, got {self.cells_per_axis}")
        if len(self.domain_lengths) != 3 or any(not (l > 0) for l in self.domain_lengths):
            raise ValueError(f"domain_lengths must be three positive reals, got {self.domain_lengths}")
        if self.parity not in PARITIES:
            raise ValueError(f"parity must be one of {PARITIES}, got {self.parity!r}")

    @property
    def spacings(self) -> tuple[float, float, float]:
        return tuple(l / m for l, m in zip(self.domain_lengths, self.cells_per_axis))

    @property
    def num_cells(self) -> int:
        m1, m2, m3 = self.cells_per_axis
        return m1 * m2 * m3

    def wrap(self, axis: int, m: int) -> int:
        """Reduce a node index modulo M_k (axis is 1, 2 or 3)."""
        return m % self.cells_per_axis[axis - 1]

    def node_coord(self, axis: int, m: int) -> float:
        """Coordinate of node m along `axis`, honoring the parity offset."""
        h = self.spacings[axis - 1]
        off = 0.5 if self.parity == "dual" else 0.0
        return (self.wrap(axis, m) + off) * h

    def axis_coords(self, axis: int) -> np.ndarray:
        """All node coordinates along `axis` in index order."""
        m = self.cells_per_axis[axis - 1]
        h = self.spacings[axis - 1]
        off = 0.5 if self.parity == "dual" else 0.0
        return (np.arange(m) + off) * h

    def with_parity(self, parity: str) -> "GridSpec":
        return GridSpec(self.cells_per_axis, self.domain_lengths, parity)


@dataclass
class DofField:
    """Scaled-derivative DOFs of one parity, rank-6 storage."""

    grid: GridSpec
    order_n: int
    data: np.ndarray

    def __post_init__(self):
        m1, m2, m3 = self.grid.cells_per_axis
        npts = self.order_n + 1
        expected = (m3, m2, m1, npts, npts, npts)
        if self.data.shape != expected:
            raise ValueError(f"data shape {self.data.shape} does not match grid/order {expected}")

    @classmethod
    def zeros(cls, grid: GridSpec, order_n: int, precision: str = "double") -> "DofField":
        if precision not in PRECISION_DTYPES:
            raise ValueError(f"precision must be one of {tuple(PRECISION_DTYPES)}, got {precision!r}")
        m1, m2, m3 = grid.cells_per_axis
        npts = order_n + 1
        data = np.zeros((m3, m2, m1, npts, npts, npts), dtype=PRECISION_DTYPES[precision])
        return cls(grid=grid, order_n=order_n, data=data)

    @property
    def precision(self) -> str:
        return "single" if self.data.dtype == np.float32 else "double"

    @property
    def values(self) -> np.ndarray:
        """Node values (the n = (0,0,0) DOF), indexed [m3][m2][m1]."""
        return self.data[..., 0, 0, 0]

    def copy(self) -> "DofField":
        return DofField(grid=self.grid, order_n=self.order_n, data=self.data.copy())

    def all_finite(self) -> bool:
        return bool(np.isfinite(self.data).all())


@dataclass
class CellCoeffs:
    """Coefficients of one cell's midpoint-centered tensor polynomial.

    data[n3][n2][n1] with side 2N+2; entries with all n_k <= N coincide
    with the represented polynomial's scaled midpoint derivatives.
    """

    order_n: int
    data: np.ndarray

    def __post_init__(self):
        side = 2 * self.order_n + 2
        if self.data.shape != (side, side, side):
            raise ValueError(f"coeff tensor must have side {side}, got shape {self.data.shape}")

    @classmethod
    def zeros(cls, order_n: int, dtype=np.float64) -> "CellCoeffs":
        side = 2 * order_n + 2
        return cls(order_n=order_n, data=np.zeros((side, side, side), dtype=dtype))


def gather_cell(field: DofField, cell: tuple[int, int, int]) -> np.ndarray:
    """Collect the 8-vertex DOF tensor of the cell with low corner `cell`.

    cell = (c1, c2, c3), wrapped periodically; the high vertex along axis
    k is node c_k + 1.  Output has side 2N+2: indices 0..N hold the
    low-vertex derivatives, N+1..2N+1 the high-vertex derivatives.
    """
    npts = field.order_n + 1
    side = 2 * npts
    c1, c2, c3 = cell
    out = np.empty((side, side, side), dtype=field.data.dtype)
    for a3 in range(2):
        g3 = field.grid.wrap(3, c3 + a3)
        for a2 in range(2):
            g2 = field.grid.wrap(2, c2 + a2)
            for a1 in range(2):
                g1 = field.grid.wrap(1, c1 + a1)
                out[a3 * npts:(a3 + 1) * npts,
                    a2 * npts:(a2 + 1) * npts,
                    a1 * npts:(a1 + 1) * npts] = field.data[g3, g2, g1]
    return out


def scatter_dofs(coeffs: CellCoeffs, field: DofField, node: tuple[int, int, int]) -> None:
    """Write a cell's low coefficients (n_k <= N) as node DOFs; the rest drop."""
    npts = field.order_n + 1
    c1, c2, c3 = node
    g1 = field.grid.wrap(1, c1)
    g2 = field.grid.wrap(2, c2)
    g3 = field.grid.wrap(3, c3)
    field.data[g3, g2, g1] = coeffs.data[:npts, :npts, :npts]


def write_snapshot(field: DofField, base_path, time: float = 0.0) -> tuple[Path, Path]:
    """Dump the rank-6 tensor as flat little-endian binary plus a JSON sidecar.

    Writes <base>.bin and <base>.json; returns both paths.
    """
    base = Path(base_path)
    bin_path = base.with_suffix(".bin")
    json_path = base.with_suffix(".json")
    data = field.data
    if data.dtype.byteorder == ">":
        data = data.astype(data.dtype.newbyteorder("<"))
    bin_path.parent.mkdir(parents=True, exist_ok=True)
    bin_path.write_bytes(np.ascontiguousarray(data).tobytes())
    sidecar = {
        "cells_per_axis": list(field.grid.cells_per_axis),
        "domain_lengths": list(field.grid.domain_lengths),
        "order_n": field.order_n,
        "parity": field.grid.parity,
        "precision": field.precision,
        "time": time,
        "layout": "m3,m2,m1,n3,n2,n1",
        "dtype": "<f4" if field.precision == "single" else "<f8",
    }
    json_path.write_text(json.dumps(sidecar, sort_keys=True, indent=2) + "\n")
    return bin_path, json_path


def read_snapshot(base_path) -> tuple[DofField, float]:
    """Load a snapshot written by write_snapshot; returns (field, time)."""
    base = Path(base_path)
    meta = json.loads(base.with_suffix(".json").read_text())
    grid = GridSpec(
        cells_per_axis=tuple(meta["cells_per_axis"]),
        domain_lengths=tuple(meta["domain_lengths"]),
        parity=meta["parity"],
    )
    order_n = int(meta["order_n"])
    npts = order_n + 1
    m1, m2, m3 = grid.cells_per_axis
    raw = np.frombuffer(base.with_suffix(".bin").read_bytes(), dtype=np.dtype(meta["dtype"]))
    dtype = PRECISION_DTYPES[meta["precision"]]
    data = raw.reshape(m3, m2, m1, npts, npts, npts).astype(dtype, copy=True)
    return DofField(grid=grid, order_n=order_n, data=data), float(meta["time"])
