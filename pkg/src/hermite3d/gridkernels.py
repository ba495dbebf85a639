"""Grid-wide half-step kernels (numba JIT).

The per-cell arithmetic mirrors kernels.py statement for statement, so
the batched passes and the numpy reference path agree to the last bit.
Tiles are chains of consecutive cells along x1; each tile is an
independent work item (prange), and no two tiles write the same
destination node, so results do not depend on scheduling.

All scale factors arrive as arrays pre-cast to the field dtype:
    h_mat   (s, s)   interpolation matrix
    fac_k   (s,)     derivative factors (i+1)/h_k, last entry 0
    cfac    (q,)     Horner stage factors delta/k at index k-1
`off` is the gather offset of the source parity: 0 when reading the
primary grid (cell vertices c, c+1), -1 when reading the dual grid
(vertices c-1, c).
"""

import numpy as np
import numba
from numba import njit, prange

# workqueue is always available; the default layer probe warns on some boxes
numba.config.THREADING_LAYER = "workqueue"

__all__ = ["fused_pass", "recon_pass", "evolve_pass", "make_tiles"]


def make_tiles(cells_per_axis, tile_x1):
    """Tile table [c3, c2, x1_start, x1_len] in fixed traversal order."""
    m1, m2, m3 = cells_per_axis
    rows = []
    for c3 in range(m3):
        for c2 in range(m2):
            start = 0
            while start < m1:
                length = min(tile_x1, m1 - start)
                rows.append((c3, c2, start, length))
                start += length
    return np.asarray(rows, dtype=np.int64)


@njit(cache=True)
def _gather(src, c3, c2, c1, off, npts, uloc):
    m3, m2, m1 = src.shape[0], src.shape[1], src.shape[2]
    for a3 in range(2):
        g3 = (c3 + off + a3) % m3
        for a2 in range(2):
            g2 = (c2 + off + a2) % m2
            for a1 in range(2):
                g1 = (c1 + off + a1) % m1
                for n3 in range(npts):
                    for n2 in range(npts):
                        for n1 in range(npts):
                            uloc[a3 * npts + n3, a2 * npts + n2, a1 * npts + n1] = \
                                src[g3, g2, g1, n3, n2, n1]


@njit(cache=True)
def _reconstruct(h_mat, uloc, ru):
    # Sweep x1, x2, x3 with ascending-k contractions; uloc doubles as the
    # ping-pong buffer and is clobbered.
    s = h_mat.shape[0]
    for z in range(s):
        for y in range(s):
            for i in range(s):
                c = h_mat[i, 0] * uloc[z, y, 0]
                for k in range(1, s):
                    c += h_mat[i, k] * uloc[z, y, k]
                ru[z, y, i] = c
    for z in range(s):
        for i in range(s):
            for x in range(s):
                c = h_mat[i, 0] * ru[z, 0, x]
                for k in range(1, s):
                    c += h_mat[i, k] * ru[z, k, x]
                uloc[z, i, x] = c
    for i in range(s):
        for y in range(s):
            for x in range(s):
                c = h_mat[i, 0] * uloc[0, y, x]
                for k in range(1, s):
                    c += h_mat[i, k] * uloc[k, y, x]
                ru[i, y, x] = c


@njit(cache=True)
def _evolve(ru, fac1, fac2, fac3, cfac, w, dsum):
    s = ru.shape[0]
    q = cfac.shape[0]
    for z in range(s):
        for y in range(s):
            for x in range(s):
                w[z, y, x] = ru[z, y, x]
    for k in range(q, 0, -1):
        c = cfac[k - 1]
        for z in range(s):
            for y in range(s):
                for x in range(s):
                    acc = fac1[s - 1]  # typed zero
                    if x < s - 1:
                        acc += fac1[x] * w[z, y, x + 1]
                    if y < s - 1:
                        acc += fac2[y] * w[z, y + 1, x]
                    if z < s - 1:
                        acc += fac3[z] * w[z + 1, y, x]
                    dsum[z, y, x] = acc
        for z in range(s):
            for y in range(s):
                for x in range(s):
                    w[z, y, x] = ru[z, y, x] + c * dsum[z, y, x]


@njit(cache=True)
def _scatter(w, dst, c3, c2, c1, npts):
    for n3 in range(npts):
        for n2 in range(npts):
            for n1 in range(npts):
                dst[c3, c2, c1, n3, n2, n1] = w[n3, n2, n1]


@njit(cache=True, parallel=True)
def fused_pass(src, dst, h_mat, fac1, fac2, fac3, cfac, tiles, off):
    """Gather -> reconstruct -> evolve -> scatter per cell, no global intermediate."""
    s = h_mat.shape[0]
    npts = s // 2
    for t in prange(tiles.shape[0]):
        c3 = tiles[t, 0]
        c2 = tiles[t, 1]
        start = tiles[t, 2]
        length = tiles[t, 3]
        uloc = np.empty((s, s, s), dtype=src.dtype)
        ru = np.empty((s, s, s), dtype=src.dtype)
        w = np.empty((s, s, s), dtype=src.dtype)
        dsum = np.empty((s, s, s), dtype=src.dtype)
        for c1 in range(start, start + length):
            _gather(src, c3, c2, c1, off, npts, uloc)
            _reconstruct(h_mat, uloc, ru)
            _evolve(ru, fac1, fac2, fac3, cfac, w, dsum)
            _scatter(w, dst, c3, c2, c1, npts)


@njit(cache=True, parallel=True)
def recon_pass(src, coeff, h_mat, tiles, off):
    """Gather -> reconstruct every cell into the global coefficient field."""
    s = h_mat.shape[0]
    npts = s // 2
    for t in prange(tiles.shape[0]):
        c3 = tiles[t, 0]
        c2 = tiles[t, 1]
        start = tiles[t, 2]
        length = tiles[t, 3]
        uloc = np.empty((s, s, s), dtype=src.dtype)
        ru = np.empty((s, s, s), dtype=src.dtype)
        for c1 in range(start, start + length):
            _gather(src, c3, c2, c1, off, npts, uloc)
            _reconstruct(h_mat, uloc, ru)
            for j3 in range(s):
                for j2 in range(s):
                    for j1 in range(s):
                        coeff[c3, c2, c1, j3, j2, j1] = ru[j3, j2, j1]


@njit(cache=True, parallel=True)
def evolve_pass(coeff, dst, fac1, fac2, fac3, cfac, tiles):
    """Evolve every cell of the coefficient field and scatter node DOFs."""
    s = coeff.shape[3]
    npts = s // 2
    for t in prange(tiles.shape[0]):
        c3 = tiles[t, 0]
        c2 = tiles[t, 1]
        start = tiles[t, 2]
        length = tiles[t, 3]
        ru = np.empty((s, s, s), dtype=coeff.dtype)
        w = np.empty((s, s, s), dtype=coeff.dtype)
        dsum = np.empty((s, s, s), dtype=coeff.dtype)
        for c1 in range(start, start + length):
            for j3 in range(s):
                for j2 in range(s):
                    for j1 in range(s):
                        ru[j3, j2, j1] = coeff[c3, c2, c1, j3, j2, j1]
            _evolve(ru, fac1, fac2, fac3, cfac, w, dsum)
            _scatter(w, dst, c3, c2, c1, npts)
