"""Constrained finite element spaces as degree-of-freedom masks.

Both schemes eliminate boundary constraints by dropping degrees of freedom
(never by penalties): each space is a boolean mask over the flattened dof
vector plus the values the dropped dofs are pinned to.

Vector dofs are laid out node-major: dof(i, c) = 2 i + c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import curve as cg


@dataclass(frozen=True)
class SpaceMask:
    """free[d] marks retained dofs; values[d] holds pinned values (0 where free)."""

    free: np.ndarray
    values: np.ndarray

    @property
    def reduced(self):
        return np.flatnonzero(self.free)

    @property
    def dim(self):
        return int(np.count_nonzero(self.free))

    def expand(self, reduced_vector):
        """Scatter a reduced vector back to the full layout, pinned values included."""
        full = self.values.copy()
        full[self.free] = reduced_vector
        return full


def _vector_mask(n):
    return np.ones(2 * n, dtype=bool), np.zeros(2 * n)


def position_space(curve):
    """Directions the curve may move in.

    Drops e1 at axis endpoints, both components at clamped and Navier
    endpoints, and component e_i at semifree-i endpoints.
    """
    free, values = _vector_mask(curve.n_nodes)
    for p in (0, 1) if curve.topology == cg.INTERVAL else ():
        i = curve.endpoint_node(p)
        kind = curve.boundary[p].kind
        if kind == cg.AXIS:
            free[2 * i] = False
        elif kind in (cg.CLAMPED, cg.NAVIER):
            free[2 * i : 2 * i + 2] = False
        elif kind == cg.SEMIFREE1:
            free[2 * i] = False
        elif kind == cg.SEMIFREE2:
            free[2 * i + 1] = False
    return SpaceMask(free=free, values=values)


def costate_space(curve, alpha_g):
    """Trial space of the curvature costate for the kappa scheme.

    e1 dropped at axis endpoints; both components pinned to the Gaussian-
    rigidity value 2 pi alpha_g e1 at every conormal-carrying endpoint.  With
    alpha_g = 0 this doubles as the test space used to eliminate the
    conormals.
    """
    free, values = _vector_mask(curve.n_nodes)
    for p in (0, 1) if curve.topology == cg.INTERVAL else ():
        i = curve.endpoint_node(p)
        kind = curve.boundary[p].kind
        if kind == cg.AXIS:
            free[2 * i] = False
        elif kind in cg.CONORMAL_KINDS:
            free[2 * i : 2 * i + 2] = False
            values[2 * i] = 2.0 * math.pi * alpha_g
    return SpaceMask(free=free, values=values)


def weighted_costate_space(curve, alpha_g):
    """Trial space of the costate for the mean-curvature scheme.

    The interpolated product x1 * Y must equal 2 pi alpha_g e1 at conormal
    endpoints, so Y itself is pinned to that value divided by x1 there.
    """
    free, values = _vector_mask(curve.n_nodes)
    x1 = curve.nodes[:, 0]
    for p in (0, 1) if curve.topology == cg.INTERVAL else ():
        i = curve.endpoint_node(p)
        kind = curve.boundary[p].kind
        if kind == cg.AXIS:
            free[2 * i] = False
        elif kind in cg.CONORMAL_KINDS:
            free[2 * i : 2 * i + 2] = False
            values[2 * i] = 2.0 * math.pi * alpha_g / x1[i]
    return SpaceMask(free=free, values=values)


def curvature_space(curve, *, include_axis=False):
    """Scalar curvature space: zero at axis endpoints unless `include_axis`
    (the exact-integration mean-curvature variant keeps those dofs)."""
    n = curve.n_nodes
    free = np.ones(n, dtype=bool)
    if not include_axis:
        for i in curve.axis_node_indices:
            free[i] = False
    return SpaceMask(free=free, values=np.zeros(n))


def reduce_system(n_full, rows, cols, data, rhs_full, row_keep, col_keep, u_fix=None):
    """Eliminate constrained dofs from a full COO system.

    Entries in dropped rows/columns are discarded; columns belonging to
    pinned nonzero values (`u_fix`) are folded into the right-hand side
    first.  Returns (rows_red, cols_red, data_red, rhs_red) ready for a
    reduced SparseMatrix of dimension len(row_keep).
    """
    row_map = np.full(n_full, -1, dtype=np.int64)
    row_map[row_keep] = np.arange(len(row_keep))
    col_map = np.full(n_full, -1, dtype=np.int64)
    col_map[col_keep] = np.arange(len(col_keep))
    if u_fix is not None:
        fixvals = u_fix[cols]
        nz = fixvals != 0.0
        if np.any(nz):
            rhs_full = rhs_full.copy()
            np.subtract.at(rhs_full, rows[nz], data[nz] * fixvals[nz])
    rr = row_map[rows]
    cc = col_map[cols]
    keep = (rr >= 0) & (cc >= 0)
    return rr[keep], cc[keep], data[keep], rhs_full[row_keep]
