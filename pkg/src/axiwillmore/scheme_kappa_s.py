"""One time step of the mean-curvature-based scheme.

Works directly with the scalar mean curvature of the surface instead of the
curve curvature, in two quadrature variants:

  * LUMPED : mass lumping at every toggled inner product; the mean curvature
    is pinned to zero at axis endpoints.  Reproduces exact axis
    orthogonality but drifts vertices tangentially (the documented
    coalescence failure on closed curves).
  * EXACT  : true integration (3-point Gauss, exact for the cubic
    integrands) at the toggled spots; the axis values of the mean curvature
    stay genuine unknowns and axis orthogonality holds only approximately.

The quadrature flag and the curvature-space choice switch together; each
assembly site below notes which inner products toggle.  Elimination,
conormal recovery and the block layout mirror the curvature scheme, with
every costate pairing weighted by x1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import curve as cg
from . import functionals as fn
from . import linsolve, spaces
from .errors import DivisionByAxis, NonFiniteSolution
from .functionals import GAUSS_S, GAUSS_W, gauss_values
from .scheme_kappa import (
    StepReport,
    _Geometry,
    _stiffness_entries,
)

TWO_PI = 2.0 * math.pi


class Variant(enum.Enum):
    """Quadrature/space flag: mass lumping or true integration."""

    LUMPED = "lumped"
    EXACT = "exact"

    @property
    def functional_name(self):
        return "kappaS_lumped" if self is Variant.LUMPED else "kappaS_exact"


@dataclass(frozen=True)
class SchemeStateS:
    """One time level of the mean-curvature scheme."""

    curve: cg.GeneratingCurve
    kappa_s: np.ndarray
    Y: np.ndarray
    conormals: Mapping[int, np.ndarray] = field(default_factory=dict)
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kappa_s", np.asarray(self.kappa_s, dtype=float))
        object.__setattr__(self, "Y", np.asarray(self.Y, dtype=float))


@dataclass
class BlockSystemS:
    """Reduced step system of the mean-curvature scheme, columns (Y, dX, kappa_S)."""

    matrix: linsolve.SparseMatrix
    rhs: np.ndarray
    y_space: spaces.SpaceMask
    x_space: spaces.SpaceMask
    k_space: spaces.SpaceMask
    geometry: _Geometry
    params: fn.ModelParams
    dt: float
    variant: Variant

    @property
    def dims(self):
        return (self.y_space.dim, self.x_space.dim, self.k_space.dim)

    def split(self, solution):
        ny, nx, nk = self.dims
        return solution[:ny], solution[ny : ny + nx], solution[ny + nx :]


def _phi_at_gauss():
    """Hat function values at the Gauss points: rows (phi_jm, phi_jp)."""
    return np.stack([1.0 - GAUSS_S, GAUSS_S])


_PHI_G = _phi_at_gauss()

# exact integrals of x1 * phi_a * phi_b over an element, as coefficient of
# (x1_jm, x1_jp):  I[a][b] = (c_m, c_p) with  int = c_m x1_jm + c_p x1_jp
_I3 = {
    (0, 0): (3.0 / 12.0, 1.0 / 12.0),
    (0, 1): (1.0 / 12.0, 1.0 / 12.0),
    (1, 0): (1.0 / 12.0, 1.0 / 12.0),
    (1, 1): (1.0 / 12.0, 3.0 / 12.0),
}


def _weighted_mass_entries(geo, x1):
    """COO of the exact scalar mass with weight x1: int x1 phi_a phi_b |X_rho|."""
    jm, jp = geo.en[:, 0], geo.en[:, 1]
    L = geo.frames.length
    nodes = (jm, jp)
    rows, cols, data = [], [], []
    for a in (0, 1):
        for b in (0, 1):
            cm, cpl = _I3[(a, b)]
            rows.append(nodes[a])
            cols.append(nodes[b])
            data.append(L * (cm * x1[jm] + cpl * x1[jp]))
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(data)


def assemble_step_S(state, params, dt, variant):
    """Assemble the reduced block system advancing `state` by `dt`."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if not isinstance(variant, Variant):
        variant = Variant(variant)
    geo = _Geometry.at(state.curve)
    curve = state.curve
    n = curve.n_nodes
    en, frames, vframes, w = geo.en, geo.frames, geo.vframes, geo.weights
    jm, jp = en[:, 0], en[:, 1]
    x1 = curve.nodes[:, 0]
    tau, nu, L = frames.tau, frames.nu, frames.length
    xbar = 0.5 * (x1[jm] + x1[jp])

    ks = state.kappa_s
    Y = state.Y
    p = params
    lumped = variant is Variant.LUMPED
    ade = fn.ade_term(curve, frames, ks, p.M0, variant.functional_name)

    # scalar bending density pi*[alpha (ks - kbar)^2 + 2 lam + 2 beta A ks]
    def dens(v):
        return math.pi * (p.alpha * (v - p.kbar) ** 2 + 2.0 * p.lam + 2.0 * p.beta * ade * v)

    # ---- right-hand side, a-block (toggled quadrature) ---------------------
    ra = np.zeros((n, 2))
    if lumped:
        g1 = dens(ks) * x1 - Y[:, 0]
        coef = -0.5 * (g1[jp] + g1[jm])
        np.add.at(ra, jp, coef[:, None] * tau)
        np.add.at(ra, jm, -coef[:, None] * tau)

        h_p = (dens(ks[jp]) - ks[jp] * np.sum(Y[jp] * nu, axis=1)) * L
        h_m = (dens(ks[jm]) - ks[jm] * np.sum(Y[jm] * nu, axis=1)) * L
        dy_tau = np.sum((Y[jp] - Y[jm]) * tau, axis=1)
        np.add.at(ra[:, 0], jp, -0.5 * (h_p - dy_tau))
        np.add.at(ra[:, 0], jm, -0.5 * (h_m - dy_tau))

        pvec = x1[:, None] * ks[:, None] * cg.perp(Y)
        pav = 0.5 * (pvec[jp] + pvec[jm])
        np.add.at(ra, jp, pav)
        np.add.at(ra, jm, -pav)
    else:
        x1g = gauss_values(x1, en)
        ksg = gauss_values(ks, en)
        y1g = gauss_values(Y[:, 0], en)
        y2g = gauss_values(Y[:, 1], en)
        densg = dens(ksg)
        g1bar = (densg * x1g - y1g) @ GAUSS_W
        np.add.at(ra, jp, -g1bar[:, None] * tau)
        np.add.at(ra, jm, g1bar[:, None] * tau)

        ynu = y1g * nu[:, 0][:, None] + y2g * nu[:, 1][:, None]
        hg = (densg - ksg * ynu) * L[:, None]
        dy_tau = np.sum((Y[jp] - Y[jm]) * tau, axis=1)
        for a, node in ((0, jm), (1, jp)):
            hw = (hg * _PHI_G[a][None, :]) @ GAUSS_W - dy_tau * float(
                _PHI_G[a] @ GAUSS_W
            )
            np.add.at(ra[:, 0], node, -hw)

        perp1 = y2g  # perp(Y) = (Y2, -Y1)
        perp2 = -y1g
        pbar1 = (x1g * ksg * perp1) @ GAUSS_W
        pbar2 = (x1g * ksg * perp2) @ GAUSS_W
        np.add.at(ra[:, 0], jp, pbar1)
        np.add.at(ra[:, 1], jp, pbar2)
        np.add.at(ra[:, 0], jm, -pbar1)
        np.add.at(ra[:, 1], jm, -pbar2)

    for pt in curve.endpoints_of_kind(cg.LINE_ENERGY_KINDS):
        i = curve.endpoint_node(pt)
        m_old = state.conormals.get(pt)
        extra = TWO_PI * p.sigma
        if m_old is not None:
            extra += float(np.dot(m_old, Y[i]))
        ra[i, 0] -= extra

    # explicit tangential part of the weighted stiffness (plain integration)
    dy = Y[jp] - Y[jm]
    c = xbar * np.sum(dy * tau, axis=1) / L
    np.add.at(ra, jp, -c[:, None] * tau)
    np.add.at(ra, jm, c[:, None] * tau)

    # ---- right-hand side, b-block ------------------------------------------
    if lumped:
        rb = -TWO_PI * w * x1 * (p.beta * ade - p.alpha * p.kbar)
    else:
        rb = np.zeros(n)
        const = p.beta * ade - p.alpha * p.kbar
        for a, node in ((0, jm), (1, jp)):
            cm, cpl = _I3[(a, 0)][0] + _I3[(a, 1)][0], _I3[(a, 0)][1] + _I3[(a, 1)][1]
            np.add.at(rb, node, -TWO_PI * const * L * (cm * x1[jm] + cpl * x1[jp]))

    # ---- right-hand side, c-block ------------------------------------------
    rc = np.zeros((n, 2))
    np.add.at(rc, jp, -xbar[:, None] * tau)
    np.add.at(rc, jm, xbar[:, None] * tau)
    rc[:, 0] -= w
    for pt in curve.endpoints_of_kind(cg.CLAMPED):
        i = curve.endpoint_node(pt)
        rc[i] += x1[i] * curve.boundary[pt].zeta

    # ---- matrix blocks -------------------------------------------------------
    rows_parts, cols_parts, data_parts = [], [], []

    def put(r, c_, d):
        rows_parts.append(np.asarray(r, dtype=np.int64))
        cols_parts.append(np.asarray(c_, dtype=np.int64))
        data_parts.append(np.asarray(d, dtype=float))

    idx = np.arange(n)
    qblocks = (TWO_PI / dt) * (w * x1)[:, None, None] * vframes.projection
    for r in (0, 1):
        for c_ in (0, 1):
            put(2 * idx + r, 2 * n + 2 * idx + c_, qblocks[:, r, c_])

    # implicit weighted costate stiffness (plain integration)
    sr, sc, sd = _stiffness_entries(geo, xbar / L)
    put(sr, sc, -sd)

    scal = np.arange(n)
    if lumped:
        put(2 * n + scal, 4 * n + scal, TWO_PI * p.alpha * w * x1)
        nw = (w * x1)[:, None] * vframes.omega
        for c_ in (0, 1):
            put(2 * n + scal, 2 * scal + c_, -nw[:, c_])
            put(3 * n + 2 * scal + c_, 4 * n + scal, nw[:, c_])
    else:
        mr, mc, md = _weighted_mass_entries(geo, x1)
        put(2 * n + mr, 4 * n + mc, TWO_PI * p.alpha * md)
        # pairing int x1 phi_a phi_b nu |X_rho| between scalar rows and Y cols
        nodes = (jm, jp)
        for a in (0, 1):
            for b in (0, 1):
                cm, cpl = _I3[(a, b)]
                val = L * (cm * x1[jm] + cpl * x1[jp])
                for c_ in (0, 1):
                    put(2 * n + nodes[a], 2 * nodes[b] + c_, -val * nu[:, c_])
                    put(3 * n + 2 * nodes[a] + c_, 4 * n + nodes[b], val * nu[:, c_])

    sr, sc, sd = _stiffness_entries(geo, xbar / L)
    put(3 * n + sr, 2 * n + sc, sd)

    full_dim = 5 * n
    rows_full = np.concatenate(rows_parts)
    cols_full = np.concatenate(cols_parts)
    data_full = np.concatenate(data_parts)
    rhs_full = np.concatenate([ra.ravel(), rb, rc.ravel()])

    x_space = spaces.position_space(curve)
    y_space = spaces.weighted_costate_space(curve, p.alpha_g)
    k_space = spaces.curvature_space(curve, include_axis=not lumped)
    u_fix = np.zeros(full_dim)
    u_fix[: 2 * n] = y_space.values

    row_keep = np.concatenate(
        [x_space.reduced, 2 * n + k_space.reduced, 3 * n + y_space.reduced]
    )
    col_keep = np.concatenate(
        [y_space.reduced, 2 * n + x_space.reduced, 4 * n + k_space.reduced]
    )
    rr, cc, dd, rhs = spaces.reduce_system(
        full_dim, rows_full, cols_full, data_full, rhs_full, row_keep, col_keep, u_fix
    )
    matrix = linsolve.SparseMatrix.from_coo(len(row_keep), rr, cc, dd).finalize()

    return BlockSystemS(
        matrix=matrix,
        rhs=rhs,
        y_space=y_space,
        x_space=x_space,
        k_space=k_space,
        geometry=geo,
        params=params,
        dt=dt,
        variant=variant,
    )


def _constraint_terms(geo, ks_new, x_new, variant):
    """Full-space evaluation of the weighted curvature side constraint."""
    curve = geo.curve
    n = curve.n_nodes
    jm, jp = geo.en[:, 0], geo.en[:, 1]
    x1 = curve.nodes[:, 0]
    L, nu, w = geo.frames.length, geo.frames.nu, geo.weights
    res = np.zeros((n, 2))
    if variant is Variant.LUMPED:
        res += (w * x1 * ks_new)[:, None] * geo.vframes.omega
    else:
        en = geo.en
        ksg = gauss_values(ks_new, en)
        x1g = gauss_values(x1, en)
        for a, node in ((0, jm), (1, jp)):
            coeff = L * ((x1g * ksg * _PHI_G[a][None, :]) @ GAUSS_W)
            np.add.at(res, node, coeff[:, None] * nu)
    res[:, 0] += w
    xbar = 0.5 * (x1[jm] + x1[jp])
    dx = (xbar[:, None] / L[:, None]) * (x_new[jp] - x_new[jm])
    np.add.at(res, jp, dx)
    np.add.at(res, jm, -dx)
    return res


def _recover_conormals_S(geo, ks_new, x_new, variant):
    """Read the weighted conormals off the constraint rows, divided by x1."""
    curve = geo.curve
    terms = _constraint_terms(geo, ks_new, x_new, variant)
    out = {}
    for p in curve.endpoints_of_kind(cg.CONORMAL_KINDS):
        i = curve.endpoint_node(p)
        x1p = curve.nodes[i, 0]
        if x1p <= 0.0:
            raise DivisionByAxis(f"conormal endpoint {p} touches the axis")
        out[p] = terms[i] / x1p
    return out


def constraint_residual_S(geo, ks_new, x_new, conormals, variant):
    """Relative residual of the weighted side constraint over the full space."""
    curve = geo.curve
    res = _constraint_terms(geo, ks_new, x_new, variant)
    scale = max(np.max(np.abs(res)), 1e-30)
    x1 = curve.nodes[:, 0]
    for p in curve.endpoints_of_kind(cg.CLAMPED):
        i = curve.endpoint_node(p)
        res[i] -= x1[i] * curve.boundary[p].zeta
    for p, m in (conormals or {}).items():
        i = curve.endpoint_node(p)
        res[i] -= x1[i] * m
    for i in curve.axis_node_indices:
        res[i, 0] = 0.0
    return float(np.max(np.abs(res)) / scale)


def solve_step_S(system, state):
    """Solve the assembled system; returns (new_state, StepReport)."""
    fact = linsolve.factor(system.matrix)
    u, rep = linsolve.solve(fact, system.rhs)
    uy, ux, uk = system.split(u)
    geo = system.geometry
    curve = state.curve
    n = curve.n_nodes

    y_new = system.y_space.expand(uy).reshape(n, 2)
    dx = system.x_space.expand(ux).reshape(n, 2)
    ks_new = system.k_space.expand(uk)
    x_new = curve.nodes + dx
    if not (
        np.all(np.isfinite(x_new))
        and np.all(np.isfinite(ks_new))
        and np.all(np.isfinite(y_new))
    ):
        raise NonFiniteSolution("step produced non-finite state")

    conormals = _recover_conormals_S(geo, ks_new, x_new, system.variant)
    cres = constraint_residual_S(geo, ks_new, x_new, conormals, system.variant)

    energy = fn.energy(
        curve,
        ks_new,
        system.params,
        system.variant.functional_name,
        frames=geo.frames,
        conormals=conormals,
        boundary_positions=x_new,
    )
    ade = fn.ade_term(
        curve, geo.frames, ks_new, system.params.M0, system.variant.functional_name
    )
    new_state = SchemeStateS(
        curve=curve.with_nodes(x_new),
        kappa_s=ks_new,
        Y=y_new,
        conormals=conormals,
        t=state.t + system.dt,
    )
    report = StepReport(
        energy=energy,
        ade=ade,
        solve_residual=rep.residual,
        rcond=fact.rcond,
        conormal_residual=cres,
    )
    return new_state, report


def step_S(state, params, dt, variant):
    """Assemble and solve one step of the chosen variant."""
    return solve_step_S(assemble_step_S(state, params, dt, variant), state)


def init_state_S(curve, params, variant=Variant.EXACT):
    """Initial data: mean curvature from the curvature-scheme initial data
    composed with the curvature proxy, costate from the coupling equation
    with the axis and conormal-endpoint overrides."""
    from .scheme_kappa import init_state

    if not isinstance(variant, Variant):
        variant = Variant(variant)
    base = init_state(curve, params)
    geo = _Geometry.at(curve)
    vframes = geo.vframes
    ks0 = fn.curvature_proxy(curve, vframes, base.kappa).values
    ade = fn.ade_term(curve, geo.frames, ks0, params.M0, variant.functional_name)
    mag = np.hypot(vframes.omega[:, 0], vframes.omega[:, 1])
    ystar = (
        TWO_PI
        * ((params.alpha * (ks0 - params.kbar) + params.beta * ade) / mag)[:, None]
        * vframes.unit
    )
    y0 = ystar.copy()
    for i in curve.axis_node_indices:
        y0[i] = np.array([0.0, ystar[i, 1]])
    for p in curve.endpoints_of_kind(cg.CONORMAL_KINDS):
        i = curve.endpoint_node(p)
        x1p = curve.nodes[i, 0]
        if x1p <= 0.0:
            raise DivisionByAxis(f"conormal endpoint {p} touches the axis")
        y0[i] = np.array([TWO_PI * params.alpha_g / x1p, 0.0])
    return SchemeStateS(
        curve=curve, kappa_s=ks0, Y=y0, conormals=dict(base.conormals), t=0.0
    )
