"""One time step of the curvature-based scheme.

Unknowns per step: the position update (delta X), the new curve curvature
kappa (zero at axis endpoints) and the costate Y (pinned to 2 pi alpha_g e1
at conormal endpoints).  The discrete conormals are eliminated by testing
the curvature side-constraint only against costate-space directions and are
recovered afterwards from the constraint row at each conormal endpoint.

The three coupled equations, all inner products weighted by the current
geometry and mass-lumped where marked in the derivation:

 (a) velocity equation: lumped projected velocity against the implicit
     costate stiffness, the tangential part of the stiffness taken explicit,
     driven by the bending/area/ADE/line-energy shape gradient;
 (b) curvature/costate coupling through the mean-curvature proxy, implicit
     in (kappa, Y);
 (c) the curvature side constraint, implicit in (kappa, X).

Constraints are applied by dof elimination; the reduced block system is
ordered (Y, delta X, kappa).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from . import curve as cg
from . import functionals as fn
from . import linsolve, spaces
from .errors import AssemblyDomainError, NonFiniteSolution

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SchemeState:
    """One time level of the curvature scheme."""

    curve: cg.GeneratingCurve
    kappa: np.ndarray
    Y: np.ndarray
    conormals: Mapping[int, np.ndarray] = field(default_factory=dict)
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kappa", np.asarray(self.kappa, dtype=float))
        object.__setattr__(self, "Y", np.asarray(self.Y, dtype=float))


@dataclass
class StepReport:
    """Per-step bookkeeping: mixed-form energy, ADE value, solver data."""

    energy: float
    ade: float
    solve_residual: float
    rcond: float
    conormal_residual: float
    lambda_a: float = 0.0
    lambda_v: float = 0.0
    newton_iters: int = 0


@dataclass
class _Geometry:
    """Current-level geometry shared by assembly, recovery and diagnostics."""

    curve: cg.GeneratingCurve
    en: np.ndarray
    frames: cg.ElementFrames
    vframes: cg.VertexFrames
    weights: np.ndarray

    @classmethod
    def at(cls, curve):
        x1 = curve.nodes[:, 0]
        off_axis = np.ones(curve.n_nodes, dtype=bool)
        for i in curve.axis_node_indices:
            off_axis[i] = False
        if np.any(off_axis & (x1 <= 0.0)):
            i = int(np.argmax(off_axis & (x1 <= 0.0)))
            raise AssemblyDomainError(
                f"vertex {i} has x1 = {x1[i]!r} <= 0 off the axis"
            )
        frames = cg.build_element_frames(curve, coalescence_check=True)
        vframes = cg.build_vertex_frames(curve, frames)
        weights = cg.lumped_weights(curve, frames)
        return cls(curve, curve.element_nodes(), frames, vframes, weights)


@dataclass
class BlockSystem:
    """Reduced linear system of one time step.

    Unknown layout: [costate Y | position update | curvature], each in its
    reduced space.  `multiplier_columns`, when assembled, hold the reduced
    area/volume forcing columns of the conserving variant.
    """

    matrix: linsolve.SparseMatrix
    rhs: np.ndarray
    y_space: spaces.SpaceMask
    x_space: spaces.SpaceMask
    k_space: spaces.SpaceMask
    geometry: _Geometry
    params: fn.ModelParams
    dt: float
    multiplier_columns: Optional[np.ndarray] = None

    @property
    def dims(self):
        return (self.y_space.dim, self.x_space.dim, self.k_space.dim)

    def split(self, solution):
        ny, nx, nk = self.dims
        return solution[:ny], solution[ny : ny + nx], solution[ny + nx :]


def _scalar_normal_rows(geo):
    """Rows of the lumped pairing (Y, chi nu |X_rho|)^h: weight * omega per vertex."""
    return geo.weights[:, None] * geo.vframes.omega


def _stiffness_entries(geo, coef):
    """COO pattern of sum_e coef_e (dU . dV)/1, identity in the components.

    coef carries any per-element scalar weight (1/L for the plain stiffness).
    Returns (rows, cols, data) over vector dofs.
    """
    jm, jp = geo.en[:, 0], geo.en[:, 1]
    e = len(coef)
    rows = np.empty(8 * e, dtype=np.int64)
    cols = np.empty(8 * e, dtype=np.int64)
    data = np.empty(8 * e)
    k = 0
    for c in (0, 1):
        for a, b, s in ((jp, jp, 1.0), (jm, jm, 1.0), (jp, jm, -1.0), (jm, jp, -1.0)):
            rows[k : k + e] = 2 * a + c
            cols[k : k + e] = 2 * b + c
            data[k : k + e] = s * coef
            k += e
    return rows, cols, data


def _tangential_rhs(geo, coef, Yold, rhs_nodes):
    """Accumulate -sum_e coef_e (dY . tau)(dchi . tau) into the rhs array."""
    jm, jp = geo.en[:, 0], geo.en[:, 1]
    dY = Yold[jp] - Yold[jm]
    c = coef * np.sum(dY * geo.frames.tau, axis=1)
    np.add.at(rhs_nodes, jp, -c[:, None] * geo.frames.tau)
    np.add.at(rhs_nodes, jm, c[:, None] * geo.frames.tau)


def assemble_step(state, params, dt, *, multiplier_columns=False):
    """Assemble the reduced block system advancing `state` by `dt`.

    All coefficient fields are evaluated at the current level; the costate
    stiffness and the curvature blocks are implicit.  With
    `multiplier_columns`, the area and volume forcing columns of the
    conserving variant are reduced alongside.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    geo = _Geometry.at(state.curve)
    curve = state.curve
    n = curve.n_nodes
    en, frames, vframes, w = geo.en, geo.frames, geo.vframes, geo.weights
    jm, jp = en[:, 0], en[:, 1]
    x1 = curve.nodes[:, 0]
    tau, nu, L = frames.tau, frames.nu, frames.length
    omega = vframes.omega

    kappa = state.kappa
    Y = state.Y
    p = params
    zf = fn.zfactor(curve)
    frac = fn.azimuthal_fraction(curve, vframes)
    proxy = zf * kappa - frac
    ade = fn.ade_term(curve, frames, kappa, p.M0, "kappa")

    # vertex coefficient fields of the shape gradient
    g1 = p.alpha * (proxy - p.kbar) ** 2 + 2.0 * p.lam + 2.0 * p.beta * ade * kappa
    g2 = (proxy - p.kbar) * (zf - 2.0)  # zero at axis vertices
    gvec = kappa[:, None] * cg.perp(Y) - TWO_PI * p.beta * ade * np.array([0.0, 1.0])

    # ---- right-hand sides over the full spaces ----------------------------
    ra = np.zeros((n, 2))
    ra[:, 0] += -math.pi * w * g1
    coef = -0.5 * math.pi * (g1[jp] * x1[jp] + g1[jm] * x1[jm])
    np.add.at(ra, jp, coef[:, None] * tau)
    np.add.at(ra, jm, -coef[:, None] * tau)

    ra[:, 0] += TWO_PI * p.alpha * w * g2 * frac

    c1 = math.pi * p.alpha * (g2[jp] + g2[jm]) * tau[:, 0]
    c2 = math.pi * p.alpha * (
        g2[jp] * (omega[jp, 0] - nu[:, 0]) + g2[jm] * (omega[jm, 0] - nu[:, 0])
    )
    np.add.at(ra, jp, c1[:, None] * nu + c2[:, None] * tau)
    np.add.at(ra, jm, -(c1[:, None] * nu + c2[:, None] * tau))

    gavg = 0.5 * (gvec[jp] + gvec[jm])
    np.add.at(ra, jp, gavg)
    np.add.at(ra, jm, -gavg)

    for pt in curve.endpoints_of_kind(cg.LINE_ENERGY_KINDS):
        ra[curve.endpoint_node(pt), 0] -= TWO_PI * p.sigma

    _tangential_rhs(geo, 1.0 / L, Y, ra)

    rb = -TWO_PI * w * x1 * (p.alpha * (-frac - p.kbar) + p.beta * ade)

    rc = np.zeros((n, 2))
    np.add.at(rc, jp, -tau)
    np.add.at(rc, jm, tau)
    for pt in curve.endpoints_of_kind(cg.CLAMPED):
        rc[curve.endpoint_node(pt)] += curve.boundary[pt].zeta

    # ---- full block matrix -------------------------------------------------
    # rows: a-block (vector, 2n) | b-block (scalar, n) | c-block (vector, 2n)
    # cols: Y (2n) | delta X (2n) | kappa (n)
    rows_parts, cols_parts, data_parts = [], [], []

    def put(r, c, d):
        rows_parts.append(np.asarray(r, dtype=np.int64))
        cols_parts.append(np.asarray(c, dtype=np.int64))
        data_parts.append(np.asarray(d, dtype=float))

    # (a) lumped projected velocity: (2 pi / dt) w x1 Q per node on delta X
    qblocks = (TWO_PI / dt) * (w * x1)[:, None, None] * vframes.projection
    idx = np.arange(n)
    for r in (0, 1):
        for c in (0, 1):
            put(2 * idx + r, 2 * n + 2 * idx + c, qblocks[:, r, c])

    # (a) implicit costate stiffness: -(dY . dchi)/L
    sr, sc, sd = _stiffness_entries(geo, 1.0 / L)
    put(sr, sc, -sd)

    # (b) curvature diagonal and lumped normal pairing with Y
    scal = np.arange(n)
    put(2 * n + scal, 4 * n + scal, TWO_PI * p.alpha * w * x1 * zf)
    nw = _scalar_normal_rows(geo)
    for c in (0, 1):
        put(2 * n + scal, 2 * scal + c, -nw[:, c])

    # (c) curvature side constraint: lumped normal pairing transposed + stiffness
    for c in (0, 1):
        put(3 * n + 2 * scal + c, 4 * n + scal, nw[:, c])
    sr, sc, sd = _stiffness_entries(geo, 1.0 / L)
    put(3 * n + sr, 2 * n + sc, sd)

    full_dim = 5 * n
    rows_full = np.concatenate(rows_parts)
    cols_full = np.concatenate(cols_parts)
    data_full = np.concatenate(data_parts)
    rhs_full = np.concatenate([ra.ravel(), rb, rc.ravel()])

    # move pinned costate values (Gaussian rigidity) to the right-hand side
    x_space = spaces.position_space(curve)
    y_space = spaces.costate_space(curve, p.alpha_g)
    k_space = spaces.curvature_space(curve)
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

    cols = None
    if multiplier_columns:
        ga, gv = conservation_gradients(curve, geo=geo)
        ca = np.zeros(full_dim)
        cv = np.zeros(full_dim)
        ca[: 2 * n] = -ga.ravel()
        cv[: 2 * n] = -gv.ravel()
        cols = np.stack([ca[row_keep], cv[row_keep]], axis=1)

    return BlockSystem(
        matrix=matrix,
        rhs=rhs,
        y_space=y_space,
        x_space=x_space,
        k_space=k_space,
        geometry=geo,
        params=params,
        dt=dt,
        multiplier_columns=cols,
    )


def conservation_gradients(curve, geo=None):
    """Discrete gradients of surface area and enclosed volume at `curve`.

    Returns (gA, gV) of shape (N, 2):
        gA . chi = 2 pi [ (e1, chi |X_rho|) + ((X.e1) tau, chi_rho) ]
        gV . chi = 2 pi ((X.e1) nu, chi |X_rho|)
    both exactly integrated; these are the multiplier forcing directions of
    the conserving variant and equal d/d eps of area/volume under nodal
    perturbations.
    """
    if geo is None:
        geo = _Geometry.at(curve)
    n = curve.n_nodes
    jm, jp = geo.en[:, 0], geo.en[:, 1]
    x1 = curve.nodes[:, 0]
    L, tau, nu = geo.frames.length, geo.frames.tau, geo.frames.nu

    ga = np.zeros((n, 2))
    ga[:, 0] += TWO_PI * geo.weights
    xbar = 0.5 * (x1[jm] + x1[jp])
    np.add.at(ga, jp, TWO_PI * xbar[:, None] * tau)
    np.add.at(ga, jm, -TWO_PI * xbar[:, None] * tau)

    gv = np.zeros((n, 2))
    cp = L * (x1[jm] + 2.0 * x1[jp]) / 6.0
    cm = L * (2.0 * x1[jm] + x1[jp]) / 6.0
    np.add.at(gv, jp, TWO_PI * cp[:, None] * nu)
    np.add.at(gv, jm, TWO_PI * cm[:, None] * nu)
    return ga, gv


def _recover_conormals(geo, kappa_new, x_new):
    """Evaluate the curvature side constraint at each conormal endpoint.

    The eliminated boundary terms equal the constraint row tested with the
    endpoint hat functions, so the discrete conormal is read off directly:
    half-length-weighted averaged normal times the new curvature plus the
    new tangent difference quotient.
    """
    curve = geo.curve
    out = {}
    for p in curve.endpoints_of_kind(cg.CONORMAL_KINDS):
        i = curve.endpoint_node(p)
        if p == 0:
            d = (x_new[1] - x_new[0]) / geo.frames.length[0]
            out[p] = geo.weights[i] * geo.vframes.omega[i] * kappa_new[i] - d
        else:
            d = (x_new[-1] - x_new[-2]) / geo.frames.length[-1]
            out[p] = geo.weights[i] * geo.vframes.omega[i] * kappa_new[i] + d
    return out


def constraint_residual(geo, kappa_new, x_new, conormals):
    """Relative residual of the curvature side constraint over the full space.

    Used both as the post-solve verification and as the conormal-recovery
    check: with the recovered conormals substituted back, the residual must
    sit at the solver's level.
    """
    curve = geo.curve
    jm, jp = geo.en[:, 0], geo.en[:, 1]
    res = geo.weights[:, None] * geo.vframes.omega * kappa_new[:, None]
    dx = (x_new[jp] - x_new[jm]) / geo.frames.length[:, None]
    np.add.at(res, jp, dx)
    np.add.at(res, jm, -dx)
    scale = max(np.max(np.abs(res)), 1e-30)
    for p in curve.endpoints_of_kind(cg.CLAMPED):
        res[curve.endpoint_node(p)] -= curve.boundary[p].zeta
    for p, m in (conormals or {}).items():
        res[curve.endpoint_node(p)] -= m
    for i in curve.axis_node_indices:
        res[i, 0] = 0.0  # e1 not in the test space at axis endpoints
    return float(np.max(np.abs(res)) / scale)


def solve_step(system, state):
    """Solve the assembled system; returns (new_state, StepReport)."""
    fact = linsolve.factor(system.matrix)
    u, rep = linsolve.solve(fact, system.rhs)
    return finish_step(system, state, u, rep)


def finish_step(system, state, u, solve_report, lambda_a=0.0, lambda_v=0.0, newton_iters=0):
    """Turn a reduced solution vector into the next state plus its report."""
    uy, ux, uk = system.split(u)
    geo = system.geometry
    curve = state.curve
    n = curve.n_nodes

    y_new = system.y_space.expand(uy).reshape(n, 2)
    dx = system.x_space.expand(ux).reshape(n, 2)
    kappa_new = system.k_space.expand(uk)
    x_new = curve.nodes + dx
    if not (
        np.all(np.isfinite(x_new))
        and np.all(np.isfinite(kappa_new))
        and np.all(np.isfinite(y_new))
    ):
        raise NonFiniteSolution("step produced non-finite state")

    conormals = _recover_conormals(geo, kappa_new, x_new)
    cres = constraint_residual(geo, kappa_new, x_new, conormals)

    new_curve = curve.with_nodes(x_new)
    energy = fn.energy(
        curve,
        kappa_new,
        system.params,
        "kappa",
        frames=geo.frames,
        vertex_frames=geo.vframes,
        conormals=conormals,
        boundary_positions=x_new,
    )
    ade = fn.ade_term(curve, geo.frames, kappa_new, system.params.M0, "kappa")
    new_state = SchemeState(
        curve=new_curve,
        kappa=kappa_new,
        Y=y_new,
        conormals=conormals,
        t=state.t + system.dt,
    )
    report = StepReport(
        energy=energy,
        ade=ade,
        solve_residual=solve_report.residual,
        rcond=solve_report.rcond,
        conormal_residual=cres,
        lambda_a=lambda_a,
        lambda_v=lambda_v,
        newton_iters=newton_iters,
    )
    return new_state, report


def step(state, params, dt):
    """Assemble and solve one unconstrained step."""
    return solve_step(assemble_step(state, params, dt), state)


def init_state(curve, params):
    """Initial data for the curvature scheme.

    The vector curvature solves the lumped side constraint driven by the
    true endpoint conormals; its projection onto the unit vertex normals
    gives kappa^0, and the costate is initialized so the curvature/costate
    coupling holds exactly at t = 0 (with the axis and conormal-endpoint
    overrides).
    """
    geo = _Geometry.at(curve)
    n = curve.n_nodes
    frames, vframes, w = geo.frames, geo.vframes, geo.weights
    jm, jp = geo.en[:, 0], geo.en[:, 1]
    x1 = curve.nodes[:, 0]

    mu0 = {}
    if curve.topology == cg.INTERVAL:
        for p in (0, 1):
            if curve.boundary[p].kind != cg.AXIS:
                mu0[p] = -frames.tau[0] if p == 0 else frames.tau[-1]

    # lumped side constraint: w_j kvec_j equals the outgoing-minus-incoming
    # tangent at each vertex, plus the true conormal at non-axis endpoints
    rhs = np.zeros((n, 2))
    np.add.at(rhs, jm, frames.tau)
    np.add.at(rhs, jp, -frames.tau)
    for p, mu in mu0.items():
        rhs[curve.endpoint_node(p)] += mu
    kvec = rhs / w[:, None]
    for i in curve.axis_node_indices:
        kvec[i, 0] = 0.0

    kappa0 = np.sum(kvec * vframes.unit, axis=1)
    for i in curve.axis_node_indices:
        kappa0[i] = 0.0

    proxy = fn.curvature_proxy(curve, vframes, kappa0).values
    ade = fn.ade_term(curve, frames, kappa0, params.M0, "kappa")
    mag = np.hypot(vframes.omega[:, 0], vframes.omega[:, 1])
    ystar = (
        TWO_PI
        * (x1 * (params.alpha * (proxy - params.kbar) + params.beta * ade) / mag)[:, None]
        * vframes.unit
    )
    y0 = ystar.copy()
    for i in curve.axis_node_indices:
        y0[i] = np.array([0.0, ystar[i, 1]])
    for p in curve.endpoints_of_kind(cg.CONORMAL_KINDS):
        y0[curve.endpoint_node(p)] = np.array([TWO_PI * params.alpha_g, 0.0])

    conormals = {p: mu0[p] for p in curve.endpoints_of_kind(cg.CONORMAL_KINDS)}
    return SchemeState(curve=curve, kappa=kappa0, Y=y0, conormals=conormals, t=0.0)
