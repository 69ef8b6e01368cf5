"""Polygonal generating curves and their discrete differential geometry.

A generating curve lives in the half plane x1 >= 0 and produces an
axisymmetric surface by rotation about the x2-axis.  This module holds the
curve container with its per-endpoint boundary classification, the element
frames (tangent/normal/length), the mass-lumped vertex quantities (averaged
normal, unit normal, velocity projection) and the lumped inner product that
every scheme is built from.

Conventions:
  * perp(a) = (a2, -a1) is the clockwise quarter turn; nu = -perp(tau).
  * The reference interval is equipartitioned, q_j = j/J, so derivatives of
    piecewise linears are nodal differences divided by h = 1/J.
  * Genus-0 curves parameterized clockwise (top axis point first) make nu
    the outer surface normal; `nu_is_outer` queries the orientation via the
    signed area of the revolved cross-section.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .errors import DegenerateElement, GeometryError, ZeroAveragedNormal

PERIODIC = "periodic"
INTERVAL = "interval"

AXIS = "axis"
CLAMPED = "clamped"
NAVIER = "navier"
SEMIFREE1 = "semifree1"
SEMIFREE2 = "semifree2"
FREE = "free"

BOUNDARY_KINDS = (AXIS, CLAMPED, NAVIER, SEMIFREE1, SEMIFREE2, FREE)

#: endpoint classes whose discrete conormal is a scheme unknown
CONORMAL_KINDS = frozenset({NAVIER, SEMIFREE1, SEMIFREE2, FREE})

#: endpoint classes contributing the line-energy boundary sum
LINE_ENERGY_KINDS = frozenset({SEMIFREE2, FREE})

# relative coalescence threshold: an element shorter than this fraction of
# the longest one is treated as two vertices lying on top of each other
COALESCENCE_REL_TOL = 1e-12


def perp(a):
    """Clockwise rotation by pi/2: (a1, a2) -> (a2, -a1)."""
    a = np.asarray(a, dtype=float)
    out = np.empty_like(a)
    out[..., 0] = a[..., 1]
    out[..., 1] = -a[..., 0]
    return out


@dataclass(frozen=True)
class BoundaryCondition:
    """Classification of one interval endpoint.

    For clamped endpoints `zeta` is the prescribed unit conormal direction
    (sin(theta), cos(theta)) of the surface at the boundary ring.
    """

    kind: str
    zeta: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in BOUNDARY_KINDS:
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if self.kind == CLAMPED:
            if self.zeta is None:
                raise ValueError("clamped endpoint requires a direction zeta")
            z = np.asarray(self.zeta, dtype=float).reshape(2)
            if abs(np.hypot(z[0], z[1]) - 1.0) > 1e-12:
                raise ValueError("clamp direction zeta must be a unit vector")
            z.flags.writeable = False
            object.__setattr__(self, "zeta", z)
        elif self.zeta is not None:
            raise ValueError("zeta only meaningful for clamped endpoints")


def clamp_direction(theta):
    """Unit clamp direction (sin(theta), cos(theta)) for a contact angle."""
    return np.array([np.sin(theta), np.cos(theta)])


@dataclass(frozen=True)
class GeneratingCurve:
    """Polygonal profile curve of an axisymmetric surface.

    nodes     : (N, 2) array of vertex positions; periodic curves store J
                distinct vertices (the wrap edge J-1 -> 0 is implicit),
                interval curves store J+1 vertices.
    topology  : "periodic" or "interval".
    boundary  : map {0: BoundaryCondition, 1: BoundaryCondition} for interval
                curves (endpoint 0 is node 0, endpoint 1 is node J); empty for
                periodic curves.
    """

    nodes: np.ndarray
    topology: str
    boundary: Mapping[int, BoundaryCondition] = field(default_factory=dict)

    def __post_init__(self):
        nodes = np.ascontiguousarray(np.asarray(self.nodes, dtype=float))
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise ValueError("nodes must be an (N, 2) array")
        if self.topology not in (PERIODIC, INTERVAL):
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.topology == PERIODIC:
            if self.boundary:
                raise ValueError("periodic curves carry no boundary classes")
            if nodes.shape[0] < 3:
                raise ValueError("periodic curve needs at least 3 vertices")
        else:
            if set(self.boundary.keys()) != {0, 1}:
                raise ValueError("interval curves classify both endpoints")
            if nodes.shape[0] < 3:
                raise ValueError("interval curve needs at least 2 elements")
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        n = nodes.shape[0]
        n_el = n if self.topology == PERIODIC else n - 1
        start = np.arange(n_el)
        end = start + 1
        if self.topology == PERIODIC:
            end %= n
        en = np.stack([start, end], axis=1)
        en.flags.writeable = False
        object.__setattr__(self, "_element_nodes", en)

    # -- basic layout ------------------------------------------------------

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_elements(self):
        return self.n_nodes if self.topology == PERIODIC else self.n_nodes - 1

    @property
    def J(self):
        return self.n_elements

    def element_nodes(self):
        """(J, 2) int array of [start, end] vertex indices per element."""
        return self._element_nodes

    def endpoint_node(self, p):
        """Node index of interval endpoint p in {0, 1}."""
        return 0 if p == 0 else self.n_nodes - 1

    def endpoints_of_kind(self, kinds):
        """Endpoint labels p whose class is in `kinds` (possibly empty)."""
        if self.topology == PERIODIC:
            return []
        if isinstance(kinds, str):
            kinds = {kinds}
        return [p for p in (0, 1) if self.boundary[p].kind in kinds]

    @property
    def axis_node_indices(self):
        return tuple(self.endpoint_node(p) for p in self.endpoints_of_kind(AXIS))

    @property
    def is_closed_surface(self):
        """True if the revolved surface has no boundary."""
        if self.topology == PERIODIC:
            return True
        return all(bc.kind == AXIS for bc in self.boundary.values())

    # -- derived curves ----------------------------------------------------

    def with_nodes(self, nodes):
        return GeneratingCurve(nodes, self.topology, self.boundary)

    def reversed(self):
        """Same polygon traversed backwards (flips nu)."""
        bnd = self.boundary
        if self.topology == INTERVAL:
            bnd = {0: self.boundary[1], 1: self.boundary[0]}
        return GeneratingCurve(self.nodes[::-1].copy(), self.topology, bnd)


@dataclass(frozen=True)
class ElementFrames:
    """Per-element tangent, normal and chord length."""

    tau: np.ndarray
    nu: np.ndarray
    length: np.ndarray


@dataclass(frozen=True)
class VertexFrames:
    """Mass-lumped vertex normals and the velocity projection matrix.

    omega      : averaged (generally non-unit) vertex normal.
    unit       : omega / |omega|.
    projection : 2x2 matrix per vertex; identity at non-axis interval
                 endpoints, unit (x) unit elsewhere.
    """

    omega: np.ndarray
    unit: np.ndarray
    projection: np.ndarray


def build_element_frames(curve, *, coalescence_check=False):
    """Tangent, normal and length per element.

    With `coalescence_check`, additionally rejects elements that are tiny
    relative to the longest one (vertices lying on top of each other), the
    guard used by the time-stepping schemes.
    """
    en = curve.element_nodes()
    d = curve.nodes[en[:, 1]] - curve.nodes[en[:, 0]]
    length = np.hypot(d[:, 0], d[:, 1])
    if np.any(length == 0.0):
        j = int(np.argmin(length))
        raise DegenerateElement(f"element {j} has zero length")
    if coalescence_check and length.min() <= COALESCENCE_REL_TOL * length.max():
        j = int(np.argmin(length))
        raise DegenerateElement(
            f"element {j} collapsed (length ratio {length.min() / length.max():.3e})"
        )
    tau = d / length[:, None]
    return ElementFrames(tau=tau, nu=-perp(tau), length=length)


def build_vertex_frames(curve, frames):
    """Averaged vertex normals, their normalization and the projection.

    The averaged normal at an interior vertex is the mass-lumped L2
    projection of the element normals,

        omega_j = -(X_{j+1} - X_{j-1})^perp / (L_j + L_{j+1}),

    and equals the adjacent element normal at interval endpoints.
    """
    n = curve.n_nodes
    nodes = curve.nodes
    L = frames.length
    omega = np.empty((n, 2))
    if curve.topology == PERIODIC:
        nxt = np.roll(nodes, -1, axis=0)
        prv = np.roll(nodes, 1, axis=0)
        Lin = np.roll(L, 1)  # element ending at vertex j
        Lout = L  # element starting at vertex j
        omega[:] = -perp(nxt - prv) / (Lin + Lout)[:, None]
    else:
        omega[1:-1] = -perp(nodes[2:] - nodes[:-2]) / (L[1:] + L[:-1])[:, None]
        omega[0] = frames.nu[0]
        omega[-1] = frames.nu[-1]
    mag = np.hypot(omega[:, 0], omega[:, 1])
    if np.any(mag <= 1e-12):
        j = int(np.argmin(mag))
        raise ZeroAveragedNormal(
            f"averaged normal vanishes at vertex {j} (|omega| = {mag[j]:.3e})"
        )
    unit = omega / mag[:, None]
    projection = unit[:, :, None] * unit[:, None, :]
    if curve.topology == INTERVAL:
        for p in (0, 1):
            if curve.boundary[p].kind != AXIS:
                projection[curve.endpoint_node(p)] = np.eye(2)
    return VertexFrames(omega=omega, unit=unit, projection=projection)


def lumped_weights(curve, frames):
    """Lumped vertex masses: half the total length of adjacent elements."""
    n = curve.n_nodes
    en = curve.element_nodes()
    w = np.zeros(n)
    np.add.at(w, en[:, 0], 0.5 * frames.length)
    np.add.at(w, en[:, 1], 0.5 * frames.length)
    return w


def lumped_inner(f, g, frames, element_nodes):
    """Mass-lumped inner product with the length weight folded in.

    Evaluates (f, g |X_rho|)^h = 1/2 sum_j L_j [ (fg)(q_j^-) + (fg)(q_{j-1}^+) ].
    `f` and `g` are per-vertex values, either continuous of shape (N,) or
    two-sided of shape (N, 2) holding (left-limit, right-limit) pairs; the
    left limit is taken by the element ending at the vertex, the right limit
    by the element starting there.
    """

    def limits(a):
        a = np.asarray(a, dtype=float)
        if a.ndim == 1:
            return a, a
        if a.ndim == 2 and a.shape[1] == 2:
            return a[:, 0], a[:, 1]
        raise ValueError("values must have shape (N,) or (N, 2)")

    fl, fr = limits(f)
    gl, gr = limits(g)
    jm, jp = element_nodes[:, 0], element_nodes[:, 1]
    end_vals = fl[jp] * gl[jp]
    start_vals = fr[jm] * gr[jm]
    return float(0.5 * np.sum(frames.length * (end_vals + start_vals)))


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the well-posedness checks; report-only, never raises."""

    axis_positivity_ok: bool
    elements_ok: bool
    averaged_normals_ok: bool
    span_ok: bool
    is_straight_line: bool
    messages: tuple

    @property
    def ok(self):
        return (
            self.axis_positivity_ok
            and self.elements_ok
            and self.averaged_normals_ok
            and self.span_ok
        )


def validate(curve):
    """Check the discrete well-posedness assumptions and the span condition.

    Reports (1) exact x1 = 0 at axis endpoints and x1 > 0 elsewhere, (2)
    nondegenerate elements, (3) nonvanishing averaged normals, (4) the
    two-dimensional span of the unit vertex normals that the step systems
    need for unique solvability.  A straight-line curve fails (4); the
    assembled systems for it are singular.
    """
    messages = []
    x1 = curve.nodes[:, 0]
    axis_idx = set(curve.axis_node_indices)
    axis_ok = True
    for i in range(curve.n_nodes):
        if i in axis_idx:
            if x1[i] != 0.0:
                axis_ok = False
                messages.append(f"axis vertex {i} has x1 = {x1[i]!r} != 0")
        elif x1[i] <= 0.0:
            axis_ok = False
            messages.append(f"vertex {i} has x1 = {x1[i]!r} <= 0 off the axis")

    elements_ok = True
    normals_ok = True
    span_ok = False
    straight = False
    try:
        frames = build_element_frames(curve)
    except DegenerateElement as exc:
        elements_ok = False
        normals_ok = False
        messages.append(str(exc))
    else:
        tau = frames.tau
        cross = np.abs(tau[:-1, 0] * tau[1:, 1] - tau[:-1, 1] * tau[1:, 0])
        straight = bool(np.all(cross < 1e-12)) and bool(
            np.all(np.abs(tau @ tau[0] - 1.0) < 1e-12)
        )
        try:
            vframes = build_vertex_frames(curve, frames)
        except ZeroAveragedNormal as exc:
            normals_ok = False
            messages.append(str(exc))
        else:
            if curve.topology == PERIODIC:
                vs = vframes.unit
            else:
                vs = vframes.unit[1:-1]
            if len(vs) >= 2:
                s = np.linalg.svd(vs, compute_uv=False)
                span_ok = bool(s[-1] > 1e-10 * s[0])
            if not span_ok:
                messages.append("unit vertex normals span only one direction")
    return ValidationReport(
        axis_positivity_ok=axis_ok,
        elements_ok=elements_ok,
        averaged_normals_ok=normals_ok,
        span_ok=span_ok,
        is_straight_line=straight,
        messages=tuple(messages),
    )


def signed_cross_section_area(curve):
    """Shoelace area of the (closed-up) profile polygon.

    Negative for clockwise traversal, which is the orientation making nu the
    outer surface normal.  Interval curves are closed with the straight
    segment between their endpoints (a no-op for curves joining the axis to
    itself).
    """
    nodes = curve.nodes
    nxt = np.roll(nodes, -1, axis=0)
    return float(0.5 * np.sum(nodes[:, 0] * nxt[:, 1] - nodes[:, 1] * nxt[:, 0]))


def nu_is_outer(curve):
    """True if nu points out of the revolved solid (clockwise profile)."""
    return signed_cross_section_area(curve) < 0.0


# -- first variations ------------------------------------------------------
#
# Shape derivatives of the element/vertex quantities in a nodal perturbation
# direction chi; the scheme right-hand sides are the expanded forms of these,
# and the finite-difference tests pin them down.


def variation_length(frames, chi, element_nodes):
    """d/d eps of the element lengths: tau . (chi_jp - chi_jm)."""
    dchi = chi[element_nodes[:, 1]] - chi[element_nodes[:, 0]]
    return np.sum(frames.tau * dchi, axis=1)


def variation_tau(frames, chi, element_nodes):
    """d/d eps of the unit tangents: (chi_s . nu) nu per element."""
    dchi = chi[element_nodes[:, 1]] - chi[element_nodes[:, 0]]
    coef = np.sum(frames.nu * dchi, axis=1) / frames.length
    return coef[:, None] * frames.nu


def variation_nu(frames, chi, element_nodes):
    """d/d eps of the element normals: -(chi_s . nu) tau."""
    dchi = chi[element_nodes[:, 1]] - chi[element_nodes[:, 0]]
    coef = np.sum(frames.nu * dchi, axis=1) / frames.length
    return -coef[:, None] * frames.tau


def variation_nu_weighted(chi, element_nodes):
    """d/d eps of nu_j L_j = -(X_jp - X_jm)^perp: equals -(dchi)^perp."""
    dchi = chi[element_nodes[:, 1]] - chi[element_nodes[:, 0]]
    return -perp(dchi)


def variation_omega(curve, frames, vframes, weights, chi):
    """d/d eps of the averaged vertex normals.

    Solves the lumped identity
        (d omega, phi |X_rho|)^h =
            -((nu . chi_rho) tau, phi)^h - (tau . chi_rho (omega - nu), phi)^h
    row by row (the lumped mass is diagonal).
    """
    en = curve.element_nodes()
    jm, jp = en[:, 0], en[:, 1]
    dchi = chi[jp] - chi[jm]
    nu_dchi = np.sum(frames.nu * dchi, axis=1)
    tau_dchi = np.sum(frames.tau * dchi, axis=1)
    rhs = np.zeros_like(chi)
    contrib_p = nu_dchi[:, None] * frames.tau + tau_dchi[:, None] * (
        vframes.omega[jp] - frames.nu
    )
    contrib_m = nu_dchi[:, None] * frames.tau + tau_dchi[:, None] * (
        vframes.omega[jm] - frames.nu
    )
    np.add.at(rhs, jp, -0.5 * contrib_p)
    np.add.at(rhs, jm, -0.5 * contrib_m)
    return rhs / weights[:, None]


# -- snapshot files --------------------------------------------------------


def write_snapshot(curve, path):
    """Write the node table as CSV: index,x1,x2 (one row per node)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "x1", "x2"])
        for i, (a, b) in enumerate(curve.nodes):
            writer.writerow([i, repr(float(a)), repr(float(b))])


def read_snapshot(path, topology, boundary=None):
    """Load a node table written by `write_snapshot`.

    Topology and boundary classes live in the run configuration, not in the
    snapshot, so they must be supplied here.  Axis-classified endpoints must
    carry x1 = 0 exactly; anything else is rejected rather than snapped.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [c.strip() for c in header[:3]] != ["index", "x1", "x2"]:
            raise ValueError(f"unexpected snapshot header {header!r}")
        for row in reader:
            if row:
                rows.append((int(row[0]), float(row[1]), float(row[2])))
    rows.sort(key=lambda r: r[0])
    nodes = np.array([[r[1], r[2]] for r in rows])
    curve = GeneratingCurve(nodes, topology, boundary or {})
    for i in curve.axis_node_indices:
        if nodes[i, 0] != 0.0:
            raise GeometryError(
                f"axis endpoint node {i} has x1 = {nodes[i, 0]!r}; write it as exactly 0"
            )
    return curve
