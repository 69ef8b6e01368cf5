"""Discrete functionals over generating curves.

Curvature proxy, bending/line energies, area-difference term, surface area
and enclosed volume of the revolved surface, plus the run diagnostics (mesh
ratio, hyperbolic length, turning number).

All sums follow the lumped/exact quadrature split of the two schemes: the
`variant` argument is one of

    "kappa"         : curve-curvature scheme, mass lumping everywhere,
    "kappaS_lumped" : mean-curvature scheme with mass lumping,
    "kappaS_exact"  : mean-curvature scheme with true integration (3-point
                      Gauss per element, exact for the cubic integrands).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from . import curve as cg
from .errors import AxisContact, DivisionByAxis, NotClosed

VARIANTS = ("kappa", "kappaS_lumped", "kappaS_exact")

# 3-point Gauss rule on [0, 1]; exact through degree 5
GAUSS_S = np.array([0.5 - math.sqrt(15.0) / 10.0, 0.5, 0.5 + math.sqrt(15.0) / 10.0])
GAUSS_W = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])


def gauss_values(nodal, element_nodes):
    """(E, 3) values of a per-vertex linear field at the Gauss points."""
    a = nodal[element_nodes[:, 0]]
    b = nodal[element_nodes[:, 1]]
    return a[:, None] * (1.0 - GAUSS_S)[None, :] + b[:, None] * GAUSS_S[None, :]


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the generalized bending energy.

    alpha   : bending rigidity (> 0)
    kbar    : spontaneous curvature
    lam     : surface-area weight (lambda)
    beta    : area-difference-elasticity weight (>= 0)
    M0      : area-difference offset
    alpha_g : Gaussian bending rigidity
    sigma   : line-energy coefficient
    clamp_angles : contact angle theta per clamped endpoint, giving the clamp
                   direction (sin theta, cos theta)
    """

    alpha: float = 1.0
    kbar: float = 0.0
    lam: float = 0.0
    beta: float = 0.0
    M0: float = 0.0
    alpha_g: float = 0.0
    sigma: float = 0.0
    clamp_angles: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise ValueError("alpha must be positive")
        if self.beta < 0.0:
            raise ValueError("beta must be nonnegative")

    def zeta(self, p):
        return cg.clamp_direction(self.clamp_angles[p])


@dataclass(frozen=True)
class CurvatureProxyField:
    """Vertex values of the discrete mean-curvature proxy.

    values  : kappa - (omega . e1)/(x . e1) off the axis, 2 kappa on it.
    zfactor : 2 at axis vertices, 1 elsewhere; the proxy is affine in kappa
              with slope zfactor.
    """

    values: np.ndarray
    zfactor: np.ndarray


def zfactor(curve):
    z = np.ones(curve.n_nodes)
    for i in curve.axis_node_indices:
        z[i] = 2.0
    return z


def azimuthal_fraction(curve, vertex_frames):
    """(omega . e1)/(x1) per vertex, zero at axis vertices.

    Raises DivisionByAxis when a vertex not classified as an axis endpoint
    sits at x1 = 0.
    """
    x1 = curve.nodes[:, 0]
    frac = np.zeros(curve.n_nodes)
    axis = set(curve.axis_node_indices)
    off_axis = np.array([i not in axis for i in range(curve.n_nodes)])
    bad = off_axis & (x1 == 0.0)
    if np.any(bad):
        raise DivisionByAxis(f"vertex {int(np.argmax(bad))} sits on the axis")
    frac[off_axis] = vertex_frames.omega[off_axis, 0] / x1[off_axis]
    return frac


def curvature_proxy(curve, vertex_frames, kappa):
    """Discrete mean curvature built from the curve curvature kappa."""
    z = zfactor(curve)
    frac = azimuthal_fraction(curve, vertex_frames)
    return CurvatureProxyField(values=z * np.asarray(kappa, dtype=float) - frac, zfactor=z)


def ade_term(curve, frames, kappa, M0, variant):
    """Area-difference value: 2 pi INT (mean curvature weight) - M0.

    For the kappa scheme the integrand is x1*kappa - nu.e1 (lumped); for the
    mean-curvature schemes it is x1*kappa_S, lumped or exactly integrated.
    """
    en = curve.element_nodes()
    x1 = curve.nodes[:, 0]
    kappa = np.asarray(kappa, dtype=float)
    if variant == "kappa":
        w = cg.lumped_weights(curve, frames)
        lump = float(np.sum(w * x1 * kappa))
        nu_part = float(np.sum(frames.length * frames.nu[:, 0]))
        return 2.0 * math.pi * (lump - nu_part) - M0
    if variant == "kappaS_lumped":
        w = cg.lumped_weights(curve, frames)
        return 2.0 * math.pi * float(np.sum(w * x1 * kappa)) - M0
    if variant == "kappaS_exact":
        vals = gauss_values(x1, en) * gauss_values(kappa, en)
        per_el = frames.length * (vals @ GAUSS_W)
        return 2.0 * math.pi * float(np.sum(per_el)) - M0
    raise ValueError(f"unknown variant {variant!r}")


def energy(
    curve,
    kappa,
    params,
    variant,
    frames=None,
    vertex_frames=None,
    conormals=None,
    boundary_positions=None,
):
    """Discrete generalized bending energy.

    Geometry (frames, weights) is taken at `curve`; `kappa` is the curvature
    field paired with it (new time level in the schemes' mixed evaluation,
    same level for plain monitoring).  `conormals` maps endpoint labels to
    discrete conormal vectors for the Gaussian-rigidity boundary sum;
    `boundary_positions` supplies the node array used in the line-energy sum
    (defaults to the curve's own nodes).
    """
    if frames is None:
        frames = cg.build_element_frames(curve)
    en = curve.element_nodes()
    x1 = curve.nodes[:, 0]
    kappa = np.asarray(kappa, dtype=float)

    if variant == "kappa":
        if vertex_frames is None:
            vertex_frames = cg.build_vertex_frames(curve, frames)
        proxy = curvature_proxy(curve, vertex_frames, kappa).values
        w = cg.lumped_weights(curve, frames)
        dens = params.alpha * (proxy - params.kbar) ** 2 + 2.0 * params.lam
        bend = math.pi * float(np.sum(w * x1 * dens))
    elif variant == "kappaS_lumped":
        w = cg.lumped_weights(curve, frames)
        dens = params.alpha * (kappa - params.kbar) ** 2 + 2.0 * params.lam
        bend = math.pi * float(np.sum(w * x1 * dens))
    elif variant == "kappaS_exact":
        kg = gauss_values(kappa, en)
        dens = params.alpha * (kg - params.kbar) ** 2 + 2.0 * params.lam
        per_el = frames.length * ((gauss_values(x1, en) * dens) @ GAUSS_W)
        bend = math.pi * float(np.sum(per_el))
    else:
        raise ValueError(f"unknown variant {variant!r}")

    total = bend
    if params.beta != 0.0:
        ade = ade_term(curve, frames, kappa, params.M0, variant)
        total += 0.5 * params.beta * ade**2

    if curve.topology == cg.INTERVAL:
        if params.alpha_g != 0.0:
            for p in curve.endpoints_of_kind(cg.CONORMAL_KINDS):
                if conormals is None or p not in conormals:
                    raise ValueError(
                        "conormal values required for the Gaussian-rigidity term"
                    )
                total -= 2.0 * math.pi * params.alpha_g * float(conormals[p][0])
        if params.sigma != 0.0:
            pos = curve.nodes if boundary_positions is None else boundary_positions
            for p in curve.endpoints_of_kind(cg.LINE_ENERGY_KINDS):
                total += 2.0 * math.pi * params.sigma * float(pos[curve.endpoint_node(p), 0])
    return total


def surface_area(curve):
    """Area of the revolved surface, 2 pi INT x1 |X_rho| (trapezoid-exact)."""
    frames = cg.build_element_frames(curve)
    en = curve.element_nodes()
    x1 = curve.nodes[:, 0]
    return math.pi * float(np.sum(frames.length * (x1[en[:, 0]] + x1[en[:, 1]])))


def enclosed_volume(curve):
    """Volume enclosed by the revolved surface (Simpson-exact cubic).

    Positive when nu is the outer normal.  Requires a closed surface.
    """
    if not curve.is_closed_surface:
        raise NotClosed("volume defined only for closed surfaces")
    en = curve.element_nodes()
    a = curve.nodes[en[:, 0]]
    b = curve.nodes[en[:, 1]]
    x1a, x1b = a[:, 0], b[:, 0]
    quad = (x1a * x1a + x1a * x1b + x1b * x1b) / 3.0
    return -math.pi * float(np.sum(quad * (b[:, 1] - a[:, 1])))


def mesh_ratio(curve):
    """Longest over shortest element length."""
    length = cg.build_element_frames(curve).length
    return float(length.max() / length.min())


def hyperbolic_length(curve):
    """Lumped length of the curve in the hyperbolic half plane, (1/x1, |X_rho|)^h."""
    x1 = curve.nodes[:, 0]
    if np.any(x1 <= 0.0):
        raise AxisContact("hyperbolic length undefined for curves touching the axis")
    frames = cg.build_element_frames(curve)
    return cg.lumped_inner(1.0 / x1, np.ones_like(x1), frames, curve.element_nodes())


def turning_number(curve, *, warn_tol=1e-6):
    """Winding number of the tangent of a closed polygon.

    Sum of signed exterior angles over 2 pi, rounded to the nearest integer;
    a residue beyond `warn_tol` flags a non-smooth polygon with a warning.
    """
    if curve.topology != cg.PERIODIC:
        raise ValueError("turning number requires a periodic curve")
    tau = cg.build_element_frames(curve).tau
    nxt = np.roll(tau, -1, axis=0)
    ang = np.arctan2(
        tau[:, 0] * nxt[:, 1] - tau[:, 1] * nxt[:, 0],
        np.sum(tau * nxt, axis=1),
    )
    t = float(np.sum(ang) / (2.0 * math.pi))
    rounded = int(round(t))
    if abs(t - rounded) > warn_tol:
        warnings.warn(
            f"turning number {t!r} is {abs(t - rounded):.2e} from an integer",
            stacklevel=2,
        )
    return rounded


def axis_contact_angle_deg(curve, p):
    """Angle (degrees) between the endpoint element and the rotation axis.

    90 degrees is the exact-orthogonality value the lumped schemes enforce;
    the exact-integration mean-curvature scheme only approximates it, so the
    angle is reported rather than asserted.
    """
    frames = cg.build_element_frames(curve)
    tau = frames.tau[0] if p == 0 else frames.tau[-1]
    return math.degrees(math.atan2(abs(tau[0]), abs(tau[1])))


@dataclass
class Diagnostics:
    """One accepted time level of a run."""

    step: int
    time: float
    energy: float
    ratio: float
    area: float
    volume: Optional[float]
    hyp_length: Optional[float]
    turning: Optional[int]
    ade: float
    lambda_a: float = 0.0
    lambda_v: float = 0.0
    newton_iters: int = 0

    CSV_HEADER = (
        "step,time,energy,ratio,area,volume,hyp_length,turning,"
        "ade,lambda_A,lambda_V,newton_iters"
    )

    def csv_row(self):
        def fmt(v):
            return "" if v is None else repr(v) if isinstance(v, float) else str(v)

        return ",".join(
            fmt(v)
            for v in (
                self.step,
                self.time,
                self.energy,
                self.ratio,
                self.area,
                self.volume,
                self.hyp_length,
                self.turning,
                self.ade,
                self.lambda_a,
                self.lambda_v,
                self.newton_iters,
            )
        )


def collect_diagnostics(curve, kappa, params, variant, *, step, time, conormals=None,
                        lambda_a=0.0, lambda_v=0.0, newton_iters=0, energy_value=None):
    """Diagnostics row; energy defaults to the same-level evaluation."""
    frames = cg.build_element_frames(curve)
    if energy_value is None:
        energy_value = energy(curve, kappa, params, variant, conormals=conormals)
    vol = enclosed_volume(curve) if curve.is_closed_surface else None
    x1 = curve.nodes[:, 0]
    hyp = hyperbolic_length(curve) if np.all(x1 > 0.0) else None
    turn = turning_number(curve) if curve.topology == cg.PERIODIC else None
    return Diagnostics(
        step=step,
        time=time,
        energy=energy_value,
        ratio=mesh_ratio(curve),
        area=surface_area(curve),
        volume=vol,
        hyp_length=hyp,
        turning=turn,
        ade=ade_term(curve, frames, kappa, params.M0, variant),
        lambda_a=lambda_a,
        lambda_v=lambda_v,
        newton_iters=newton_iters,
    )
