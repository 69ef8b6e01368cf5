"""Analytic references, error norms and initial-curve factories.

The only closed-form evolution available is the sphere: its radius obeys

    R'(t) = -(kbar / R) (2 / R + kbar),    R(0) = R0,

whose implicit solution is root-found here to 1e-12.  Error norms compare a
run's snapshots against that radius.  The preset factory builds every
initial curve used by the shipped experiments; shapes the experiments only
describe qualitatively (cigar, flat disc, dumbbell, lemniscates, torus cap)
are frozen parametric families so runs stay reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.optimize import brentq

from . import curve as cg
from .errors import InvalidPresetParams, RootBracketFailure


@dataclass(frozen=True)
class SphereReference:
    """Exact sphere radius evolution for spontaneous curvature kbar."""

    kbar: float
    R0: float

    def __post_init__(self):
        if not self.R0 > 0.0:
            raise ValueError("R0 must be positive")


def sphere_radius(ref, t):
    """Radius R(t) of the exact sphere solution.

    For kbar != 0, R = z - 2/kbar where z solves

        (z^2 - z0^2)/2 - (4/kbar)(z - z0) + (4/kbar^2) ln(z/z0) + kbar^2 t = 0

    with z0 = R0 + 2/kbar; the admissible branch keeps z strictly between z0
    and 0, on which the relation is monotone, so a bracketed Brent solve to
    1e-12 is safe.  kbar = 0 is stationary.
    """
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    kbar, r0 = ref.kbar, ref.R0
    if kbar == 0.0 or t == 0.0:
        return r0
    z0 = r0 + 2.0 / kbar
    if z0 == 0.0:
        return r0  # stationary radius -2/kbar

    def g(z):
        return (
            0.5 * (z * z - z0 * z0)
            - (4.0 / kbar) * (z - z0)
            + (4.0 / kbar**2) * math.log(z / z0)
            + kbar**2 * t
        )

    # g -> -inf toward 0 and g(z0) = kbar^2 t > 0, so the root sits between
    # z0 and 0; a sufficient inner bracket follows from bounding the
    # polynomial terms.  If it underflows, the root is closer to z = 0 than
    # the smallest double and R(t) equals the stationary radius -2/kbar to
    # machine precision.
    bound = 0.5 * z0 * z0 + abs(4.0 / kbar * z0) + kbar**2 * t
    exponent = -bound * kbar**2 / 4.0 - 1.0
    if exponent < -700.0:
        r_limit = -2.0 / kbar
        if r_limit > 0.0:
            return r_limit
        raise RootBracketFailure("sphere shrank through extinction")
    b = z0 * math.exp(exponent)
    if g(b) >= 0.0:
        raise RootBracketFailure("could not bracket the radius root")
    z = brentq(g, min(z0, b), max(z0, b), xtol=1e-12, rtol=8.881784197001252e-16)
    r = z - 2.0 / kbar
    if r <= 0.0:
        raise RootBracketFailure(
            f"sphere shrank through extinction before t = {t!r}"
        )
    return float(r)


def sphere_radius_rk4(ref, t, dt=1e-5):
    """Classical 4th-order integration of the radius equation (test oracle)."""
    r = ref.R0
    kbar = ref.kbar

    def f(radius):
        return -(kbar / radius) * (2.0 / radius + kbar)

    steps = int(round(t / dt))
    for _ in range(steps):
        k1 = f(r)
        k2 = f(r + 0.5 * dt * k1)
        k3 = f(r + 0.5 * dt * k2)
        k4 = f(r + dt * k3)
        r += dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    rem = t - steps * dt
    if rem != 0.0:
        k1 = f(r)
        k2 = f(r + 0.5 * rem * k1)
        k3 = f(r + 0.5 * rem * k2)
        k4 = f(r + rem * k3)
        r += rem * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    return r


def error_norms(times, curves, ref):
    """Sup-norm errors of a snapshot history against the exact sphere.

    Returns (Linf, Linf_L2): the max over snapshots and nodes of the radial
    error, and the max over snapshots of its lumped L2 norm.
    """
    linf = 0.0
    linf_l2 = 0.0
    for t, c in zip(times, curves):
        if not isinstance(c, cg.GeneratingCurve):
            raise TypeError("curves must be GeneratingCurve snapshots")
        nodes = c.nodes
        r = sphere_radius(ref, t)
        err = np.abs(np.hypot(nodes[:, 0], nodes[:, 1]) - r)
        linf = max(linf, float(err.max()))
        frames = cg.build_element_frames(c)
        w = cg.lumped_weights(c, frames)
        linf_l2 = max(linf_l2, math.sqrt(float(np.sum(w * err * err))))
    return linf, linf_l2


# -- preset curves ----------------------------------------------------------


@dataclass(frozen=True)
class CurvePreset:
    """Preset id plus parameters for `make_preset`."""

    preset_id: str
    params: Mapping[str, object] = field(default_factory=dict)


def _axis_bc():
    return cg.BoundaryCondition(cg.AXIS)


def _require(cond, msg):
    if not cond:
        raise InvalidPresetParams(msg)


def _perturbed_semicircle(J=64, amplitude=0.1):
    """Unit semicircle with a cosine-perturbed angle parameterization.

    Node j sits at angle (1/2 - j/J) pi + amplitude * cos((1/2 - j/J) pi),
    giving an intentionally non-uniform vertex distribution; endpoints are
    snapped onto the axis exactly.
    """
    _require(J >= 3, "need at least 3 elements")
    q = np.arange(J + 1) / J
    ang = (0.5 - q) * math.pi + amplitude * np.cos((0.5 - q) * math.pi)
    nodes = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    nodes[0] = [0.0, 1.0]
    nodes[-1] = [0.0, -1.0]
    return cg.GeneratingCurve(nodes, cg.INTERVAL, {0: _axis_bc(), 1: _axis_bc()})


def _circle(J=64, center=(2.0, 0.0), radius=1.0, orientation="clockwise", phase=0.0):
    """Regular closed polygon; clockwise makes nu the outer normal."""
    _require(J >= 3, "need at least 3 vertices")
    _require(radius > 0.0, "radius must be positive")
    _require(center[0] - radius > 0.0, "circle must stay off the axis")
    sgn = {"clockwise": -1.0, "counterclockwise": 1.0}.get(orientation)
    _require(sgn is not None, f"unknown orientation {orientation!r}")
    th = phase + sgn * 2.0 * math.pi * np.arange(J) / J
    nodes = np.stack(
        [center[0] + radius * np.cos(th), center[1] + radius * np.sin(th)], axis=1
    )
    return cg.GeneratingCurve(nodes, cg.PERIODIC)


def _arc_points(center, radius, a0, a1, count, endpoint=False):
    th = np.linspace(a0, a1, count, endpoint=endpoint)
    return np.stack(
        [center[0] + radius * np.cos(th), center[1] + radius * np.sin(th)], axis=1
    )


def _resample_closed(points, J):
    """Equidistribute J vertices along a closed polyline by arclength."""
    pts = np.asarray(points)
    d = np.roll(pts, -1, axis=0) - pts
    seg = np.hypot(d[:, 0], d[:, 1])
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    targets = total * np.arange(J) / J
    out = np.empty((J, 2))
    k = 0
    for i, tgt in enumerate(targets):
        while s[k + 1] < tgt:
            k += 1
        f = (tgt - s[k]) / seg[k] if seg[k] > 0 else 0.0
        out[i] = pts[k] + f * d[k]
    return out


def _resample_open(points, J):
    """Equidistribute J+1 vertices along an open polyline, endpoints kept."""
    pts = np.asarray(points)
    d = pts[1:] - pts[:-1]
    seg = np.hypot(d[:, 0], d[:, 1])
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    targets = total * np.arange(J + 1) / J
    out = np.empty((J + 1, 2))
    k = 0
    for i, tgt in enumerate(targets):
        while k < len(seg) - 1 and s[k + 1] < tgt:
            k += 1
        f = (tgt - s[k]) / seg[k] if seg[k] > 0 else 0.0
        out[i] = pts[k] + f * d[k]
    out[0] = pts[0]
    out[-1] = pts[-1]
    return out


def _cigar(J=128, center_x1=3.0, half_height=4.0, radius=1.0, orientation="clockwise"):
    """Elongated capsule profile (stadium): a vertically stretched tube
    cross-section whose revolution is a long thin torus."""
    _require(half_height > radius > 0.0, "need half_height > radius > 0")
    _require(center_x1 - radius > 0.0, "capsule must stay off the axis")
    a = half_height - radius
    dense = 4096
    right = np.stack(
        [np.full(dense, center_x1 + radius), np.linspace(-a, a, dense, endpoint=False)],
        axis=1,
    )
    top = _arc_points((center_x1, a), radius, 0.0, math.pi, dense)
    left = np.stack(
        [np.full(dense, center_x1 - radius), np.linspace(a, -a, dense, endpoint=False)],
        axis=1,
    )
    bottom = _arc_points((center_x1, -a), radius, math.pi, 2.0 * math.pi, dense)
    loop = np.concatenate([right, top, left, bottom])  # counterclockwise
    if orientation == "clockwise":
        loop = loop[::-1]
    nodes = _resample_closed(loop, J)
    return cg.GeneratingCurve(nodes, cg.PERIODIC)


def _flat_disc(J=128, diameter=5.0, height=1.0):
    """Rounded flat-disc profile: top edge, semicircular rim, bottom edge.

    Runs clockwise from the axis at (0, height/2) to (0, -height/2), so nu
    is the outer normal; the rim fillet radius is height/2.
    """
    _require(diameter > 2.0 * height > 0.0, "need diameter > 2 * height > 0")
    r = 0.5 * height
    xmax = 0.5 * diameter
    dense = 4096
    top = np.stack(
        [np.linspace(0.0, xmax - r, dense, endpoint=False), np.full(dense, r)], axis=1
    )
    rim = _arc_points((xmax - r, 0.0), r, 0.5 * math.pi, -0.5 * math.pi, dense)
    bottom = np.stack(
        [np.linspace(xmax - r, 0.0, dense), np.full(dense, -r)], axis=1
    )
    pts = np.concatenate([top, rim, bottom])
    nodes = _resample_open(pts, J)
    nodes[0] = [0.0, r]
    nodes[-1] = [0.0, -r]
    return cg.GeneratingCurve(nodes, cg.INTERVAL, {0: _axis_bc(), 1: _axis_bc()})


def _two_circles(J=512, radius_small=0.1, side="right", orientation="counterclockwise"):
    """Unit circle centered at sqrt(2) e1 with an internally tangent small
    circle inscribed on the chosen side; both traversed with the same
    orientation, so the tangent winds twice."""
    _require(0.0 < radius_small < 1.0, "small radius must lie in (0, 1)")
    _require(side in ("right", "left"), "side must be 'right' or 'left'")
    big_c = math.sqrt(2.0)
    r = radius_small
    if side == "right":
        small_c = big_c + (1.0 - r)
        tangent_angle = 0.0
    else:
        small_c = big_c - (1.0 - r)
        tangent_angle = math.pi
    _require(small_c - r > 0.0, "small circle must stay off the axis")
    frac = 1.0 / (1.0 + r)
    j_big = max(int(round(J * frac)), 8)
    j_small = max(J - j_big, 8)
    j_big = J - j_small
    sgn = {"clockwise": -1.0, "counterclockwise": 1.0}.get(orientation)
    _require(sgn is not None, f"unknown orientation {orientation!r}")
    big = _arc_points(
        (big_c, 0.0),
        1.0,
        tangent_angle,
        tangent_angle + sgn * 2.0 * math.pi,
        j_big,
    )
    small = _arc_points(
        (small_c, 0.0),
        r,
        tangent_angle,
        tangent_angle + sgn * 2.0 * math.pi,
        j_small,
    )
    return cg.GeneratingCurve(np.concatenate([big, small]), cg.PERIODIC)


def _lemniscate(J=256, center_x1=1.5, half_width=1.2, h_left=1.0, h_right=1.0):
    """Smooth figure-eight crossing itself at (center_x1, 0).

    Loops extend half_width to each side of the crossing, with heights
    h_left/h_right controlling the loop sizes (swap them to mirror the
    shape).  Vertices are equidistributed by arclength, and the tangent
    winding of the two loops cancels: turning number zero.
    """
    _require(half_width > 0.0, "half_width must be positive")
    _require(h_left > 0.0 and h_right > 0.0, "loop heights must be positive")
    _require(center_x1 - half_width > 0.0, "left loop must stay off the axis")
    t = 2.0 * math.pi * np.arange(4096) / 4096
    hbar = 0.5 * (h_left + h_right)
    dh = 0.5 * (h_right - h_left)
    x = center_x1 + half_width * np.cos(t)
    y = 0.5 * np.sin(2.0 * t) * (hbar + dh * np.cos(t))
    nodes = _resample_closed(np.stack([x, y], axis=1), J)
    return cg.GeneratingCurve(nodes, cg.PERIODIC)


def _torus_cap(J=64, center_x1=2.0, radius=1.0, theta0=5.0 * math.pi / 6.0, theta1=0.0):
    """Upper part of a torus generating circle, traversed from the inner ring
    over the top to the outer ring.

    The default span starts at 150 degrees so the inner-ring conormal sits at
    the 210-degree contact angle of the default clamp; clamp directions far
    from the initial conormal act as impulsive data and destabilize the
    explicit coefficient treatment.
    """
    _require(center_x1 - radius > 0.0, "cap must stay off the axis")
    th = np.linspace(theta0, theta1, J + 1)
    nodes = np.stack(
        [center_x1 + radius * np.cos(th), radius * np.sin(th)], axis=1
    )
    return nodes


def _cut_cylinder(J=64, radius=1.0, half_height=1.0):
    """Straight vertical profile (an open cylinder), top to bottom so nu
    points away from the axis."""
    _require(radius > 0.0, "radius must be positive")
    z = np.linspace(half_height, -half_height, J + 1)
    return np.stack([np.full(J + 1, radius), z], axis=1)


def _dumbbell(J=64, radius=1.0, waist=0.6, half_height=1.0):
    """Cosine-modulated vertical profile, wide at the ends and pinched in the
    middle; top to bottom."""
    _require(0.0 < waist < radius, "need 0 < waist < radius")
    z = np.linspace(half_height, -half_height, J + 1)
    a = 0.5 * (radius + waist)
    b = 0.5 * (radius - waist)
    x1 = a - b * np.cos(math.pi * z / half_height)
    return np.stack([x1, z], axis=1)


def _sphere_cap(J=64, radius=1.0, angle=0.75 * math.pi):
    """Arc from the axis (top of a sphere) down to a boundary ring."""
    _require(0.0 < angle < math.pi, "opening angle must lie in (0, pi)")
    th = np.linspace(0.0, angle, J + 1)
    nodes = np.stack([radius * np.sin(th), radius * np.cos(th)], axis=1)
    nodes[0] = [0.0, radius]
    return nodes


_BOUNDARY_FACTORIES = {
    "axis": lambda spec: cg.BoundaryCondition(cg.AXIS),
    "navier": lambda spec: cg.BoundaryCondition(cg.NAVIER),
    "free": lambda spec: cg.BoundaryCondition(cg.FREE),
    "semifree1": lambda spec: cg.BoundaryCondition(cg.SEMIFREE1),
    "semifree2": lambda spec: cg.BoundaryCondition(cg.SEMIFREE2),
    "clamped": lambda spec: cg.BoundaryCondition(
        cg.CLAMPED, cg.clamp_direction(float(spec["theta"]))
    ),
}


def boundary_condition_from_spec(spec):
    """Build a BoundaryCondition from a config mapping {'kind': ..., ...}."""
    if isinstance(spec, cg.BoundaryCondition):
        return spec
    kind = spec["kind"]
    if kind not in _BOUNDARY_FACTORIES:
        raise InvalidPresetParams(f"unknown boundary kind {kind!r}")
    return _BOUNDARY_FACTORIES[kind](spec)


def _open_curve(nodes, bc0, bc1):
    return cg.GeneratingCurve(
        nodes,
        cg.INTERVAL,
        {0: boundary_condition_from_spec(bc0), 1: boundary_condition_from_spec(bc1)},
    )


PRESETS = {
    "perturbed_semicircle": "unit semicircle with non-uniform vertices (axis/axis)",
    "circle": "regular closed polygon (torus generating curve)",
    "torus_circle": "alias of circle",
    "cigar": "elongated capsule profile, closed",
    "flat_disc": "rounded disc profile (axis/axis)",
    "two_circles": "unit circle with inscribed tangent circle, tangent winds twice",
    "lemniscate": "smooth figure-eight, turning number zero",
    "torus_cap": "upper torus arc, boundary conditions configurable",
    "cut_cylinder": "straight vertical profile, boundary conditions configurable",
    "dumbbell": "pinched vertical profile, boundary conditions configurable",
    "sphere_cap": "spherical cap (axis + configurable ring)",
}


def make_preset(preset, **overrides):
    """Build the initial GeneratingCurve of a named preset.

    Accepts a CurvePreset or a preset id plus keyword parameters.  Boundary
    conditions of open presets default to Navier rings and can be overridden
    with bc0/bc1 mappings like {"kind": "clamped", "theta": 3.5}.
    """
    if isinstance(preset, CurvePreset):
        params = dict(preset.params)
        params.update(overrides)
        preset_id = preset.preset_id
    else:
        preset_id = preset
        params = dict(overrides)
    try:
        if preset_id == "perturbed_semicircle":
            return _perturbed_semicircle(**params)
        if preset_id in ("circle", "torus_circle"):
            return _circle(**params)
        if preset_id == "cigar":
            return _cigar(**params)
        if preset_id == "flat_disc":
            return _flat_disc(**params)
        if preset_id == "two_circles":
            return _two_circles(**params)
        if preset_id == "lemniscate":
            return _lemniscate(**params)
        if preset_id == "torus_cap":
            bc0 = params.pop("bc0", {"kind": "clamped", "theta": 7.0 * math.pi / 6.0})
            bc1 = params.pop("bc1", {"kind": "free"})
            return _open_curve(_torus_cap(**params), bc0, bc1)
        if preset_id == "cut_cylinder":
            bc0 = params.pop("bc0", {"kind": "navier"})
            bc1 = params.pop("bc1", {"kind": "navier"})
            return _open_curve(_cut_cylinder(**params), bc0, bc1)
        if preset_id == "dumbbell":
            bc0 = params.pop("bc0", {"kind": "navier"})
            bc1 = params.pop("bc1", {"kind": "navier"})
            return _open_curve(_dumbbell(**params), bc0, bc1)
        if preset_id == "sphere_cap":
            bc1 = params.pop("bc1", {"kind": "navier"})
            return _open_curve(_sphere_cap(**params), {"kind": "axis"}, bc1)
    except TypeError as exc:
        raise InvalidPresetParams(f"bad parameters for {preset_id!r}: {exc}") from exc
    raise InvalidPresetParams(f"unknown preset {preset_id!r}")
