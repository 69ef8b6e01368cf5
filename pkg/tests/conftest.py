import math

import numpy as np
import pytest

from axiwillmore import curve as cg


def semicircle_fixture():
    """2-element clockwise half circle through (1,0); both endpoints on the axis."""
    nodes = np.array([[0.0, 1.0], [1.0, 0.0], [0.0, -1.0]])
    return cg.GeneratingCurve(
        nodes,
        cg.INTERVAL,
        {0: cg.BoundaryCondition(cg.AXIS), 1: cg.BoundaryCondition(cg.AXIS)},
    )


def square_fixture():
    """Counterclockwise 4-gon inscribed in the unit circle around (2, 0)."""
    nodes = np.array([[3.0, 0.0], [2.0, 1.0], [1.0, 0.0], [2.0, -1.0]])
    return cg.GeneratingCurve(nodes, cg.PERIODIC)


def semicircle(J, clockwise=True):
    """Uniform J-element discrete half circle with exact axis endpoints."""
    th = np.linspace(0.5 * math.pi, -0.5 * math.pi, J + 1)
    if not clockwise:
        th = th[::-1]
    nodes = np.stack([np.cos(th), np.sin(th)], axis=1)
    nodes[0, 0] = 0.0
    nodes[-1, 0] = 0.0
    return cg.GeneratingCurve(
        nodes,
        cg.INTERVAL,
        {0: cg.BoundaryCondition(cg.AXIS), 1: cg.BoundaryCondition(cg.AXIS)},
    )


def circle(J, center=(2.0, 0.0), radius=1.0, clockwise=True):
    sgn = -1.0 if clockwise else 1.0
    th = sgn * 2.0 * math.pi * np.arange(J) / J
    nodes = np.stack(
        [center[0] + radius * np.cos(th), center[1] + radius * np.sin(th)], axis=1
    )
    return cg.GeneratingCurve(nodes, cg.PERIODIC)


def random_periodic_curve(rng, J=None):
    """Smoothly perturbed closed polygon kept well off the axis."""
    J = J or int(rng.integers(12, 40))
    th = -2.0 * math.pi * np.arange(J) / J  # clockwise
    r = 1.0 + 0.25 * np.sin(2 * th + rng.uniform(0, 2 * math.pi))
    r += 0.15 * np.cos(3 * th + rng.uniform(0, 2 * math.pi))
    cx = rng.uniform(2.0, 4.0)
    nodes = np.stack([cx + r * np.cos(th), r * np.sin(th)], axis=1)
    return cg.GeneratingCurve(nodes, cg.PERIODIC)


def random_axis_curve(rng, J=None):
    """Perturbed half circle with exact axis endpoints."""
    J = J or int(rng.integers(12, 40))
    q = np.arange(J + 1) / J
    th = (0.5 - q) * math.pi
    amp = rng.uniform(0.02, 0.12)
    th = th + amp * np.cos(th + rng.uniform(-0.5, 0.5))
    r = 1.0 + 0.1 * np.sin(math.pi * q) * rng.uniform(-1, 1)
    nodes = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
    nodes[0] = [0.0, nodes[0, 1]]
    nodes[-1] = [0.0, nodes[-1, 1]]
    return cg.GeneratingCurve(
        nodes,
        cg.INTERVAL,
        {0: cg.BoundaryCondition(cg.AXIS), 1: cg.BoundaryCondition(cg.AXIS)},
    )


def random_open_curve(rng, kind0, kind1, J=None):
    """Quarter-circle-ish arc away from the axis with the given endpoint classes."""
    J = J or int(rng.integers(12, 32))
    q = np.arange(J + 1) / J
    th = (0.25 + 0.5 * q) * math.pi + 0.05 * np.sin(2 * math.pi * q)
    r = 1.0 + 0.1 * np.sin(math.pi * q * rng.uniform(0.5, 1.5))
    nodes = np.stack([2.5 + r * np.cos(th), r * np.sin(th)], axis=1)

    def bc(kind, tang):
        if kind == cg.CLAMPED:
            return cg.BoundaryCondition(cg.CLAMPED, tang / np.linalg.norm(tang))
        return cg.BoundaryCondition(kind)

    return cg.GeneratingCurve(
        nodes,
        cg.INTERVAL,
        {
            0: bc(kind0, nodes[0] - nodes[1]),
            1: bc(kind1, nodes[-1] - nodes[-2]),
        },
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
