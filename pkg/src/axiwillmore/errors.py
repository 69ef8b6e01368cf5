"""Exception hierarchy for the solver library."""


class AxiwillmoreError(Exception):
    """Base class for all library errors."""


class GeometryError(AxiwillmoreError):
    """Invalid or degenerate curve geometry."""


class DegenerateElement(GeometryError):
    """An element has (numerically) zero length; two vertices coalesced."""


class ZeroAveragedNormal(GeometryError):
    """The averaged vertex normal vanishes (two neighbouring elements fold
    onto each other), so the unit vertex normal is undefined."""


class DivisionByAxis(GeometryError):
    """A vertex not classified as an axis endpoint sits at x1 = 0, making the
    azimuthal curvature fraction undefined."""


class AssemblyDomainError(GeometryError):
    """A vertex left the admissible half plane (x1 <= 0 off the axis)."""


class NotClosed(GeometryError):
    """Operation requires a closed surface (periodic curve or both endpoints
    on the rotation axis)."""


class AxisContact(GeometryError):
    """Operation requires the curve to stay away from the rotation axis."""


class SolverError(AxiwillmoreError):
    """Linear algebra failure."""


class SingularSystem(SolverError):
    """Direct factorization failed or the reciprocal condition estimate is
    below the singularity threshold."""

    def __init__(self, message, rcond=None):
        super().__init__(message)
        self.rcond = rcond


class NonFiniteSolution(SolverError):
    """The solve produced NaN or infinite entries."""


class DimensionMismatch(SolverError):
    """Right-hand side does not match the factored matrix dimension."""


class NewtonDivergence(AxiwillmoreError):
    """The multiplier Newton iteration did not converge within the allowed
    number of iterations."""


class SingularConstraintJacobian(AxiwillmoreError):
    """The 2x2 (or 1x1) Jacobian of the conservation constraints is
    numerically singular; happens e.g. when the surface is a sphere and the
    mean curvature is constant."""


class InvalidPresetParams(AxiwillmoreError):
    """Preset parameters outside their documented range."""


class RootBracketFailure(AxiwillmoreError):
    """The sphere-radius root-finder could not bracket a root; the requested
    (kbar, R0, t) lies outside the admissible regime."""


class ConfigError(AxiwillmoreError):
    """Run configuration invalid or inconsistent."""
