"""Axisymmetric generalized Willmore/Helfrich flow via parametric FEM on the
generating curve."""

from . import errors
from .conserved import ConservationMode, NewtonConfig, conserved_step
from .curve import (
    BoundaryCondition,
    ElementFrames,
    GeneratingCurve,
    ValidationReport,
    VertexFrames,
    build_element_frames,
    build_vertex_frames,
    lumped_inner,
    lumped_weights,
    nu_is_outer,
    validate,
)
from .driver import RevolvedMesh, RunConfig, RunResult, export_revolved, run, write_obj
from .functionals import (
    CurvatureProxyField,
    Diagnostics,
    ModelParams,
    ade_term,
    curvature_proxy,
    energy,
    enclosed_volume,
    hyperbolic_length,
    mesh_ratio,
    surface_area,
    turning_number,
)
from .linsolve import Factorization, SolveReport, SparseMatrix, factor, solve
from .reference import (
    CurvePreset,
    SphereReference,
    error_norms,
    make_preset,
    sphere_radius,
)
from .scheme_kappa import BlockSystem, SchemeState, assemble_step, init_state, solve_step, step
from .scheme_kappa_s import (
    BlockSystemS,
    SchemeStateS,
    Variant,
    assemble_step_S,
    init_state_S,
    solve_step_S,
    step_S,
)

__version__ = "0.1.0"
