"""Run configuration, time-stepping loop and file output.

A run is fully described by a JSON config (preset or explicit curve file,
scheme, model parameters, step size and horizon, conservation mode, output
cadence).  Runs are deterministic: identical configs reproduce identical
outputs byte for byte.

Outputs written into the run directory:
    run_config.json   echo of the effective configuration
    diagnostics.csv   one row per accepted time level (M+1 rows)
    curve_XXXXXX.csv  node snapshots (initial, cadence, final)
    surface.obj       revolved triangle mesh of the final curve
    result.json       summary (+ sphere error norms when configured)
    failure.json      written instead of result.json when a step fails;
                      the last valid state is dumped alongside
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from . import conserved as cons
from . import curve as cg
from . import functionals as fn
from . import reference
from . import scheme_kappa as sk
from . import scheme_kappa_s as sks
from .errors import AxiwillmoreError, ConfigError

SCHEMES = ("kappa", "kappaS_lumped", "kappaS_exact")


@dataclass
class RunConfig:
    """Everything needed to reproduce a run."""

    scheme: str = "kappa"
    preset: Optional[Mapping] = None
    curve_file: Optional[str] = None
    topology: Optional[str] = None
    boundary: Optional[Mapping] = None
    params: Mapping = field(default_factory=dict)
    dt: float = 1e-4
    T: Optional[float] = None
    steps: Optional[int] = None
    conservation: str = "none"
    newton: Mapping = field(default_factory=dict)
    snapshot_every: Optional[int] = None
    ktheta: int = 32
    sphere_reference: Optional[Mapping] = None

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            data = json.load(fh)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self):
        return dataclasses.asdict(self)

    def validated(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if (self.preset is None) == (self.curve_file is None):
            raise ConfigError("exactly one of preset/curve_file must be given")
        if self.curve_file is not None and self.topology is None:
            raise ConfigError("curve_file requires a topology")
        if not self.dt > 0.0:
            raise ConfigError("dt must be positive")
        if (self.T is None) == (self.steps is None):
            raise ConfigError("exactly one of T/steps must be given")
        if self.steps is not None and self.steps < 0:
            raise ConfigError("steps must be nonnegative")
        mode = cons.ConservationMode(self.conservation)
        if mode is not cons.ConservationMode.NONE and self.scheme != "kappa":
            raise ConfigError("conservation requires the kappa scheme")
        return self

    def model_params(self):
        p = dict(self.params)
        clamp = {int(k): float(v) for k, v in p.pop("clamp_angles", {}).items()}
        return fn.ModelParams(clamp_angles=clamp, **p)

    def build_curve(self):
        if self.preset is not None:
            spec = dict(self.preset)
            pid = spec.pop("id")
            return reference.make_preset(pid, **spec)
        boundary = None
        if self.boundary:
            boundary = {
                int(k): reference.boundary_condition_from_spec(v)
                for k, v in self.boundary.items()
            }
        return cg.read_snapshot(self.curve_file, self.topology, boundary)

    def schedule(self):
        """Uniform steps of dt; with a horizon T the last step is shortened
        to land on T exactly."""
        if self.steps is not None:
            return [self.dt] * self.steps
        m = int(math.ceil(self.T / self.dt - 1e-9))
        out = [self.dt] * max(m - 1, 0)
        out.append(self.T - self.dt * max(m - 1, 0))
        return out


@dataclass
class RunResult:
    status: str
    outdir: str
    steps_done: int
    final_time: float
    diagnostics: list
    error_norms: Optional[tuple] = None
    failure: Optional[dict] = None


@dataclass(frozen=True)
class RevolvedMesh:
    """Triangle mesh of the surface of revolution."""

    vertices: np.ndarray
    faces: np.ndarray
    watertight: bool


def export_revolved(curve, ktheta):
    """Revolve the generating curve into a triangle mesh.

    Ring vertices (x1 cos th, x2, x1 sin th) per node, a single apex vertex
    for each axis node; triangles are wound so their normals follow the
    curve normal nu.  Watertight exactly when the surface is closed.
    """
    if ktheta < 3:
        raise ValueError("ktheta must be at least 3")
    frames = cg.build_element_frames(curve)
    n = curve.n_nodes
    axis = set(curve.axis_node_indices)
    theta = 2.0 * math.pi * np.arange(ktheta) / ktheta
    cos_t, sin_t = np.cos(theta), np.sin(theta)

    vertices = []
    start = np.empty(n, dtype=int)
    for i in range(n):
        start[i] = len(vertices)
        x1, x2 = curve.nodes[i]
        if i in axis:
            vertices.append((0.0, x2, 0.0))
        else:
            for k in range(ktheta):
                vertices.append((x1 * cos_t[k], x2, x1 * sin_t[k]))
    vertices = np.asarray(vertices)

    def ring(i, k):
        return start[i] + (k % ktheta)

    faces = []
    en = curve.element_nodes()
    for e, (a, b) in enumerate(en):
        nu = frames.nu[e]
        if a in axis and b in axis:
            continue  # degenerate element on the axis; rejected upstream
        if a in axis:
            tris = [(start[a], ring(b, k), ring(b, k + 1)) for k in range(ktheta)]
        elif b in axis:
            tris = [(ring(a, k), start[b], ring(a, k + 1)) for k in range(ktheta)]
        else:
            tris = []
            for k in range(ktheta):
                tris.append((ring(a, k), ring(b, k), ring(b, k + 1)))
                tris.append((ring(a, k), ring(b, k + 1), ring(a, k + 1)))
        # orient with the revolved curve normal (theta = 0 sector)
        p0, p1, p2 = (vertices[j] for j in tris[0])
        fnorm = np.cross(p1 - p0, p2 - p0)
        target = np.array([nu[0], nu[1], 0.0])
        if float(fnorm @ target) < 0.0:
            tris = [(t[0], t[2], t[1]) for t in tris]
        faces.extend(tris)

    return RevolvedMesh(
        vertices=vertices,
        faces=np.asarray(faces, dtype=int),
        watertight=curve.is_closed_surface,
    )


def write_obj(mesh, path):
    """Wavefront text export, 1-based face indices."""
    with open(path, "w") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]!r} {v[1]!r} {v[2]!r}\n")
        for f in mesh.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


def mesh_area(mesh):
    """Total triangle area (refinement check against the exact surface area)."""
    p = mesh.vertices[mesh.faces]
    cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    return float(0.5 * np.sum(np.linalg.norm(cross, axis=1)))


def run(config, outdir):
    """Execute a configured run; never raises on scheme failures, which are
    recorded in failure.json with the last valid state dumped."""
    config = config.validated()
    params = config.model_params()
    curve = config.build_curve()
    mode = cons.ConservationMode(config.conservation)
    if mode is not cons.ConservationMode.NONE:
        if curve.endpoints_of_kind(cg.CONORMAL_KINDS):
            raise ConfigError(
                "conserved flows require a curve without conormal-carrying endpoints"
            )
        if mode.wants_volume and not curve.is_closed_surface:
            raise ConfigError("volume conservation requires a closed surface")
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "run_config.json"), "w") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)

    newton_cfg = cons.NewtonConfig(**config.newton) if config.newton else cons.NewtonConfig()
    schedule = config.schedule()

    variant = None
    if config.scheme == "kappa":
        state = sk.init_state(curve, params)
        variant_name = "kappa"
    else:
        variant = (
            sks.Variant.LUMPED if config.scheme == "kappaS_lumped" else sks.Variant.EXACT
        )
        state = sks.init_state_S(curve, params, variant)
        variant_name = variant.functional_name

    area0 = fn.surface_area(curve)
    vol0 = fn.enclosed_volume(curve) if curve.is_closed_surface else None

    def kappa_of(s):
        return s.kappa if config.scheme == "kappa" else s.kappa_s

    diag_path = os.path.join(outdir, "diagnostics.csv")
    diag_rows = []
    snap_count = 0

    def snapshot(s):
        nonlocal snap_count
        cg.write_snapshot(s.curve, os.path.join(outdir, f"curve_{snap_count:06d}.csv"))
        snap_count += 1

    def record(step_idx, s, energy=None, lam_a=0.0, lam_v=0.0, iters=0):
        row = fn.collect_diagnostics(
            s.curve,
            kappa_of(s),
            params,
            variant_name,
            step=step_idx,
            time=s.t,
            conormals=s.conormals,
            lambda_a=lam_a,
            lambda_v=lam_v,
            newton_iters=iters,
            energy_value=energy,
        )
        diag_rows.append(row)

    sphere_ref = (
        reference.SphereReference(**config.sphere_reference)
        if config.sphere_reference
        else None
    )
    norm_linf = 0.0
    norm_linf_l2 = 0.0

    def track_norms(s):
        nonlocal norm_linf, norm_linf_l2
        if sphere_ref is None:
            return
        li, l2 = reference.error_norms([s.t], [s.curve], sphere_ref)
        norm_linf = max(norm_linf, li)
        norm_linf_l2 = max(norm_linf_l2, l2)

    record(0, state)
    snapshot(state)

    failure = None
    steps_done = 0
    for m, dt in enumerate(schedule):
        try:
            if config.scheme == "kappa":
                if mode is cons.ConservationMode.NONE:
                    new_state, rep = sk.step(state, params, dt)
                else:
                    new_state, rep = cons.conserved_step(
                        state,
                        params,
                        dt,
                        mode,
                        newton_cfg,
                        area_target=area0,
                        volume_target=vol0,
                    )
            else:
                new_state, rep = sks.step_S(state, params, dt, variant)
        except AxiwillmoreError as exc:
            failure = {
                "step": m,
                "time": state.t,
                "error_type": type(exc).__name__,
                "message": str(exc),
            }
            break
        state = new_state
        steps_done = m + 1
        record(m + 1, state, energy=rep.energy, lam_a=rep.lambda_a,
               lam_v=rep.lambda_v, iters=rep.newton_iters)
        track_norms(state)
        if config.snapshot_every and (m + 1) % config.snapshot_every == 0:
            snapshot(state)

    if not (config.snapshot_every and steps_done and steps_done % config.snapshot_every == 0):
        if steps_done:
            snapshot(state)

    with open(diag_path, "w") as fh:
        fh.write(fn.Diagnostics.CSV_HEADER + "\n")
        for row in diag_rows:
            fh.write(row.csv_row() + "\n")

    norms = (norm_linf, norm_linf_l2) if sphere_ref is not None else None

    if failure is not None:
        failure["last_valid_state"] = f"curve_{snap_count - 1:06d}.csv"
        with open(os.path.join(outdir, "failure.json"), "w") as fh:
            json.dump(failure, fh, indent=2)
        return RunResult(
            status="failed",
            outdir=outdir,
            steps_done=steps_done,
            final_time=state.t,
            diagnostics=diag_rows,
            error_norms=norms,
            failure=failure,
        )

    mesh = export_revolved(state.curve, config.ktheta)
    write_obj(mesh, os.path.join(outdir, "surface.obj"))
    summary = {
        "steps": steps_done,
        "final_time": state.t,
        "final_energy": diag_rows[-1].energy,
        "final_ratio": diag_rows[-1].ratio,
        "final_area": diag_rows[-1].area,
        "final_volume": diag_rows[-1].volume,
    }
    if norms is not None:
        summary["error_linf"] = norms[0]
        summary["error_linf_l2"] = norms[1]
    with open(os.path.join(outdir, "result.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    return RunResult(
        status="ok",
        outdir=outdir,
        steps_done=steps_done,
        final_time=state.t,
        diagnostics=diag_rows,
        error_norms=norms,
    )
