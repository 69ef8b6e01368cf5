"""Command line front end: run configs, export meshes, list presets."""

from __future__ import annotations

import argparse
import json
import sys

from . import curve as cg
from . import driver, reference
from .errors import AxiwillmoreError


def _cmd_run(args):
    config = driver.RunConfig.from_json(args.config)
    result = driver.run(config, args.out)
    if result.status != "ok":
        json.dump(result.failure, sys.stderr, indent=2)
        sys.stderr.write("\n")
        return 1
    last = result.diagnostics[-1]
    print(
        f"ok: {result.steps_done} steps to t = {result.final_time:g}, "
        f"energy {last.energy:.6g}, ratio {last.ratio:.3f}"
    )
    if result.error_norms is not None:
        print(
            f"sphere errors: Linf {result.error_norms[0]:.4e}, "
            f"Linf(L2) {result.error_norms[1]:.4e}"
        )
    return 0


def _cmd_export(args):
    topology = args.topology
    boundary = None
    if topology == cg.INTERVAL:
        boundary = {
            0: reference.boundary_condition_from_spec(json.loads(args.bc0)),
            1: reference.boundary_condition_from_spec(json.loads(args.bc1)),
        }
    curve = cg.read_snapshot(args.snapshot, topology, boundary)
    mesh = driver.export_revolved(curve, args.ktheta)
    driver.write_obj(mesh, args.obj)
    print(f"wrote {len(mesh.vertices)} vertices, {len(mesh.faces)} faces")
    return 0


def _cmd_presets(args):
    for name, desc in sorted(reference.PRESETS.items()):
        print(f"{name:22s} {desc}")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="axiwillmore",
        description="Axisymmetric generalized Willmore/Helfrich flow solver",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a configured simulation")
    p_run.add_argument("--config", required=True, help="path to a JSON run config")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.set_defaults(func=_cmd_run)

    p_exp = sub.add_parser("export", help="revolve a curve snapshot into an OBJ mesh")
    p_exp.add_argument("--snapshot", required=True, help="curve snapshot CSV")
    p_exp.add_argument("--ktheta", type=int, default=32)
    p_exp.add_argument("--obj", required=True, help="output OBJ path")
    p_exp.add_argument("--topology", default=cg.PERIODIC, choices=[cg.PERIODIC, cg.INTERVAL])
    p_exp.add_argument("--bc0", default='{"kind": "axis"}', help="endpoint 0 class (JSON)")
    p_exp.add_argument("--bc1", default='{"kind": "axis"}', help="endpoint 1 class (JSON)")
    p_exp.set_defaults(func=_cmd_export)

    p_ls = sub.add_parser("presets", help="list initial-curve presets")
    p_ls.add_argument("action", nargs="?", default="list", choices=["list"])
    p_ls.set_defaults(func=_cmd_presets)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AxiwillmoreError as exc:
        json.dump({"error_type": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
