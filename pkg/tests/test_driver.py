import filecmp
import json
import math
import os

import numpy as np
import pytest

from axiwillmore import cli
from axiwillmore import curve as cg
from axiwillmore import driver
from axiwillmore import functionals as fn
from axiwillmore.driver import RunConfig, export_revolved, mesh_area, run, write_obj
from axiwillmore.errors import ConfigError
from conftest import circle, semicircle, semicircle_fixture


def base_config(**kw):
    cfg = dict(
        scheme="kappa",
        preset={"id": "perturbed_semicircle", "J": 16},
        params={"alpha": 1.0, "kbar": -1.0},
        dt=1e-4,
        steps=5,
    )
    cfg.update(kw)
    return RunConfig(**cfg)


class TestConfig:
    def test_validation_catches_bad_configs(self):
        with pytest.raises(ConfigError):
            base_config(scheme="bogus").validated()
        with pytest.raises(ConfigError):
            base_config(preset=None).validated()
        with pytest.raises(ConfigError):
            base_config(steps=None).validated()
        with pytest.raises(ConfigError):
            base_config(steps=5, T=1.0).validated()
        with pytest.raises(ConfigError):
            base_config(scheme="kappaS_exact", conservation="area").validated()

    def test_unknown_keys_rejected(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"scheme": "kappa", "bogus_key": 1}))
        with pytest.raises(ConfigError):
            RunConfig.from_json(path)

    def test_schedule_lands_on_horizon(self):
        cfg = base_config(steps=None, T=1.0, dt=0.3)
        sched = cfg.schedule()
        assert len(sched) == 4
        assert sum(sched) == pytest.approx(1.0, abs=1e-15)


class TestRun:
    def test_zero_steps_emits_initial_row_and_snapshot(self, tmp_path):
        out = tmp_path / "r0"
        res = run(base_config(steps=0), str(out))
        assert res.status == "ok"
        lines = (out / "diagnostics.csv").read_text().strip().splitlines()
        assert len(lines) == 2  # header + one row
        snaps = sorted(p for p in os.listdir(out) if p.startswith("curve_"))
        assert snaps == ["curve_000000.csv"]

    def test_row_count_and_snapshot_cadence(self, tmp_path):
        res = run(base_config(steps=7, snapshot_every=3), str(tmp_path / "r"))
        lines = (tmp_path / "r" / "diagnostics.csv").read_text().strip().splitlines()
        assert len(lines) == 1 + 7 + 1  # header + M+1 rows
        snaps = sorted(
            p for p in os.listdir(tmp_path / "r") if p.startswith("curve_")
        )
        # initial, steps 3 and 6, final
        assert len(snaps) == 4

    def test_deterministic_reruns(self, tmp_path):
        cfg = base_config(steps=6)
        run(cfg, str(tmp_path / "a"))
        run(cfg, str(tmp_path / "b"))
        for name in ("diagnostics.csv", "surface.obj", "result.json"):
            assert filecmp.cmp(tmp_path / "a" / name, tmp_path / "b" / name, shallow=False)

    def test_failure_report_on_singular_run(self, tmp_path):
        nodes = np.stack([np.linspace(1.0, 3.0, 17), np.zeros(17)], axis=1)
        snap = tmp_path / "line.csv"
        c = cg.GeneratingCurve(
            nodes,
            cg.INTERVAL,
            {
                0: cg.BoundaryCondition(cg.CLAMPED, cg.clamp_direction(0.0)),
                1: cg.BoundaryCondition(cg.CLAMPED, cg.clamp_direction(0.0)),
            },
        )
        cg.write_snapshot(c, snap)
        cfg = RunConfig(
            scheme="kappa",
            curve_file=str(snap),
            topology="interval",
            boundary={
                "0": {"kind": "clamped", "theta": math.pi / 2},
                "1": {"kind": "clamped", "theta": -math.pi / 2},
            },
            params={"alpha": 1.0},
            dt=1e-4,
            steps=3,
        )
        out = tmp_path / "fail"
        res = run(cfg, str(out))
        assert res.status == "failed"
        failure = json.loads((out / "failure.json").read_text())
        assert failure["error_type"] == "SingularSystem"
        assert failure["step"] == 0
        assert (out / failure["last_valid_state"]).exists()
        assert not (out / "result.json").exists()

    def test_sphere_reference_errors_in_result(self, tmp_path):
        cfg = base_config(steps=20, sphere_reference={"kbar": -1.0, "R0": 1.0})
        res = run(cfg, str(tmp_path / "s"))
        assert res.error_norms is not None
        summary = json.loads((tmp_path / "s" / "result.json").read_text())
        assert summary["error_linf"] == pytest.approx(res.error_norms[0])

    def test_kappa_s_schemes_run(self, tmp_path):
        for scheme in ("kappaS_lumped", "kappaS_exact"):
            res = run(base_config(scheme=scheme, steps=3), str(tmp_path / scheme))
            assert res.status == "ok"

    def test_conserved_run_diagnostics(self, tmp_path):
        cfg = RunConfig(
            scheme="kappa",
            preset={"id": "flat_disc", "J": 48},
            params={"alpha": 1.0},
            dt=1e-4,
            steps=4,
            conservation="area_and_volume",
        )
        res = run(cfg, str(tmp_path / "c"))
        assert res.status == "ok"
        assert res.diagnostics[-1].newton_iters >= 1
        a0 = res.diagnostics[0].area
        assert res.diagnostics[-1].area == pytest.approx(a0, abs=1e-9)


class TestRevolvedMesh:
    def test_two_element_counts(self):
        mesh = export_revolved(semicircle_fixture(), 4)
        assert len(mesh.vertices) == 2 + 4
        assert len(mesh.faces) == 8
        assert mesh.watertight

    def test_torus_euler_characteristic(self):
        k = 12
        c = circle(16)
        mesh = export_revolved(c, k)
        v = len(mesh.vertices)
        f = len(mesh.faces)
        edges = set()
        for tri in mesh.faces:
            for a, b in ((0, 1), (1, 2), (2, 0)):
                edges.add(frozenset((tri[a], tri[b])))
        assert v - len(edges) + f == 0

    def test_orientation_follows_nu(self):
        # outward profile normal -> outward triangle normals on the sphere
        c = semicircle(12)
        mesh = export_revolved(c, 16)
        p = mesh.vertices[mesh.faces]
        centers = p.mean(axis=1)
        normals = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        assert np.all(np.sum(normals * centers, axis=1) > 0.0)

    def test_area_converges_to_exact(self):
        exact = fn.surface_area(semicircle(512))
        a1 = mesh_area(export_revolved(semicircle(64), 64))
        a2 = mesh_area(export_revolved(semicircle(256), 256))
        assert abs(a2 - 4 * math.pi) < abs(a1 - 4 * math.pi)
        assert a2 == pytest.approx(exact, rel=1e-3)

    def test_obj_format(self, tmp_path):
        mesh = export_revolved(semicircle_fixture(), 4)
        path = tmp_path / "m.obj"
        write_obj(mesh, path)
        lines = path.read_text().strip().splitlines()
        assert sum(1 for ln in lines if ln.startswith("v ")) == 6
        f_lines = [ln for ln in lines if ln.startswith("f ")]
        assert len(f_lines) == 8
        idx = [int(tok) for ln in f_lines for tok in ln.split()[1:]]
        assert min(idx) == 1 and max(idx) == 6


class TestCli:
    def test_run_and_export(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(
            json.dumps(
                {
                    "scheme": "kappa",
                    "preset": {"id": "perturbed_semicircle", "J": 12},
                    "params": {"alpha": 1.0, "kbar": -1.0},
                    "dt": 1e-4,
                    "steps": 2,
                }
            )
        )
        out = tmp_path / "run"
        assert cli.main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
        assert (out / "surface.obj").exists()
        obj = tmp_path / "exported.obj"
        assert (
            cli.main(
                [
                    "export",
                    "--snapshot",
                    str(out / "curve_000000.csv"),
                    "--ktheta",
                    "6",
                    "--obj",
                    str(obj),
                    "--topology",
                    "interval",
                ]
            )
            == 0
        )
        assert obj.exists()
        assert cli.main(["presets"]) == 0
        listing = capsys.readouterr().out
        assert "perturbed_semicircle" in listing

    def test_failed_run_exit_code(self, tmp_path):
        cfg_path = tmp_path / "bad.json"
        cfg_path.write_text(json.dumps({"scheme": "nope", "steps": 1}))
        assert cli.main(["run", "--config", str(cfg_path), "--out", str(tmp_path / "o")]) == 1
