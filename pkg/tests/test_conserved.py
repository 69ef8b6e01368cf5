import numpy as np
import pytest

from axiwillmore import curve as cg
from axiwillmore import functionals as fn
from axiwillmore import scheme_kappa as sk
from axiwillmore.conserved import ConservationMode, NewtonConfig, conserved_step
from axiwillmore.errors import NotClosed, SingularConstraintJacobian
from axiwillmore.reference import make_preset
from axiwillmore.scheme_kappa import conservation_gradients
from conftest import random_open_curve, random_periodic_curve, semicircle

P0 = fn.ModelParams(alpha=1.0)


class TestGradients:
    def test_match_finite_differences(self, rng):
        # the multiplier forcing columns are the exact area/volume gradients
        c = random_periodic_curve(rng, J=18)
        ga, gv = conservation_gradients(c)
        eps = 1e-6
        for _ in range(4):
            chi = rng.normal(size=c.nodes.shape)
            ap = fn.surface_area(c.with_nodes(c.nodes + eps * chi))
            am = fn.surface_area(c.with_nodes(c.nodes - eps * chi))
            vp = fn.enclosed_volume(c.with_nodes(c.nodes + eps * chi))
            vm = fn.enclosed_volume(c.with_nodes(c.nodes - eps * chi))
            assert np.sum(ga * chi) == pytest.approx((ap - am) / (2 * eps), rel=1e-6)
            assert np.sum(gv * chi) == pytest.approx((vp - vm) / (2 * eps), rel=1e-6)


class TestConservedStep:
    def test_mode_none_equals_plain_step(self, rng):
        c = random_periodic_curve(rng)
        st = sk.init_state(c, P0)
        plain, _ = sk.step(st, P0, 1e-4)
        via_cons, rep = conserved_step(st, P0, 1e-4, ConservationMode.NONE)
        np.testing.assert_array_equal(via_cons.curve.nodes, plain.curve.nodes)
        assert rep.lambda_a == 0.0 and rep.lambda_v == 0.0

    def test_area_and_volume_held(self):
        disc = make_preset("flat_disc", J=64)
        a0 = fn.surface_area(disc)
        v0 = fn.enclosed_volume(disc)
        st = sk.init_state(disc, P0)
        cfg = NewtonConfig()
        for _ in range(25):
            st, rep = conserved_step(
                st, P0, 1e-4, ConservationMode.AREA_AND_VOLUME, cfg,
                area_target=a0, volume_target=v0,
            )
            assert abs(fn.surface_area(st.curve) - a0) <= cfg.tol
            assert abs(fn.enclosed_volume(st.curve) - v0) <= cfg.tol
            assert rep.newton_iters <= 5
        # the shape actually moved while conserving
        assert np.abs(st.curve.nodes - disc.nodes).max() > 1e-4

    def test_area_only_freezes_volume_multiplier(self):
        disc = make_preset("flat_disc", J=48)
        a0 = fn.surface_area(disc)
        st = sk.init_state(disc, P0)
        st, rep = conserved_step(
            st, P0, 1e-4, ConservationMode.AREA, NewtonConfig(), area_target=a0
        )
        assert rep.lambda_v == 0.0
        assert abs(fn.surface_area(st.curve) - a0) <= 1e-10

    def test_volume_only(self, rng):
        c = random_periodic_curve(rng)
        v0 = fn.enclosed_volume(c)
        st = sk.init_state(c, P0)
        st, rep = conserved_step(
            st, P0, 1e-4, ConservationMode.VOLUME, NewtonConfig(), volume_target=v0
        )
        assert rep.lambda_a == 0.0
        assert abs(fn.enclosed_volume(st.curve) - v0) <= 1e-10

    def test_volume_mode_requires_closed(self):
        # open surface with no conormal endpoints: one axis end, one clamped
        th = np.linspace(0.0, 0.75 * np.pi, 17)
        nodes = np.stack([np.sin(th), np.cos(th)], axis=1)
        nodes[0] = [0.0, 1.0]
        c = cg.GeneratingCurve(
            nodes,
            cg.INTERVAL,
            {
                0: cg.BoundaryCondition(cg.AXIS),
                1: cg.BoundaryCondition(cg.CLAMPED, cg.clamp_direction(0.75 * np.pi)),
            },
        )
        st = sk.init_state(c, P0)
        with pytest.raises(NotClosed):
            conserved_step(st, P0, 1e-4, ConservationMode.VOLUME)

    def test_conormal_endpoints_rejected(self, rng):
        c = random_open_curve(rng, cg.FREE, cg.NAVIER)
        st = sk.init_state(c, P0)
        with pytest.raises(ValueError):
            conserved_step(st, P0, 1e-4, ConservationMode.AREA)

    def test_sphere_degeneracy_detected(self):
        # constant mean curvature: area and volume respond in the same
        # direction, the 2x2 Jacobian blows up and the error path triggers
        st = sk.init_state(semicircle(48), P0)
        with pytest.raises(SingularConstraintJacobian):
            conserved_step(st, P0, 1e-4, ConservationMode.AREA_AND_VOLUME)

    def test_drift_bounded_by_steps_times_tol(self):
        disc = make_preset("flat_disc", J=64)
        a0 = fn.surface_area(disc)
        v0 = fn.enclosed_volume(disc)
        st = sk.init_state(disc, P0)
        cfg = NewtonConfig(tol=1e-10)
        n = 40
        for _ in range(n):
            st, _ = conserved_step(
                st, P0, 1e-4, ConservationMode.AREA_AND_VOLUME, cfg,
                area_target=a0, volume_target=v0,
            )
        assert abs(fn.surface_area(st.curve) - a0) <= n * cfg.tol
        assert abs(fn.enclosed_volume(st.curve) - v0) <= n * cfg.tol
