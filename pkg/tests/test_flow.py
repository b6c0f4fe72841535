"""Projectivized geodesic integration against closed forms and the
second-order tangent-bundle oracle."""

from __future__ import annotations

import numpy as np
import pytest

from finslerflow import flow, geom
from finslerflow import metric as mt
from finslerflow.flow import IntegratorConfig, PTMPoint

from helpers import (
    halfplane_metric,
    max_ode_residual,
    nondegenerate_state,
    parabola_metric,
    random_metric,
)

EVENT_KINDS = {
    "Cusp",
    "SingularApproach",
    "ChartSwitch",
    "IsotropicCross",
    "DomainExit",
    "StepUnderflow",
}


class TestDirectionField:
    def test_closed_form_components(self):
        # F = p^2 + c gives (dx, dy, dp) = (2(3c - p^2), p * that, 4c_x p + 7c_y p^2 + 3c c_y)
        m = parabola_metric(0.8)
        rng = np.random.default_rng(1)
        for _ in range(50):
            x, y, p = rng.uniform(-1.2, 1.2, 3)
            c = 0.8 * y * y - x
            cx, cy = -1.0, 1.6 * y
            want = (
                2.0 * (3.0 * c - p * p),
                p * 2.0 * (3.0 * c - p * p),
                7.0 * cy * p * p + 4.0 * cx * p + 3.0 * c * cy,
            )
            got = flow.field_at(m, PTMPoint(x, y, p))
            np.testing.assert_allclose(got, want, rtol=1e-11, atol=1e-11)

    def test_chart_field_consistency(self):
        # the q-chart field is the pushforward of the p-chart field
        m = halfplane_metric()
        rng = np.random.default_rng(2)
        for _ in range(40):
            x, y = rng.uniform(-1.2, -0.2, 2)
            p = rng.uniform(0.4, 1.8) * rng.choice([-1.0, 1.0])
            vx, vy, vp = flow.field_at(m, PTMPoint(x, y, p))
            wx, wy, wq = flow.field_at(m, PTMPoint(x, y, 1.0 / p, "q"))
            # same line element after dividing out the chart weight
            cross = np.cross([vx, vy, -vp / p**2], [wx, wy, wq])
            scale = np.linalg.norm([vx, vy, vp]) * np.linalg.norm([wx, wy, wq])
            assert np.linalg.norm(cross) <= 1e-9 * (scale + 1.0)


class TestTraceStructure:
    def test_bidirectional_parameter(self):
        m = halfplane_metric()
        tr = flow.integrate(m, PTMPoint(-0.5, 0.0, 0.3))
        assert tr.t[0] < 0.0 < tr.t[-1]
        assert np.all(np.diff(tr.t) >= 0)
        k = int(np.argmin(np.abs(tr.t)))
        assert tr.x[k] == pytest.approx(-0.5, abs=1e-12)
        assert tr.y[k] == pytest.approx(0.0, abs=1e-12)

    def test_one_sided(self):
        m = halfplane_metric()
        fwd = flow.integrate(m, PTMPoint(-0.5, 0.0, 0.3), direction=+1)
        back = flow.integrate(m, PTMPoint(-0.5, 0.0, 0.3), direction=-1)
        assert np.all(fwd.t >= 0.0)
        assert np.all(back.t <= 0.0)

    def test_event_bookkeeping(self):
        m = halfplane_metric()
        cfg = IntegratorConfig(box=(-0.8, 0.8, -0.8, 0.8))
        tr = flow.integrate(m, PTMPoint(-0.5, 0.0, 0.3), cfg)
        assert tr.event_kinds() <= EVENT_KINDS
        for e in tr.events:
            assert 0 <= e.index < len(tr)
            assert tr.t[e.index] == pytest.approx(e.t, abs=1e-9)
        assert "DomainExit" in tr.event_kinds()

    def test_sample_spacing_bounded(self):
        m = halfplane_metric()
        cfg = IntegratorConfig(max_ds=0.002)
        tr = flow.integrate(m, PTMPoint(-0.5, 0.0, 0.3), cfg)
        steps = np.hypot(np.diff(tr.x), np.diff(tr.y))
        assert steps.max() <= 0.002 * 1.2

    def test_chart_switch_on_steep_slopes(self):
        # seed pointing nearly vertically must switch to the reciprocal chart
        m = parabola_metric(1.0)
        tr = flow.integrate(m, PTMPoint(0.4, 0.3, 8.0))
        assert set(np.unique(tr.chart)) <= {"p", "q"}
        assert "q" in set(np.unique(tr.chart))


class TestOdeResidual:
    def test_halfplane(self):
        m = halfplane_metric()
        tr = flow.integrate(m, PTMPoint(-0.5, 0.0, 0.3))
        assert max_ode_residual(m, tr) < 1e-4

    def test_parabola(self):
        m = parabola_metric(1.0)
        tr = flow.integrate(m, PTMPoint(0.3, 0.6, -0.4))
        assert max_ode_residual(m, tr) < 1e-4

    def test_random_metrics(self):
        rng = np.random.default_rng(20260814)
        for _ in range(5):
            m = random_metric(rng, 3)
            state = nondegenerate_state(m, rng, (-1.0, 1.0, -1.0, 1.0))
            if state is None:
                continue
            x, y, p = state
            tr = flow.integrate(m, PTMPoint(x, y, p))
            assert tr.event_kinds() <= EVENT_KINDS
            assert max_ode_residual(m, tr) < 5e-4


class TestCusps:
    """Direction reversals happen exactly on the degeneracy locus."""

    def test_cusp_location_halfplane(self):
        # seeds in x > 0 heading left fold back on p^2 = -3x
        m = halfplane_metric()
        found = 0
        for p0 in (0.6, 0.8, 1.1):
            tr = flow.integrate(m, PTMPoint(0.1, 0.0, p0))
            for e in tr.events:
                if e.kind != "Cusp":
                    continue
                found += 1
                x, p = tr.x[e.index], tr.slope[e.index]
                assert str(tr.chart[e.index]) == "p"
                # the degeneracy locus of F = p^2 - x is p^2 = -3x
                assert p * p + 3.0 * x == pytest.approx(0.0, abs=1e-6)
                assert abs(tr.denom[e.index]) < 1e-6
        assert found >= 3

    def test_velocity_reverses_at_cusp(self):
        m = halfplane_metric()
        tr = flow.integrate(m, PTMPoint(0.1, 0.0, 0.8), direction=+1)
        cusps = [e for e in tr.events if e.kind == "Cusp"]
        assert cusps
        i = cusps[0].index
        j = max(i - 4, 0)
        k = min(i + 4, len(tr) - 1)
        before = np.array([tr.x[i] - tr.x[j], tr.y[i] - tr.y[j]])
        after = np.array([tr.x[k] - tr.x[i], tr.y[k] - tr.y[i]])
        assert float(before @ after) < 0.0

    def test_flattening_approach_to_boundary(self):
        # seeds in the three-direction region flatten onto the slope-zero
        # line and crawl into the boundary point instead of cusping
        m = halfplane_metric()
        tr = flow.integrate(m, PTMPoint(-0.5, 0.0, 0.3), direction=+1)
        assert "Cusp" not in tr.event_kinds()
        assert "SingularApproach" in tr.event_kinds()
        assert tr.x[-1] == pytest.approx(0.0, abs=1e-6)
        assert tr.slope[-1] == pytest.approx(0.0, abs=1e-6)

    def test_no_events_at_boundary_crossings_off_double_direction(self):
        # crossing x = 0 with slope away from the double direction p = 0
        # is unremarkable: any events happen elsewhere on the trace
        m = halfplane_metric()
        for p0 in (0.8, -1.1, 1.5):
            tr = flow.integrate(m, PTMPoint(0.1, 0.0, p0))
            sign_flip = np.nonzero(np.diff(np.sign(tr.x)))[0]
            crossings = [i for i in sign_flip if abs(tr.slope[i]) > 0.3]
            assert crossings
            for e in tr.events:
                for i in crossings:
                    assert abs(e.index - i) > 5


class TestIsotropicTraces:
    def test_invariance_halfplane(self):
        m = halfplane_metric()
        tr = flow.isotropic_trace(m, PTMPoint(0.5, 0.0, np.sqrt(0.5)))
        sc = np.array([mt.metric_scale(m, x, y) + 1.0 for x, y in zip(tr.x, tr.y)])
        assert np.max(np.abs(tr.F) / sc) < 1e-7
        assert "IsotropicCross" not in tr.event_kinds()

    def test_closed_form_halfplane(self):
        # isotropic curves of F = p^2 - x: y = y0 +- (2/3) x^(3/2)
        m = halfplane_metric()
        tr = flow.isotropic_trace(m, PTMPoint(0.5, 0.0, np.sqrt(0.5)))
        keep = tr.x > 1e-4
        resid = tr.y[keep] - (2.0 / 3.0) * (tr.x[keep] ** 1.5 - 0.5**1.5)
        assert np.max(np.abs(resid)) < 1e-6

    def test_seed_projection(self):
        m = halfplane_metric()
        tr = flow.isotropic_trace(m, PTMPoint(0.5, 0.0, 0.7))
        k = int(np.argmin(np.abs(tr.t)))
        assert tr.slope[k] == pytest.approx(np.sqrt(0.5), abs=1e-9)


class TestTangentBundleOverlay:
    def test_projections_agree(self):
        m = halfplane_metric()
        seed = (-0.5, 0.0, 0.3)
        ptm = flow.integrate(m, PTMPoint(*seed))
        tm = flow.tm_integrate(m, seed[0], seed[1], 1.0, seed[2])
        center = np.array(seed[:2])
        a = geom.crop_to_ball(ptm.points(), center, 0.25)
        b = geom.crop_to_ball(tm.points(), center, 0.25)
        assert len(a) > 50 and len(b) > 50
        assert geom.hausdorff_distance(a, b) < 1e-5

    def test_speed_scaling_irrelevant(self):
        m = halfplane_metric()
        t1 = flow.tm_integrate(m, -0.5, 0.0, 1.0, 0.3)
        t2 = flow.tm_integrate(m, -0.5, 0.0, 2.0, 0.6)
        center = np.array([-0.5, 0.0])
        a = geom.crop_to_ball(t1.points(), center, 0.2)
        b = geom.crop_to_ball(t2.points(), center, 0.2)
        assert geom.hausdorff_distance(a, b) < 1e-6

    def test_degenerate_seed_refused(self):
        m = halfplane_metric()
        # p^2 = -3x puts the second-order system on its degeneracy
        with pytest.raises(ValueError):
            flow.tm_integrate(m, -0.03, 0.0, 1.0, 0.3)


class TestArclength:
    def test_monotone_and_consistent(self):
        m = halfplane_metric()
        tr = flow.integrate(m, PTMPoint(-0.5, 0.0, 0.3), direction=+1)
        segs = flow.arclength_reparam(m, tr)
        assert segs
        for seg in segs:
            assert np.all(np.diff(seg[:, 0]) >= -1e-15)
            assert seg[-1, 0] > 0.0

    def test_isotropic_trace_rejected(self):
        m = halfplane_metric()
        tr = flow.isotropic_trace(m, PTMPoint(0.5, 0.0, np.sqrt(0.5)))
        with pytest.raises(flow.IsotropicSegmentError):
            flow.arclength_reparam(m, tr)


class TestShooting:
    def test_transversality_value(self):
        # disc of F = p^2 - x is proportional to x; along (1, 0) it varies
        m = halfplane_metric()
        val = flow.check_transversality(m, 0.0, 0.0, 0.0)
        assert abs(val) > 1e-6

    def test_family_members_end_at_base(self):
        m = halfplane_metric()
        members = flow.shoot_boundary_family(m, 0.0, 0.0, 0.0, [0.0, 1.0])
        assert len(members) == 4
        for mem in members:
            assert mem.eta_sign in (-1, 1)
            d = np.hypot(mem.trace.x - 0.0, mem.trace.y - 0.0)
            assert d.min() < 5e-3
