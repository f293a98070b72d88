"""Tests for arc algebra, the blended saddle-node families and the twists."""

import numpy as np
import pytest

from mcp_server_polar_arcs.core.arc_engine import (
    ArcFamily,
    TwistMap,
    blended_slice,
    bump,
    bump_derivative,
    conjugate_arc,
    constant_arc,
    get_arc,
    list_arcs,
    model_arc,
    model_arc_Gamma1,
    model_arc_H,
    model_arc_H01,
    model_arc_H1,
    reverse,
    smooth_product,
    smooth_ramp,
    smooth_step,
    twist_arc,
    twist_calibration,
    twist_calibration_report,
    twist_map,
)
from mcp_server_polar_arcs.core.errors import (
    CompositionError,
    MapSpecError,
    NotInClassGError,
    PreconditionError,
    SupportError,
    UnknownNameError,
)
from mcp_server_polar_arcs.core.model_maps_1d import model_lift
from mcp_server_polar_arcs.core.torus_dynamics import census, fixed_points_2d, invariant_matrix
from mcp_server_polar_arcs.core.unimodular import E, shear


class TestSteps:
    def test_smooth_step_plateaus(self):
        ts = np.array([0.0, 0.2, 1 / 3, 2 / 3, 0.8, 1.0])
        assert smooth_step(ts).tolist() == [0.0, 0.0, 0.0, 1.0, 1.0, 1.0]
        assert smooth_step(0.5) == pytest.approx(0.5, abs=1e-15)

    def test_smooth_ramp(self):
        assert smooth_ramp(0.0, 0.5, 0.25) == pytest.approx(0.5, abs=1e-15)
        assert smooth_ramp(0.5, 1.0, 0.4) == 0.0
        with pytest.raises(PreconditionError):
            smooth_ramp(1.0, 0.5, 0.7)

    def test_bump(self):
        assert bump(0.25) == 0.0
        assert bump(np.array([0.0, 0.125, 0.5, 0.9])).tolist() == [1.0, 1.0, 1.0, 1.0]
        assert bump(1.25) == 0.0
        assert 0.0 < bump(0.2) < 1.0
        assert bump_derivative(0.25) == 0.0


class TestArcAlgebra:
    def test_parameter_range(self, f0):
        arc = constant_arc(f0)
        with pytest.raises(PreconditionError):
            arc(1.5)

    def test_smooth_product(self, assert_same_map):
        a1 = twist_arc(1)
        a2 = reverse(twist_arc(1))
        arc = smooth_product(a1, a2)
        assert_same_map(arc(0.0), a1(0.0))
        assert_same_map(arc(0.1), a1(0.0))
        assert_same_map(arc(0.5), a1(1.0))
        assert_same_map(arc(0.9), a2(1.0))
        assert_same_map(arc(1.0), a2(1.0))
        assert arc.metadata["junction"] == "pointwise"

    def test_smooth_product_mismatch(self):
        with pytest.raises(CompositionError):
            smooth_product(twist_arc(1), twist_arc(1))

    def test_smooth_product_certified_mismatch(self, config):
        with pytest.raises(CompositionError):
            smooth_product(constant_arc(model_arc_H1()(0.0)), conjugate_arc(shear(1), twist_arc(0)), "certified", config)

    def test_unknown_junction(self, f0):
        with pytest.raises(PreconditionError):
            smooth_product(constant_arc(f0), constant_arc(f0), junction="loose")

    def test_reverse_is_an_involution(self, assert_same_map):
        arc = twist_arc(2)
        twice = reverse(reverse(arc))
        for t in (0.0, 0.3, 1.0):
            assert_same_map(twice(t), arc(t))

    def test_reverse_swaps_event_notes(self):
        arc = reverse(model_arc_H1())
        assert arc.events[0].t == pytest.approx(0.25)
        assert arc.events[0].note == "annihilation"

    def test_conjugate_by_identity(self, assert_same_map):
        arc = twist_arc(1)
        for t in (0.0, 0.6):
            assert_same_map(conjugate_arc(E, arc)(t), arc(t))

    def test_conjugate_moves_events(self):
        arc = conjugate_arc(shear(1), model_arc_H1())
        assert arc.events[0].location == pytest.approx((0.25, 0.75))

    def test_product_remaps_events(self):
        arc = smooth_product(model_arc_H1(), constant_arc(model_arc_H1()(1.0)))
        t = arc.events[0].t
        assert 1 / 3 < t < 1 / 2
        assert 2 * smooth_step(t) == pytest.approx(0.75, abs=1e-12)


class TestSaddleNodeFamilies:
    def test_h1_starts_at_f0(self, f0, assert_same_map):
        assert_same_map(model_arc_H1()(0.0), f0)

    def test_h1_saddle_node(self):
        f = model_arc_H1()(0.75)
        p = np.array([0.25, 0.5])
        np.testing.assert_allclose(f.residual(p), [0.0, 0.0], atol=1e-14)
        np.testing.assert_allclose(f.jacobian(p), [[0.5, 0.0], [0.0, 1.0]], atol=1e-12)

    def test_h1_census(self):
        arc = model_arc_H1()
        assert census(fixed_points_2d(arc(0.5)))["count"] == 4
        summary = census(fixed_points_2d(arc(0.9)))
        assert summary["count"] == 6
        assert summary["kinds"]["sink"] == 2
        assert summary["kinds"]["saddle"] == 3
        assert summary["kinds"]["source"] == 1
        assert summary["euler"] == 0

    def test_slices_are_diffeomorphisms(self, random_points):
        for name, t in (("eta1", 0.9), ("eta2", 0.4)):
            det = np.linalg.det(blended_slice(name, t).jacobian(random_points))
            assert np.all(det > 0.0)

    def test_slice_inverse(self, random_points):
        f = blended_slice("eta1", 0.8)
        p, ok = f.inverse_lift(random_points)
        assert np.all(ok)
        np.testing.assert_allclose(f.lift(p), random_points, atol=1e-10)

    def test_not_in_class_g(self, config):
        with pytest.raises(NotInClassGError):
            invariant_matrix(model_arc_H1()(0.9), config)


class TestTwists:
    def test_orbit_total_is_the_amount(self):
        phi0 = model_lift("phi0")
        twist = TwistMap(1.0)
        y = 0.76
        total = 0.0
        for _ in range(80):
            y = phi0(y)
            total += float(twist.profile(y))
        assert y == pytest.approx(1.25, abs=1e-6)
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_profile_vanishes_near_fixed_points(self):
        twist = TwistMap(1.0)
        np.testing.assert_allclose(twist.profile(np.array([0.25, 0.5, 0.75, 1.25])), 0.0, atol=1e-15)

    def test_exact_inverse(self, random_points):
        w = twist_map(0.7)
        p, ok = w.inverse_lift(random_points)
        assert np.all(ok)
        np.testing.assert_allclose(w.lift(p), random_points, atol=1e-14)

    def test_jacobian_is_unimodular(self, random_points):
        for axis in ("x", "z"):
            w = twist_map(0.7, axis)
            np.testing.assert_allclose(np.linalg.det(w.jacobian(random_points)), 1.0, atol=1e-12)
            np.testing.assert_allclose(w.jacobian(random_points), w.fd_jacobian(random_points), atol=1e-4)

    @pytest.mark.parametrize("interval", [(-0.25, -0.1), (0.0, 0.3), (-0.1, -0.099), (-0.1, -0.2)])
    def test_support_checks(self, interval):
        with pytest.raises(SupportError):
            twist_arc(1, interval=interval)

    def test_bad_axis(self):
        with pytest.raises(SupportError):
            TwistMap(1.0, axis="y")

    def test_zero_twist_is_constant(self, f0, assert_same_map):
        arc = twist_arc(0)
        for t in (0.0, 0.5, 1.0):
            assert_same_map(arc(t), f0)

    def test_twist_keeps_fixed_points(self, f0):
        base = fixed_points_2d(f0)
        twisted = fixed_points_2d(twist_arc(1)(1.0))
        assert [p.kind for p in twisted] == [p.kind for p in base]
        for p, q in zip(base, twisted):
            assert q.location == pytest.approx(p.location, abs=1e-10)

    def test_full_twist_adds_a_shear(self, config):
        assert invariant_matrix(twist_arc(1)(1.0), config).matrix == shear(1)


class TestAssembledArcs:
    def test_gamma1_only_changes_bump_and_annulus(self, f0):
        arc = model_arc_Gamma1()
        rng = np.random.default_rng(1)
        p = np.column_stack([rng.uniform(0.4, 0.7, 200), rng.random(200)])
        for t in (0.3, 0.9):
            np.testing.assert_allclose(arc(t).lift(p), f0.lift(p), atol=1e-12)

    def test_gamma1_census(self):
        summary = census(fixed_points_2d(model_arc_Gamma1()(0.9)))
        assert summary["count"] == 6
        assert summary["euler"] == 0

    def test_h01_ends(self, f0, assert_same_map):
        arc = model_arc_H01()
        assert arc.name == "h01"
        assert_same_map(arc(0.0), f0)
        assert len(arc.events) == 2

    def test_h_n_is_conjugated(self, assert_same_map):
        from mcp_server_polar_arcs.core.torus_dynamics import model_fJ

        arc = model_arc_H(2)
        assert arc.name == "h:2"
        assert_same_map(arc(0.0), model_fJ(shear(2)), tol=1e-10)

    @pytest.mark.slow
    def test_h01_ends_at_shear(self, config):
        assert invariant_matrix(model_arc_H01()(1.0), config).matrix == shear(1)

    @pytest.mark.parametrize("name", ["gamma1", "gamma2", "h1", "h2", "h01", "twist", "h:2", "h:-1"])
    def test_slices_preserve_orientation(self, name):
        arc = get_arc(name)
        g = (np.arange(64) + 0.5) / 64
        grid = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
        for t in np.linspace(0.0, 1.0, 9):
            assert float(np.min(np.linalg.det(arc(t).jacobian(grid)))) > 0.0

    def test_calibration_is_recorded(self):
        for arc in (model_arc_Gamma1(), model_arc_H01()):
            report = arc.metadata["twist_calibration"]
            assert report["fallback"] is False
            assert report["d1"] == twist_calibration()
        assert model_arc_Gamma1().to_dict()["metadata"]["twist_calibration"]["target"] == 0.56

    def test_calibration_fallback_is_reported(self):
        # no twist in [0, 0.6] carries the separatrix to height 5
        report = twist_calibration_report(5.0)
        assert report["fallback"] is True
        assert report["d1"] == 0.35
        assert report["reason"]


class TestRegistry:
    def test_list(self):
        names = list_arcs()
        for name in ("gamma1", "gamma2", "h01", "h1", "h2", "twist", "h:<n>", "plan:<a,b,c,d>"):
            assert name in names

    def test_model_arc_unknown(self):
        with pytest.raises(UnknownNameError):
            model_arc("h3")

    def test_get_arc_forms(self):
        assert isinstance(get_arc("h1"), ArcFamily)
        assert get_arc("h:-1").name == "h:-1"
        with pytest.raises(MapSpecError):
            get_arc("nope")

    def test_planned_arc(self, f0, assert_same_map):
        arc = get_arc("plan:1,0,1,1")
        assert arc.provenance == "planned"
        assert arc.name == "plan:1,0,1,1"
        assert_same_map(arc(1.0), f0)
