"""Tests for census scans, saddle-node localization and the noncriticality probe."""

import numpy as np
import pytest

from mcp_server_polar_arcs.core.arc_engine import (
    annihilation_time_estimate,
    constant_arc,
    model_arc_Gamma1,
    model_arc_H1,
    model_arc_H2,
)
from mcp_server_polar_arcs.core.arc_planner import plan, realize
from mcp_server_polar_arcs.core.bifurcation_lab import (
    STEP_CENTER,
    STEP_TIME,
    BifurcationEvent,
    _vanishing_pair,
    census_scan,
    crossing_angles,
    locate_saddle_node,
    noncriticality_probe,
    normal_form_prediction,
    scan_events,
)
from mcp_server_polar_arcs.core.errors import LocalizationError, PreconditionError
from mcp_server_polar_arcs.core.model_maps_1d import fixed_points_1d, interpolate, model_lift
from mcp_server_polar_arcs.core.torus_dynamics import fixed_points_2d, torus_distance
from mcp_server_polar_arcs.core.unimodular import shear


def _event(**overrides):
    values = dict(
        t_star=0.75,
        location=(0.25, 0.5),
        center_multiplier=1.0,
        hyperbolic_multiplier=0.5,
        a=-np.pi,
        b=1.0 / (3.0 * np.pi),
        generic=True,
        center_direction=(0.0, 1.0),
        hyperbolic_direction=(1.0, 0.0),
    )
    values.update(overrides)
    return BifurcationEvent(**values)


class TestCensusScan:
    def test_constant_arc_has_no_jumps(self, f0, config):
        scan = census_scan(constant_arc(f0), 4, config)
        assert [r.count for r in scan.rows] == [4, 4, 4, 4, 4]
        assert scan.jumps == []
        assert not any(r.flagged for r in scan.rows)

    def test_birth_on_gamma1(self, config):
        scan = census_scan(model_arc_Gamma1(), [0.5, 0.7, 0.8, 0.9], config)
        assert [r.count for r in scan.rows] == [4, 4, 6, 6]
        assert scan.jumps == [(1, 2)]
        assert scan.brackets == [(0.7, 0.8)]

    def test_threads_keep_order(self, config):
        ts = [0.5, 0.7, 0.8, 0.9]
        serial = census_scan(model_arc_H1(), ts, config)
        threaded = census_scan(model_arc_H1(), ts, config.with_overrides(threads=4))
        assert [r.count for r in threaded.rows] == [r.count for r in serial.rows]

    @pytest.mark.parametrize("grid", [1, [0.5], [0.3, 0.2], [0.0, 1.5]])
    def test_bad_grid(self, f0, config, grid):
        with pytest.raises(PreconditionError):
            census_scan(constant_arc(f0), grid, config)

    def test_serializes(self, f0, config):
        data = census_scan(constant_arc(f0), 2, config).to_dict()
        assert data["jumps"] == []
        assert data["rows"][0]["count"] == 4


class TestLocalization:
    def test_h1_birth(self, config):
        event = locate_saddle_node(model_arc_H1(), (0.74, 0.76), config=config)
        assert event.t_star == pytest.approx(0.75, abs=1e-8)
        assert event.location == pytest.approx((0.25, 0.5), abs=1e-8)
        assert event.center_multiplier == pytest.approx(1.0, abs=1e-6)
        assert event.hyperbolic_multiplier == pytest.approx(0.5, abs=1e-8)
        assert event.a == pytest.approx(-np.pi, rel=1e-6)
        assert event.b == pytest.approx(1.0 / (3.0 * np.pi), rel=1e-6)
        assert event.generic
        assert event.kind == "birth"
        assert event.noncritical == "unchecked"

    def test_gamma1_birth_with_twist(self, config):
        event = locate_saddle_node(model_arc_Gamma1(), (0.74, 0.76), config=config)
        assert event.t_star == pytest.approx(0.75, abs=1e-8)
        assert event.a == pytest.approx(-np.pi, rel=1e-6)

    def test_bracket_independent(self, config):
        wide = locate_saddle_node(model_arc_H1(), (0.7, 0.8), config=config)
        narrow = locate_saddle_node(model_arc_H1(), (0.749, 0.7505), config=config)
        assert wide.t_star == pytest.approx(narrow.t_star, abs=1e-10)

    def test_root_outside_bracket(self, config):
        with pytest.raises(LocalizationError):
            locate_saddle_node(model_arc_H1(), (0.1, 0.2), seed=(0.25, 0.5), config=config)

    def test_vanishing_pair_seeds_the_birth(self, config):
        seed = _vanishing_pair(model_arc_H1(), (0.7, 0.8), config)
        assert seed == pytest.approx((0.25, 0.5), abs=1e-8)

    def test_neighbouring_events_stay_in_their_brackets(self, config):
        # both events of the realized elementary arc fall within 0.002 of t = 1/2
        arc = realize(plan(shear(1)), config)
        left = locate_saddle_node(arc, (0.498046875, 0.5), config=config)
        right = locate_saddle_node(arc, (0.5, 0.501953125), config=config)
        assert 0.498046875 <= left.t_star <= 0.5 <= right.t_star <= 0.501953125
        assert right.t_star - left.t_star > 1e-4
        assert torus_distance(np.array(left.location), np.array(right.location)) > 0.05
        assert (left.kind, right.kind) == ("birth", "annihilation")
        assert left.generic and right.generic

    def test_root_before_the_bracket_is_not_taken(self, config):
        # the H1 birth at 3/4 is the only root; a bracket just past it must fail, not jump back
        with pytest.raises(LocalizationError):
            locate_saddle_node(model_arc_H1(), (0.76, 0.8), seed=(0.25, 0.5), config=config)

    def test_invalid_bracket(self, config):
        with pytest.raises(PreconditionError):
            locate_saddle_node(model_arc_H1(), (0.8, 0.7), config=config)

    def test_normal_form_prediction(self):
        event = _event()
        assert normal_form_prediction(event, 0.7)["points"] == []
        predicted = normal_form_prediction(event, 0.8)
        u = np.sqrt(0.05 / (3.0 * np.pi**2))
        assert predicted["offsets"] == pytest.approx([-u, u])
        assert predicted["points"][1] == pytest.approx([0.25, 0.5 + u])

    def test_prediction_matches_the_slice(self):
        family = interpolate(model_lift("phi0"), model_lift("g1"))
        roots = [p.location for p in fixed_points_1d(family.slice(0.76)) if 0.4 < p.location < 0.6]
        predicted = normal_form_prediction(_event(), 0.76)["points"]
        assert len(roots) == 2
        for root, point in zip(roots, predicted):
            assert root - 0.5 == pytest.approx(point[1] - 0.5, rel=0.05)


class TestCrossingAngles:
    def test_transversal_curve(self):
        z = np.linspace(0.41, 0.59, 200)
        curve = np.column_stack([np.full_like(z, 0.25), z])
        angles = crossing_angles(curve, (1.0, 0.0), (0.25, 0.5), 0.1)
        assert len(angles) == 15
        np.testing.assert_allclose(angles, np.pi / 2)

    def test_tangential_curve(self):
        x = np.linspace(0.16, 0.34, 200)
        curve = np.column_stack([x, 0.5 + 0.01 * (x - 0.25)])
        angles = crossing_angles(curve, (1.0, 0.0), (0.25, 0.5), 0.1)
        assert len(angles) == 1
        assert angles[0] == pytest.approx(np.arctan(0.01), rel=1e-6)

    def test_curve_on_another_sheet(self):
        z = np.linspace(1.41, 1.59, 50)
        curve = np.column_stack([np.full_like(z, 2.25), z])
        assert len(crossing_angles(curve, (1.0, 0.0), (0.25, 0.5), 0.1)) == 15

    def test_curve_outside_tube(self):
        z = np.linspace(0.41, 0.59, 50)
        curve = np.column_stack([np.full_like(z, 0.5), z])
        assert len(crossing_angles(curve, (1.0, 0.0), (0.25, 0.5), 0.1)) == 0


class TestProbe:
    def test_h1_event_is_noncritical(self, config):
        arc = model_arc_H1()
        event = locate_saddle_node(arc, (0.74, 0.76), config=config)
        result = noncriticality_probe(arc, event, config)
        assert result["noncritical"] is True
        assert result["curves"] == 4
        assert result["min_angle"] == pytest.approx(np.pi / 2, abs=1e-6)

    def test_explicit_other_saddles(self, config):
        arc = model_arc_H1()
        event = locate_saddle_node(arc, (0.74, 0.76), config=config)
        saddles = [p for p in fixed_points_2d(arc(event.t_star), config) if p.kind == "saddle"]
        others = [p for p in saddles if float(torus_distance(p.point, np.array(event.location))) > 1e-3]
        assert len(others) == 2
        explicit = noncriticality_probe(arc, event, config, other_saddles=others)
        assert explicit == noncriticality_probe(arc, event, config)
        assert noncriticality_probe(arc, event, config, other_saddles=[])["curves"] == 0

    def test_scan_events_h1(self, config):
        result = scan_events(model_arc_H1(), [0.5, 0.7, 0.8, 0.9], config)
        assert result["scan"].jumps == [(1, 2)]
        (event,) = result["events"]
        assert event.t_star == pytest.approx(0.75, abs=1e-8)
        assert event.noncritical is True


@pytest.mark.slow
class TestFullScans:
    def test_gamma1(self, config):
        result = scan_events(model_arc_Gamma1(), 512, config, probe=False)
        assert len(result["scan"].jumps) == 1
        (event,) = result["events"]
        assert event.t_star == pytest.approx(0.75, abs=1e-8)
        assert event.generic

    def test_h2_annihilation(self, config):
        result = scan_events(model_arc_H2(), 64, config, probe=False)
        assert len(result["scan"].jumps) == 1
        (event,) = result["events"]
        assert event.kind == "annihilation"
        assert event.generic
        assert event.t_star == pytest.approx(annihilation_time_estimate(), abs=1e-6)

    def test_elementary_arc(self, config):
        result = scan_events(realize(plan(shear(1)), config), 512, config, probe=False)
        assert len(result["scan"].jumps) == 2
        first, second = result["events"]
        assert first.bracket != second.bracket
        for event in (first, second):
            assert event.bracket[0] <= event.t_star <= event.bracket[1]
            assert event.generic
        assert second.t_star - first.t_star > 1e-4
        assert [first.kind, second.kind] == ["birth", "annihilation"]

    def test_t_star_is_stable_under_halving(self, config):
        arc = model_arc_H2()
        estimate = annihilation_time_estimate()
        events = []
        for n in (64, 128):
            lo = np.floor(estimate * n) / n
            events.append(locate_saddle_node(arc, (lo, lo + 1.0 / n), config=config))
        halved_steps = locate_saddle_node(
            arc,
            events[1].bracket,
            config=config.with_overrides(h_d=config.h_d / 2, h_J=config.h_J / 2),
            steps=(STEP_CENTER / 2, STEP_TIME / 2),
        )
        for event in (events[1], halved_steps):
            assert event.t_star == pytest.approx(events[0].t_star, abs=1e-8)
        assert halved_steps.a == pytest.approx(events[1].a, rel=1e-4)
        assert halved_steps.b == pytest.approx(events[1].b, rel=1e-4)
