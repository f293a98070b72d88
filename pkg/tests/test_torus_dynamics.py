"""Tests for torus maps, 2-D fixed points, separatrix tracing and invariant matrices."""

import numpy as np
import pytest

from mcp_server_polar_arcs.core.errors import PreconditionError
from mcp_server_polar_arcs.core.torus_dynamics import (
    TorusMap,
    census,
    classify_eigenvalues,
    compose,
    conjugate,
    fixed_points_2d,
    homotopy_type,
    invariant_matrix,
    lift_displacement_matrix,
    model_fJ,
    normalize_type,
    sort_key,
    torus_distance,
    trace_separatrix,
)
from mcp_server_polar_arcs.core.arc_planner import canonicalize
from mcp_server_polar_arcs.core.unimodular import E, UnimodularMatrix, shear


def _saddle(points, location):
    for p in points:
        if p.kind == "saddle" and float(torus_distance(p.point, np.array(location))) < 1e-9:
            return p
    raise AssertionError(f"no saddle at {location}")


class TestMaps:
    def test_f0_lift(self, f0):
        assert f0.lift([0.25, 0.75]).tolist() == pytest.approx([0.25, 0.75], abs=1e-15)
        assert f0([1.25, -0.25]).tolist() == pytest.approx([0.25, 0.75], abs=1e-15)

    def test_jacobian_matches_finite_differences(self, f0, random_points):
        fJ = model_fJ(UnimodularMatrix(2, 1, 1, 1))
        for f in (f0, fJ):
            np.testing.assert_allclose(f.jacobian(random_points), f.fd_jacobian(random_points), atol=1e-6)

    def test_conjugate_by_identity(self, f0, assert_same_map):
        assert_same_map(conjugate(E, f0), f0)

    def test_compose_with_inverse_conjugation(self, f0, assert_same_map):
        J = UnimodularMatrix(2, 1, 1, 1)
        assert_same_map(conjugate(J.inverse(), conjugate(J, f0)), f0, tol=1e-10)

    def test_exact_inverse(self, f0, random_points):
        f = compose(model_fJ(shear(2)), f0)
        p, ok = f.inverse_lift(random_points)
        assert np.all(ok)
        np.testing.assert_allclose(f.lift(p), random_points, atol=1e-10)

    def test_newton_inverse_without_rule(self, f0, random_points):
        plain = TorusMap("plain", f0.lift_rule, f0.jacobian_rule)
        p, ok = plain.inverse_lift(random_points)
        assert np.all(ok)
        np.testing.assert_allclose(plain.lift(p), random_points, atol=1e-10)

    @pytest.mark.parametrize("entries", [(1, 0, 0, 1), (1, 0, 1, 1), (2, 1, 1, 1), (0, 1, 1, 0)])
    def test_lift_displacement_is_identity(self, entries):
        D = lift_displacement_matrix(model_fJ(UnimodularMatrix(*entries)))
        assert D.tolist() == [[1, 0], [0, 1]]

    def test_bad_point_shape(self, f0):
        with pytest.raises(PreconditionError):
            f0.lift(np.zeros(3))


class TestFixedPoints:
    def test_f0_census(self, f0):
        points = fixed_points_2d(f0)
        assert [p.kind for p in points] == ["sink", "saddle", "saddle", "source"]
        expected = [(0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75)]
        for p, loc in zip(points, expected):
            assert p.location == pytest.approx(loc, abs=1e-10)
        assert points[1].real_eigenvalues() == pytest.approx((0.5, 1.5), abs=1e-12)
        summary = census(points)
        assert summary["euler"] == 0
        assert summary["hyperbolic"]

    def test_sort_key_ignores_last_bit_noise(self):
        assert sort_key((0.7500000000000001, 0.2499999999999999)) < sort_key((0.75, 0.75))
        assert sort_key((0.9999999999999999, 0.5)) == (0.0, 0.5)

    def test_shear_moves_sink(self, fJ1):
        points = fixed_points_2d(fJ1)
        sinks = [p for p in points if p.kind == "sink"]
        assert len(sinks) == 1
        assert sinks[0].location == pytest.approx((0.25, 0.5), abs=1e-10)

    @pytest.mark.parametrize("entries", [(1, 0, 1, 1), (2, 1, 1, 1), (3, 2, 1, 1), (1, 0, -2, 1)])
    def test_conjugation_moves_fixed_points_and_keeps_spectra(self, f0, entries):
        J = UnimodularMatrix(*entries)
        A = J.as_array()
        base = fixed_points_2d(f0)
        moved = fixed_points_2d(model_fJ(J))
        assert len(moved) == len(base)
        for p in base:
            image = np.mod(A @ p.point, 1.0)
            match = [q for q in moved if float(torus_distance(q.point, image)) < 1e-9]
            assert len(match) == 1
            assert match[0].kind == p.kind
            assert match[0].real_eigenvalues() == pytest.approx(p.real_eigenvalues(), abs=1e-9)

    def test_conjugation_keeps_spectra_for_random_matrices(self, f0, random_unimodular):
        base = fixed_points_2d(f0)
        for J in random_unimodular(10, 5):
            fJ = model_fJ(J)
            for p in base:
                q = np.mod(J.as_array() @ p.point, 1.0)
                assert float(np.max(np.abs(fJ.residual(q)))) < 1e-12
                moved = np.sort(np.linalg.eigvals(fJ.jacobian(q)).real)
                assert moved == pytest.approx(sorted(p.real_eigenvalues()), abs=1e-9)

    def test_grid_floor(self, f0):
        with pytest.raises(PreconditionError):
            fixed_points_2d(f0, grid_n=32)

    @pytest.mark.parametrize(
        "eigenvalues, kind",
        [
            ((0.5, 0.5), "sink"),
            ((1.5, 2.0), "source"),
            ((0.5, 1.5), "saddle"),
            ((1.0, 0.5), "saddle-node"),
            ((1.0, 1.0), "nonhyperbolic-other"),
            ((complex(0.6, 0.8), complex(0.6, -0.8)), "nonhyperbolic-other"),
        ],
    )
    def test_classification(self, eigenvalues, kind):
        assert classify_eigenvalues(eigenvalues, 1e-6, 1e-6) == kind


class TestSeparatrices:
    def test_unstable_is_vertical(self, f0, config):
        points = fixed_points_2d(f0, config)
        saddle = _saddle(points, (0.25, 0.75))
        sinks = [p for p in points if p.kind == "sink"]
        plus = trace_separatrix(f0, saddle, "unstable", 1, sinks, config)
        minus = trace_separatrix(f0, saddle, "unstable", -1, sinks, config)
        for curve in (plus, minus):
            assert curve.complete
            np.testing.assert_allclose(curve.points[:, 0], 0.25, atol=1e-9)
            assert curve.max_gap() <= config.h_sep
            assert curve.node == pytest.approx((0.25, 0.25), abs=1e-10)
        assert plus.end[1] == pytest.approx(1.25, abs=2e-4)
        assert minus.end[1] == pytest.approx(0.25, abs=2e-4)
        assert homotopy_type(plus, minus).vector == (0, 1)

    def test_stable_is_horizontal(self, f0, config):
        points = fixed_points_2d(f0, config)
        saddle = _saddle(points, (0.25, 0.75))
        sources = [p for p in points if p.kind == "source"]
        plus = trace_separatrix(f0, saddle, "stable", 1, sources, config)
        minus = trace_separatrix(f0, saddle, "stable", -1, sources, config)
        for curve in (plus, minus):
            np.testing.assert_allclose(curve.points[:, 1], 0.75, atol=1e-9)
        assert homotopy_type(plus, minus).vector == (1, 0)

    def test_only_saddles_are_traced(self, f0, config):
        points = fixed_points_2d(f0, config)
        with pytest.raises(PreconditionError):
            trace_separatrix(f0, points[0], "unstable", 1, points, config)

    @pytest.mark.slow
    def test_types_follow_the_conjugating_matrix(self, config, random_unimodular):
        config = config.with_overrides(grid_2d=128)
        for J in random_unimodular(5, 5, seed=3):
            fJ = model_fJ(J)
            A = J.as_array()
            points = fixed_points_2d(fJ, config)
            saddle = _saddle(points, np.mod(A @ np.array([0.25, 0.75]), 1.0))
            sinks = [p for p in points if p.kind == "sink"]
            plus = trace_separatrix(fJ, saddle, "unstable", 1, sinks, config)
            minus = trace_separatrix(fJ, saddle, "unstable", -1, sinks, config)
            # the vertical unstable loop of f0 is carried to the second column of J
            assert homotopy_type(plus, minus) == normalize_type(J.b, J.d)

    def test_normalize_type(self):
        assert normalize_type(-1, 2).vector == (1, -2)
        assert normalize_type(0, -1).vector == (0, 1)


class TestInvariantMatrix:
    def test_f0_is_identity(self, f0, config):
        report = invariant_matrix(f0, config)
        assert report.matrix == E
        assert sorted(report.stable_types) == [[0, 1], [1, 0]]

    def test_shear(self, fJ1, config):
        assert invariant_matrix(fJ1, config).matrix == shear(1)

    @pytest.mark.slow
    @pytest.mark.parametrize("entries", [(2, 1, 1, 1), (3, 2, 1, 1), (1, 0, 5, 1), (1, 0, -2, 1), (2, -3, 1, -1)])
    def test_conjugated_maps(self, config, entries):
        J = UnimodularMatrix(*entries)
        assert invariant_matrix(model_fJ(J), config).matrix == canonicalize(J)
