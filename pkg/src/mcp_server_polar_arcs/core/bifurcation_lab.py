"""
Saddle-node events along arcs.

This module scans arcs for changes of the fixed-point census, localizes
each saddle-node by solving for (x, z, t) jointly, extracts the normal-form
coefficients of its unfolding, and probes whether the remaining saddle
separatrices cross the strong leaves at the event transversally.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import root

from ..utils import parallel_map
from .arc_engine import ArcFamily
from .config import RunConfig
from .errors import LocalizationError, PolarArcError, PreconditionError
from .torus_dynamics import (
    FixedPoint2D,
    TorusMap,
    census,
    fixed_points_2d,
    torus_distance,
    trace_separatrix,
    wrap_centered,
)

# Configure logging
logger = logging.getLogger(__name__)

STEP_CENTER = 1e-3
STEP_TIME = 1e-5
LOCALIZATION_TOL = 1e-10
# tracing stops this close to the saddle-node; the approach is only parabolic
PROBE_STOP_RADIUS = 1e-2
PROBE_LEAVES = 8
# fixed points on both sides of a bracket closer than this are the same point
PAIR_MATCH_RADIUS = 0.05
# the seed time is kept this fraction of the bracket away from its ends
BRACKET_MARGIN = 1e-3


@dataclass(frozen=True)
class CensusRow:
    t: float
    count: int
    kinds: Dict[str, int]
    flagged: bool = False
    note: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {"t": self.t, "count": self.count, "kinds": dict(self.kinds), "flagged": self.flagged, "note": self.note}


@dataclass(frozen=True)
class CensusScan:
    rows: List[CensusRow]
    jumps: List[Tuple[int, int]]

    @property
    def brackets(self) -> List[Tuple[float, float]]:
        return [(self.rows[i].t, self.rows[j].t) for i, j in self.jumps]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "jumps": [list(j) for j in self.jumps],
            "brackets": [list(b) for b in self.brackets],
        }


@dataclass(frozen=True)
class BifurcationEvent:
    """
    A localized saddle-node.

    ``a`` is half the second derivative of the center displacement and
    ``b`` its t-derivative, both along the center eigenvector.
    """

    t_star: float
    location: Tuple[float, float]
    center_multiplier: float
    hyperbolic_multiplier: float
    a: float
    b: float
    generic: bool
    noncritical: Union[bool, str] = "unchecked"
    center_direction: Tuple[float, float] = (0.0, 1.0)
    hyperbolic_direction: Tuple[float, float] = (1.0, 0.0)
    bracket: Tuple[float, float] = (0.0, 1.0)
    kind: str = "saddle-node"
    min_crossing_angle: Optional[float] = None
    details: Dict[str, Any] = field(default_factory=dict, compare=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "t_star": self.t_star,
            "location": list(self.location),
            "multipliers": [self.center_multiplier, self.hyperbolic_multiplier],
            "a": self.a,
            "b": self.b,
            "generic": self.generic,
            "noncritical": self.noncritical,
            "kind": self.kind,
            "bracket": list(self.bracket),
            "center_direction": list(self.center_direction),
            "min_crossing_angle": self.min_crossing_angle,
        }


def _t_values(t_grid: Union[int, Sequence[float]]) -> np.ndarray:
    if isinstance(t_grid, (int, np.integer)):
        if t_grid < 2:
            raise PreconditionError("t_grid must have at least 2 intervals", {"t_grid": int(t_grid)})
        return np.linspace(0.0, 1.0, int(t_grid) + 1)
    ts = np.asarray(t_grid, dtype=float)
    if ts.ndim != 1 or ts.size < 2 or np.any(np.diff(ts) <= 0) or ts[0] < 0.0 or ts[-1] > 1.0:
        raise PreconditionError("t_grid must be increasing inside [0, 1]")
    return ts


def _census_row(arc: ArcFamily, t: float, config: RunConfig) -> CensusRow:
    try:
        summary = census(fixed_points_2d(arc(t), config))
    except PolarArcError as e:
        logger.warning(f"Census of {arc.name} at t={t:.6f} failed: {e.message}")
        return CensusRow(float(t), -1, {}, True, e.message)
    flagged = summary["euler"] != 0 or not summary["hyperbolic"]
    note = ""
    if flagged:
        note = "nonhyperbolic point" if not summary["hyperbolic"] else f"euler count {summary['euler']}"
    return CensusRow(float(t), summary["count"], summary["kinds"], flagged, note)


def census_scan(
    arc: ArcFamily,
    t_grid: Union[int, Sequence[float], None] = None,
    config: Optional[RunConfig] = None,
) -> CensusScan:
    """
    Fixed-point census of every slice on a t grid.

    Slices with a nonhyperbolic point, a nonzero Euler count or a failed
    census are flagged and skipped; a jump is a change of count between
    consecutive unflagged slices.

    Args:
        arc: Arc to scan
        t_grid: Number of intervals on [0, 1] or explicit sorted t values
        config: Tolerances, grid sizes and thread count

    Returns:
        CensusScan with one row per slice and the jump index pairs
    """
    config = config or RunConfig()
    ts = _t_values(config.t_grid if t_grid is None else t_grid)
    rows = parallel_map(lambda t: _census_row(arc, t, config), list(ts), config.threads)

    jumps: List[Tuple[int, int]] = []
    last = None
    for i, row in enumerate(rows):
        if row.flagged:
            continue
        if last is not None and rows[last].count != row.count:
            jumps.append((last, i))
        last = i
    flagged = sum(1 for r in rows if r.flagged)
    logger.info(f"Scanned {arc.name} on {len(rows)} slices: {len(jumps)} jumps, {flagged} flagged")
    return CensusScan(list(rows), jumps)


# Localization

def _eigen_split(J: np.ndarray) -> Tuple[float, float, np.ndarray, np.ndarray, np.ndarray]:
    """Center and hyperbolic multipliers, right eigenvectors and the center left eigenvector."""
    vals, vecs = np.linalg.eig(J)
    if np.any(np.abs(np.imag(vals)) > 1e-12):
        raise LocalizationError("Saddle-node candidate has complex multipliers", {"eigenvalues": [str(v) for v in vals]})
    vals, vecs = np.real(vals), np.real(vecs)
    c = int(np.argmin(np.abs(vals - 1.0)))
    h = 1 - c
    left = np.linalg.inv(vecs)[c]
    v = vecs[:, c]
    scale = 1.0 if v[np.argmax(np.abs(v))] > 0 else -1.0
    return float(vals[c]), float(vals[h]), scale * v, vecs[:, h] / np.linalg.norm(vecs[:, h]), scale * left


def _vanishing_pair(arc: ArcFamily, bracket: Tuple[float, float], config: RunConfig) -> Optional[np.ndarray]:
    """
    Midpoint of the two fixed points that exist on only one side of the bracket.

    A point is matched when the other side has a point of the same kind
    within PAIR_MATCH_RADIUS. Returns None unless exactly two are unmatched.
    """
    lo, hi = bracket
    sides = [fixed_points_2d(arc(lo), config), fixed_points_2d(arc(hi), config)]
    richer, poorer = (sides[0], sides[1]) if len(sides[0]) > len(sides[1]) else (sides[1], sides[0])
    unmatched = [
        p
        for p in richer
        if not any(q.kind == p.kind and float(torus_distance(p.point, q.point)) <= PAIR_MATCH_RADIUS for q in poorer)
    ]
    if len(unmatched) != 2:
        logger.debug(f"{arc.name}: {len(unmatched)} unmatched fixed points across {bracket}")
        return None
    p, q = unmatched[0].point, unmatched[1].point
    return np.mod(p + 0.5 * wrap_centered(q - p), 1.0)


def _seed_from_arc(arc: ArcFamily, bracket: Tuple[float, float], config: RunConfig) -> Tuple[np.ndarray, float]:
    """
    Seed (p, t) for a bracket: an exact event stub inside it, else the
    vanishing pair, else the nearest stub, else the closest fixed-point pair.
    """
    lo, hi = bracket
    width = hi - lo
    mid = 0.5 * (lo + hi)
    stubs = [s for s in arc.events if s.location is not None]
    inside = sorted((s for s in stubs if lo <= s.t <= hi), key=lambda s: abs(s.t - mid))
    exact = [s for s in inside if not s.approximate]
    if exact:
        return np.array(exact[0].location, dtype=float), exact[0].t

    pair = _vanishing_pair(arc, bracket, config)
    if pair is not None:
        t0 = inside[0].t if inside else mid
        return pair, t0

    near = sorted((s for s in stubs if lo - width <= s.t <= hi + width), key=lambda s: abs(s.t - mid))
    if near:
        return np.array(near[0].location, dtype=float), min(max(near[0].t, lo), hi)

    # closest pair of fixed points on the richer side of the bracket
    sides = [fixed_points_2d(arc(lo), config), fixed_points_2d(arc(hi), config)]
    richer = sides[0] if len(sides[0]) >= len(sides[1]) else sides[1]
    if len(richer) < 2:
        raise LocalizationError(f"No fixed-point pair to seed a saddle-node of {arc.name} in {bracket}")
    best = None
    for i, p in enumerate(richer):
        for q in richer[i + 1 :]:
            d = float(torus_distance(p.point, q.point))
            if best is None or d < best[0]:
                best = (d, p.point, q.point)
    _, p, q = best
    return np.mod(p + 0.5 * wrap_centered(q - p), 1.0), mid


def locate_saddle_node(
    arc: ArcFamily,
    t_bracket: Tuple[float, float],
    seed: Optional[Sequence[float]] = None,
    config: Optional[RunConfig] = None,
    steps: Tuple[float, float] = (STEP_CENTER, STEP_TIME),
) -> BifurcationEvent:
    """
    Solve {f_t(p) = p, det(Df_t(p) - I) = 0} for (p, t) inside a census jump.

    The time is solved for as t = lo + (hi - lo)(1 + tanh u) / 2, so a
    neighbouring saddle-node outside the bracket cannot capture the solve.

    Args:
        arc: Arc with a census jump in ``t_bracket``
        t_bracket: (t_lo, t_hi) from census_scan
        seed: Approximate (x, z). When omitted it is an exact event stub
            inside the bracket, else the midpoint of the pair of fixed points
            present on only one side of it, else the nearest stub
        config: Tolerances
        steps: (h_u, h_t) finite-difference steps for the normal-form coefficients

    Returns:
        BifurcationEvent with multipliers and normal-form coefficients
        (noncritical left as "unchecked")

    Raises:
        LocalizationError: on non-convergence (no root inside the bracket)
            or when the multipliers do not describe a saddle-node
    """
    config = config or RunConfig()
    lo, hi = (float(v) for v in t_bracket)
    if not 0.0 <= lo < hi <= 1.0:
        raise PreconditionError(f"Invalid bracket {t_bracket}")
    if seed is None:
        p0, t0 = _seed_from_arc(arc, (lo, hi), config)
    else:
        p0, t0 = np.asarray(seed, dtype=float), 0.5 * (lo + hi)

    I = np.eye(2)
    width = hi - lo

    # t = lo + width (1 + tanh u) / 2 keeps every trial time inside the bracket
    def time_of(u: float) -> float:
        return lo + 0.5 * width * (1.0 + np.tanh(u))

    frac = min(max((t0 - lo) / width, BRACKET_MARGIN), 1.0 - BRACKET_MARGIN)
    u0 = float(np.arctanh(2.0 * frac - 1.0))

    def equations(v: np.ndarray) -> np.ndarray:
        f = arc(time_of(v[2]))
        p = v[:2]
        r = f.residual(p)
        return np.array([r[0], r[1], np.linalg.det(f.jacobian(p) - I)])

    sol = root(equations, np.array([p0[0], p0[1], u0]), method="hybr", options={"xtol": 1e-14, "maxfev": 100 * config.newton_max_iter})
    residual = float(np.max(np.abs(equations(sol.x))))
    t_star = float(time_of(sol.x[2]))
    if not sol.success and residual > LOCALIZATION_TOL:
        raise LocalizationError(
            f"Saddle-node localization on {arc.name} did not converge: {sol.message}",
            {"bracket": [lo, hi], "residual": residual},
        )
    if residual > LOCALIZATION_TOL:
        raise LocalizationError(f"Saddle-node residual {residual:.2e} too large", {"bracket": [lo, hi]})
    if not lo - 1e-9 <= t_star <= hi + 1e-9:
        raise LocalizationError(
            f"Located t*={t_star:.10f} lies outside the bracket [{lo}, {hi}]",
            {"bracket": [lo, hi], "t_star": t_star},
        )

    p = np.mod(sol.x[:2], 1.0)
    f = arc(t_star)
    center, hyperbolic, v, vh, w = _eigen_split(f.jacobian(p))
    if abs(center - 1.0) > config.tol_sn or abs(hyperbolic - 1.0) <= 10 * config.tol_sn:
        raise LocalizationError(
            f"Multipliers ({center}, {hyperbolic}) at t*={t_star} do not form a saddle-node",
            {"multipliers": [center, hyperbolic]},
        )
    a, b = normal_form_coefficients(arc, t_star, p, v, w, *steps)
    generic = abs(a) > config.tol_coeff and abs(b) > config.tol_coeff
    # fixed points exist where -b (t - t*) / a > 0
    kind = "birth" if -b / a > 0 else "annihilation"
    logger.info(f"Saddle-node of {arc.name} at t*={t_star:.12f}, p=({p[0]:.10f}, {p[1]:.10f}), a={a:.6g}, b={b:.6g}")
    return BifurcationEvent(
        t_star=t_star,
        location=(float(p[0]), float(p[1])),
        center_multiplier=center,
        hyperbolic_multiplier=hyperbolic,
        a=a,
        b=b,
        generic=generic,
        center_direction=(float(v[0]), float(v[1])),
        hyperbolic_direction=(float(vh[0]), float(vh[1])),
        bracket=(lo, hi),
        kind=kind,
        details={"residual": residual, "nfev": int(sol.nfev)},
    )


def normal_form_coefficients(
    arc: ArcFamily,
    t_star: float,
    p: np.ndarray,
    v: np.ndarray,
    w: np.ndarray,
    h_u: float = STEP_CENTER,
    h_t: float = STEP_TIME,
) -> Tuple[float, float]:
    """
    (a, b) of g(u, t) = w . (f_t(p + u v) - p - u v) ~ a u^2 + b (t - t*).

    a uses a five-point stencil in u, b a central difference in t.
    """
    f = arc(t_star)

    def g(u: float) -> float:
        q = p + u * v
        return float(w @ wrap_centered(f.lift(q) - q))

    second = (-g(2 * h_u) + 16 * g(h_u) - 30 * g(0.0) + 16 * g(-h_u) - g(-2 * h_u)) / (12 * h_u**2)
    t_hi, t_lo = min(t_star + h_t, 1.0), max(t_star - h_t, 0.0)

    def gt(t: float) -> float:
        return float(w @ wrap_centered(arc(t).lift(p) - p))

    return 0.5 * second, (gt(t_hi) - gt(t_lo)) / (t_hi - t_lo)


def normal_form_prediction(event: BifurcationEvent, t: float) -> Dict[str, Any]:
    """
    Fixed points predicted near the event at time t: u = +-sqrt(-b (t - t*) / a)
    along the center direction, or none on the other side of t*.
    """
    value = -event.b * (t - event.t_star) / event.a
    if value < 0.0:
        return {"t": t, "offsets": [], "points": []}
    u = float(np.sqrt(value))
    c = np.array(event.location)
    v = np.array(event.center_direction)
    points = [np.mod(c + s * u * v, 1.0).tolist() for s in (-1.0, 1.0)]
    return {"t": t, "offsets": [-u, u], "points": points}


# Noncriticality

def crossing_angles(
    curve: np.ndarray,
    leaf_direction: Sequence[float],
    center: Sequence[float],
    tube_radius: float,
    transverse_direction: Optional[Sequence[float]] = None,
    leaves: int = PROBE_LEAVES,
) -> np.ndarray:
    """
    Angles in [0, pi/2] at which a lifted polyline crosses sampled leaves.

    Leaves are the lines parallel to ``leaf_direction`` through
    center + k (tube_radius / leaves) n, k = -leaves..leaves, where n is the
    transverse direction (the normal by default). Only crossings within
    tube_radius of the center along the leaf count.
    """
    pts = np.asarray(curve, dtype=float).reshape(-1, 2)
    if len(pts) < 2:
        return np.zeros(0)
    l = np.asarray(leaf_direction, dtype=float)
    l = l / np.linalg.norm(l)
    n = np.array([-l[1], l[0]]) if transverse_direction is None else np.asarray(transverse_direction, dtype=float)
    basis_inv = np.linalg.inv(np.column_stack([l, n]))
    c = np.asarray(center, dtype=float)

    a, b = pts[:-1], pts[1:]
    shift = np.round(0.5 * (a + b) - c)
    coords_a = (a - shift - c) @ basis_inv.T
    coords_b = (b - shift - c) @ basis_inv.T
    spacing = tube_radius / leaves
    seg = b - a
    norms = np.linalg.norm(seg, axis=-1)
    cos = np.abs(seg @ l) / np.where(norms > 0, norms, 1.0)
    seg_angle = np.arccos(np.clip(cos, 0.0, 1.0))

    angles: List[float] = []
    for k in range(-leaves, leaves + 1):
        level = k * spacing
        s_a, s_b = coords_a[:, 1] - level, coords_b[:, 1] - level
        hit = (s_a * s_b <= 0.0) & (s_a != s_b) & (norms > 0)
        if not np.any(hit):
            continue
        frac = s_a[hit] / (s_a[hit] - s_b[hit])
        along = coords_a[hit, 0] + frac * (coords_b[hit, 0] - coords_a[hit, 0])
        inside = np.abs(along) <= tube_radius
        angles.extend(seg_angle[hit][inside].tolist())
    return np.array(angles)


def noncriticality_probe(
    arc: ArcFamily,
    event: BifurcationEvent,
    config: Optional[RunConfig] = None,
    points: Optional[List[FixedPoint2D]] = None,
    other_saddles: Optional[Sequence[FixedPoint2D]] = None,
) -> Dict[str, Any]:
    """
    Check that the other saddles' separatrices cross the strong leaves at the
    event transversally.

    ``other_saddles`` defaults to the saddles of f_{t*} (from ``points`` or a
    fresh fixed-point search) farther than 1e-3 from the event location, which
    drops the two Newton copies of the saddle-node itself.

    The leaves in the tube around the saddle-node are taken as lines along
    the hyperbolic eigenvector. With a contracting hyperbolic multiplier the
    unstable separatrices are probed, otherwise the stable ones.

    Returns:
        {"noncritical": True | False | "unchecked", "min_angle", "crossings",
        "curves"}
    """
    config = config or RunConfig()
    f: TorusMap = arc(event.t_star)
    points = points if points is not None else fixed_points_2d(f, config)
    center = np.array(event.location)
    if other_saddles is not None:
        others = list(other_saddles)
    else:
        others = [p for p in points if p.kind == "saddle" and float(torus_distance(p.point, center)) > 1e-3]
    stability = "unstable" if abs(event.hyperbolic_multiplier) < 1.0 else "stable"
    end_kind = "sink" if stability == "unstable" else "source"
    sn_node = FixedPoint2D(event.location, (complex(1.0), complex(event.hyperbolic_multiplier)), "saddle-node")
    nodes = [p for p in points if p.kind == end_kind] + [sn_node]
    probe_config = config.with_overrides(eps_node=max(config.eps_node, PROBE_STOP_RADIUS))

    angles: List[float] = []
    curves = 0
    for saddle in others:
        for branch in (1, -1):
            try:
                curve = trace_separatrix(f, saddle, stability, branch, nodes, probe_config, allow_partial=True)
            except PolarArcError as e:
                logger.warning(f"Probe trace from {saddle.location} failed: {e.message}")
                return {"noncritical": "unchecked", "min_angle": None, "crossings": 0, "curves": curves}
            if not curve.complete:
                return {"noncritical": "unchecked", "min_angle": None, "crossings": len(angles), "curves": curves}
            curves += 1
            angles.extend(
                crossing_angles(
                    curve.points,
                    event.hyperbolic_direction,
                    center,
                    config.tube_radius,
                    transverse_direction=event.center_direction,
                ).tolist()
            )

    if not angles:
        return {"noncritical": True, "min_angle": None, "crossings": 0, "curves": curves}
    min_angle = float(min(angles))
    return {
        "noncritical": bool(min_angle > config.angle_min),
        "min_angle": min_angle,
        "crossings": len(angles),
        "curves": curves,
    }


def scan_events(
    arc: ArcFamily,
    t_grid: Union[int, Sequence[float], None] = None,
    config: Optional[RunConfig] = None,
    probe: bool = True,
) -> Dict[str, Any]:
    """
    Census scan, then localization, coefficients and probe for every jump.

    Returns:
        {"arc": arc summary, "scan": CensusScan, "events": [BifurcationEvent]}
    """
    config = config or RunConfig()
    scan = census_scan(arc, t_grid, config)
    events: List[BifurcationEvent] = []
    for bracket in scan.brackets:
        event = locate_saddle_node(arc, bracket, config=config)
        if probe:
            result = noncriticality_probe(arc, event, config)
            event = replace(event, noncritical=result["noncritical"], min_crossing_angle=result["min_angle"])
        events.append(event)
    return {"arc": arc.to_dict(), "scan": scan, "events": events}
