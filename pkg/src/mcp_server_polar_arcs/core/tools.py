"""
Command payloads and MCP tool functions.

The ``*_payload`` builders run one operation and return a JSON-friendly
dictionary, raising PolarArcError subclasses on failure; the command line
maps those to exit codes. The ``polar_`` functions wrap the builders for
the MCP server, converting failures to ValueError with a logged message.
"""

import logging
from typing import Any, Dict, List, Optional

import numpy as np

from .arc_engine import get_arc, list_arcs
from .arc_planner import canonicalize, compose_plans, euclid_decompose, plan
from .bifurcation_lab import locate_saddle_node, noncriticality_probe, scan_events
from .config import RunConfig, load_config
from .errors import PreconditionError
from .format import parse_map_spec, to_jsonable
from .model_maps_1d import check_lift, fixed_points_1d, model_lift
from .torus_dynamics import (
    census,
    fixed_points_2d,
    homotopy_type,
    invariant_matrix,
    lift_displacement_matrix,
    trace_separatrix,
)
from .unimodular import UnimodularMatrix

# Configure logging
logger = logging.getLogger(__name__)


def _matrix(entries: Any) -> UnimodularMatrix:
    if isinstance(entries, str):
        return UnimodularMatrix.parse(entries)
    return UnimodularMatrix.from_entries(list(entries))


# Payload builders

def fixed_points_1d_payload(lift_name: str, config: RunConfig) -> Dict[str, Any]:
    f = model_lift(lift_name)
    points = fixed_points_1d(f, config.grid_n, config.tol, config.tol_hyp, config.tol_touch)
    return {"lift": f.name, "check": check_lift(f), "fixed_points": to_jsonable(points)}


def fixed_points_payload(map_spec: str, config: RunConfig) -> Dict[str, Any]:
    f = parse_map_spec(map_spec, config)
    points = fixed_points_2d(f, config)
    return {"map": map_spec, "fixed_points": to_jsonable(points), "census": census(points)}


def invariant_matrix_payload(map_spec: str, config: RunConfig) -> Dict[str, Any]:
    f = parse_map_spec(map_spec, config)
    report = invariant_matrix(f, config)
    payload = report.to_dict()
    payload["map"] = map_spec
    payload["displacement"] = lift_displacement_matrix(f).tolist()
    return to_jsonable(payload)


def plan_payload(entries: Any) -> Dict[str, Any]:
    return plan(_matrix(entries)).to_dict()


def compose_plans_payload(from_entries: Any, to_entries: Any) -> Dict[str, Any]:
    return compose_plans(_matrix(from_entries), _matrix(to_entries)).to_dict()


def scan_payload(arc_id: str, config: RunConfig, t_grid: Optional[int] = None, probe: bool = True) -> Dict[str, Any]:
    arc = get_arc(arc_id, config)
    result = scan_events(arc, t_grid, config, probe=probe)
    return to_jsonable(
        {
            "arc": result["arc"],
            "rows": result["scan"].to_dict()["rows"],
            "jumps": result["scan"].to_dict()["brackets"],
            "events": result["events"],
        }
    )


def locate_payload(
    arc_id: str,
    t_lo: float,
    t_hi: float,
    config: RunConfig,
    seed: Optional[List[float]] = None,
    probe: bool = True,
) -> Dict[str, Any]:
    arc = get_arc(arc_id, config)
    event = locate_saddle_node(arc, (t_lo, t_hi), seed, config)
    payload = {"arc": arc.name, "event": event.to_dict()}
    if probe:
        payload["probe"] = noncriticality_probe(arc, event, config)
    return to_jsonable(payload)


def trace_payload(map_spec: str, saddle: int, stability: str, branch: int, config: RunConfig) -> Dict[str, Any]:
    """
    Trace both branches of one separatrix pair; ``saddle`` is 1-based in
    the sorted saddle list.
    """
    f = parse_map_spec(map_spec, config)
    points = fixed_points_2d(f, config)
    saddles = [p for p in points if p.kind == "saddle"]
    if not 1 <= saddle <= len(saddles):
        raise PreconditionError(f"Saddle index {saddle} out of range 1..{len(saddles)}", {"saddles": len(saddles)})
    if branch not in (1, -1):
        raise PreconditionError("branch must be +1 or -1")
    s = saddles[saddle - 1]
    nodes = [p for p in points if p.kind == ("sink" if stability == "unstable" else "source")]
    curves = {b: trace_separatrix(f, s, stability, b, nodes, config) for b in (1, -1)}
    loop = homotopy_type(curves[1], curves[-1])
    chosen = curves[branch]
    return {
        "map": map_spec,
        "saddle": list(s.location),
        "stability": stability,
        "branch": branch,
        "homotopy_type": loop.to_list(),
        "node": list(chosen.node) if chosen.node is not None else None,
        "points": chosen.points,
    }


def eval_payload(map_spec: str, points: List[List[float]], config: RunConfig) -> Dict[str, Any]:
    f = parse_map_spec(map_spec, config)
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    return to_jsonable({"map": map_spec, "points": p, "lift": f.lift(p), "images": f(p), "jacobians": f.jacobian(p)})


# MCP tools

def polar_fixed_points_1d(lift_name: str = "phi0") -> Dict[str, Any]:
    """
    Find the fixed points of a model circle-map lift.

    Args:
        lift_name: One of phi0, phi1, phi2, g1, g2

    Returns:
        Dictionary with the lift check and the fixed points
    """
    try:
        return fixed_points_1d_payload(lift_name, load_config())
    except Exception as e:
        logger.error(f"Error finding 1-D fixed points: {e}")
        raise ValueError(f"Failed to find 1-D fixed points: {e}")


def polar_fixed_points(map_spec: str = "f0") -> Dict[str, Any]:
    """
    Find and classify the fixed points of a torus map.

    Args:
        map_spec: f0, fJ:a,b,c,d or arc:<id>@<t>

    Returns:
        Dictionary with the fixed points and their census
    """
    try:
        return fixed_points_payload(map_spec, load_config())
    except Exception as e:
        logger.error(f"Error finding fixed points of {map_spec}: {e}")
        raise ValueError(f"Failed to find fixed points: {e}")


def polar_invariant_matrix(map_spec: str = "f0") -> Dict[str, Any]:
    """
    Measure the invariant matrix of a polar torus map from its separatrices.

    Args:
        map_spec: f0, fJ:a,b,c,d or arc:<id>@<t>

    Returns:
        Dictionary with the canonical and raw matrices and the homotopy types
    """
    try:
        return invariant_matrix_payload(map_spec, load_config())
    except Exception as e:
        logger.error(f"Error measuring invariant matrix of {map_spec}: {e}")
        raise ValueError(f"Failed to measure invariant matrix: {e}")


def polar_canonicalize(entries: List[int]) -> Dict[str, Any]:
    """
    Bring a unimodular matrix to its normal form.

    Args:
        entries: Row-wise entries [a, b, c, d]

    Returns:
        Dictionary with the input and the canonical matrix
    """
    try:
        J = _matrix(entries)
        return {"input": list(J.entries), "canonical": list(canonicalize(J).entries)}
    except Exception as e:
        logger.error(f"Error canonicalizing {entries}: {e}")
        raise ValueError(f"Failed to canonicalize matrix: {e}")


def polar_euclid_decompose(entries: List[int]) -> Dict[str, Any]:
    """
    Euclid ladder of a canonical matrix with mu1 > mu2 > 0.

    Args:
        entries: Row-wise entries [a, b, c, d]

    Returns:
        Dictionary with the quotients and the ladder matrices
    """
    try:
        return euclid_decompose(canonicalize(_matrix(entries))).to_dict()
    except Exception as e:
        logger.error(f"Error decomposing {entries}: {e}")
        raise ValueError(f"Failed to decompose matrix: {e}")


def polar_plan(entries: List[int]) -> Dict[str, Any]:
    """
    Plan the chain of elementary arcs from f_J to f_0.

    Args:
        entries: Row-wise entries [a, b, c, d] of J

    Returns:
        Serialized ArcPlan with segments and total saddle-node count
    """
    try:
        return plan_payload(entries)
    except Exception as e:
        logger.error(f"Error planning {entries}: {e}")
        raise ValueError(f"Failed to plan arc: {e}")


def polar_compose_plans(from_entries: List[int], to_entries: List[int]) -> Dict[str, Any]:
    """
    Plan f_{J_from} -> f_0 -> f_{J_to}.

    Args:
        from_entries: Invariant matrix at the start
        to_entries: Invariant matrix at the end

    Returns:
        Serialized composed ArcPlan
    """
    try:
        return compose_plans_payload(from_entries, to_entries)
    except Exception as e:
        logger.error(f"Error composing plans {from_entries} -> {to_entries}: {e}")
        raise ValueError(f"Failed to compose plans: {e}")


def polar_scan(arc_id: str, t_grid: int = 512, probe: bool = True) -> Dict[str, Any]:
    """
    Scan an arc for saddle-node events.

    Args:
        arc_id: gamma1, h1, h2, gamma2, h01, twist, h:<n> or plan:<a,b,c,d>
        t_grid: Number of t intervals
        probe: Run the noncriticality probe on each event

    Returns:
        Dictionary with census rows, jump brackets and located events
    """
    try:
        return scan_payload(arc_id, load_config(), t_grid, probe)
    except Exception as e:
        logger.error(f"Error scanning {arc_id}: {e}")
        raise ValueError(f"Failed to scan arc: {e}")


def polar_locate_events(
    arc_id: str,
    t_lo: float,
    t_hi: float,
    seed_x: Optional[float] = None,
    seed_z: Optional[float] = None,
) -> Dict[str, Any]:
    """
    Localize one saddle-node inside a census bracket.

    Args:
        arc_id: Arc id
        t_lo: Lower end of the bracket
        t_hi: Upper end of the bracket
        seed_x: Optional seed x
        seed_z: Optional seed z

    Returns:
        Dictionary with the event and the probe result
    """
    try:
        seed = [seed_x, seed_z] if seed_x is not None and seed_z is not None else None
        return locate_payload(arc_id, t_lo, t_hi, load_config(), seed)
    except Exception as e:
        logger.error(f"Error locating saddle-node on {arc_id}: {e}")
        raise ValueError(f"Failed to locate saddle-node: {e}")


def polar_trace(map_spec: str, saddle: int = 1, stability: str = "unstable", branch: int = 1) -> Dict[str, Any]:
    """
    Trace a separatrix of a saddle.

    Args:
        map_spec: f0, fJ:a,b,c,d or arc:<id>@<t>
        saddle: 1-based index in the sorted saddle list
        stability: stable or unstable
        branch: +1 or -1

    Returns:
        Dictionary with the polyline and the homotopy type of the closed loop
    """
    try:
        return to_jsonable(trace_payload(map_spec, saddle, stability, branch, load_config()))
    except Exception as e:
        logger.error(f"Error tracing separatrix of {map_spec}: {e}")
        raise ValueError(f"Failed to trace separatrix: {e}")


def polar_eval(map_spec: str, points: List[List[float]]) -> Dict[str, Any]:
    """
    Evaluate a torus map and its Jacobian.

    Args:
        map_spec: f0, fJ:a,b,c,d or arc:<id>@<t>
        points: List of [x, z] pairs

    Returns:
        Dictionary with lifts, images mod 1 and Jacobians
    """
    try:
        return eval_payload(map_spec, points, load_config())
    except Exception as e:
        logger.error(f"Error evaluating {map_spec}: {e}")
        raise ValueError(f"Failed to evaluate map: {e}")


def polar_list_arcs() -> Dict[str, Any]:
    """
    List the arc ids accepted by scans and map specs.

    Returns:
        Dictionary with the arc ids
    """
    return {"arcs": list_arcs()}
