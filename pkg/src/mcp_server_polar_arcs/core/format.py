"""
Map specifications and result serialization.

This module parses the flat map-spec strings accepted by the CLI and the
MCP tools, and renders command results as JSON or as CSV with full
17-significant-digit floats.
"""

import csv
import io
import json
import logging
import os
import re
from dataclasses import is_dataclass
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from .config import OUTPUT_FORMATS, RunConfig
from .errors import MapSpecError
from .torus_dynamics import TorusMap, model_f0, model_fJ
from .unimodular import UnimodularMatrix

# Configure logging
logger = logging.getLogger(__name__)

MAP_SPEC_HELP = "f0 | fJ:<a,b,c,d> | arc:<id>@<t>"
TRACE_COLUMNS = ("t_step", "x_lift", "z_lift", "x_mod1", "z_mod1")


def parse_map_spec(spec: str, config: Optional[RunConfig] = None) -> TorusMap:
    """
    Build the torus map named by a map spec.

    Args:
        spec: ``f0``, ``fJ:a,b,c,d`` (row-wise matrix) or ``arc:<id>@<t>``
        config: Passed to planned arcs

    Returns:
        TorusMap

    Raises:
        MapSpecError: on a malformed spec
        NonUnimodularError: if the matrix of ``fJ`` has determinant other than +-1
    """
    text = spec.strip()
    if text in ("f0", "F0"):
        return model_f0()
    if text.startswith("fJ:"):
        return model_fJ(UnimodularMatrix.parse(text[3:]))
    match = re.fullmatch(r"arc:(.+)@([-+0-9.eE]+)", text)
    if match:
        from .arc_engine import get_arc

        try:
            t = float(match.group(2))
        except ValueError as e:
            raise MapSpecError(f"Bad arc time in {spec!r}") from e
        if not 0.0 <= t <= 1.0:
            raise MapSpecError(f"Arc time must lie in [0, 1], got {t}")
        return get_arc(match.group(1), config)(t)
    raise MapSpecError(f"Malformed map spec {spec!r}; expected {MAP_SPEC_HELP}", {"spec": spec})


def resolve_output_format(format_str: Optional[str] = None, file_path: Optional[str] = None) -> str:
    """
    Pick json or csv, from the explicit format first, then the file extension.
    """
    if format_str:
        fmt = format_str.lower()
        if fmt not in OUTPUT_FORMATS:
            raise MapSpecError(f"Unknown output format {format_str!r}", {"formats": list(OUTPUT_FORMATS)})
        return fmt
    if file_path:
        _, ext = os.path.splitext(file_path)
        if ext[1:].lower() in OUTPUT_FORMATS:
            return ext[1:].lower()
    return "json"


def to_jsonable(value: Any) -> Any:
    """Convert results (dataclasses with to_dict, numpy values, complex) to plain JSON types."""
    if hasattr(value, "to_dict") and (is_dataclass(value) or callable(getattr(value, "to_dict"))):
        return to_jsonable(value.to_dict())
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, complex):
        return [value.real, value.imag] if value.imag else value.real
    return value


def dumps_json(payload: Any) -> str:
    return json.dumps(to_jsonable(payload), indent=2)


def format_float(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(rows: Iterable[Sequence[Any]], columns: Sequence[str], comments: Sequence[str] = ()) -> str:
    """CSV text with optional ``#`` comment lines before the header."""
    buffer = io.StringIO()
    for line in comments:
        buffer.write(f"# {line}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_float(v) for v in row])
    return buffer.getvalue()


def fixed_points_csv(points: List[Dict[str, Any]]) -> str:
    rows = []
    for i, p in enumerate(points):
        eig = [e if not isinstance(e, list) else complex(*e) for e in p["eigenvalues"]]
        rows.append([i, p["location"][0], p["location"][1], p["kind"], *[np.real(e) for e in eig], *[np.imag(e) for e in eig]])
    return write_csv(rows, ("index", "x", "z", "kind", "eig1_re", "eig2_re", "eig1_im", "eig2_im"))


def trace_csv(points: np.ndarray, homotopy: Optional[Sequence[int]], metadata: Dict[str, Any]) -> str:
    """Polyline on the lift with its mod-1 reduction; the homotopy type goes in the header."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    reduced = np.mod(pts, 1.0)
    comments = [f"homotopy_type: {'none' if homotopy is None else ','.join(str(int(v)) for v in homotopy)}"]
    comments += [f"{key}: {value}" for key, value in metadata.items()]
    rows = [[i, pts[i, 0], pts[i, 1], reduced[i, 0], reduced[i, 1]] for i in range(len(pts))]
    return write_csv(rows, TRACE_COLUMNS, comments)


def scan_csv(rows: List[Dict[str, Any]]) -> str:
    kinds = ("sink", "source", "saddle", "saddle-node", "nonhyperbolic-other")
    out = [[r["t"], r["count"], r["flagged"], *[r["kinds"].get(k, 0) for k in kinds]] for r in rows]
    return write_csv(out, ("t", "count", "flagged", *kinds))


def events_csv(events: List[Dict[str, Any]]) -> str:
    rows = [
        [e["t_star"], *e["location"], *e["multipliers"], e["a"], e["b"], e["generic"], e["noncritical"], e["kind"]]
        for e in events
    ]
    return write_csv(rows, ("t_star", "x", "z", "center_multiplier", "hyperbolic_multiplier", "a", "b", "generic", "noncritical", "kind"))


def plan_csv(payload: Dict[str, Any]) -> str:
    rows = [
        [i, *seg["conjugator"], seg["reversed"], seg["sn_count"], *seg["renormalize"]]
        for i, seg in enumerate(payload["segments"])
    ]
    comments = [f"case: {payload['case']}", f"total_sn: {payload['total_sn']}", f"start: {payload['start']}"]
    return write_csv(rows, ("index", "c_a", "c_b", "c_c", "c_d", "reversed", "sn_count", "r_a", "r_b", "r_c", "r_d"), comments)


def matrix_csv(payload: Dict[str, Any]) -> str:
    rows = [["matrix", *np.ravel(payload["matrix"]), payload["det"]], ["raw", *np.ravel(payload["raw"]), None]]
    return write_csv(rows, ("kind", "a", "b", "c", "d", "det"))


def eval_csv(inputs: np.ndarray, images: np.ndarray) -> str:
    rows = [[*p, *q] for p, q in zip(np.asarray(inputs).reshape(-1, 2), np.asarray(images).reshape(-1, 2))]
    return write_csv(rows, ("x", "z", "fx", "fz"))
