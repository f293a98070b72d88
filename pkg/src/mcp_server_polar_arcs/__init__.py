"""
Polar arcs MCP server.
Polar gradient-like torus maps, their invariant matrices and the arcs of
saddle-node bifurcations joining them, exposed via MCP and a command line.
"""

__version__ = "0.1.0"

# Import and re-export core functionality
from mcp_server_polar_arcs.core.model_maps_1d import (
    LiftMap,
    fixed_points_1d,
    model_lift,
    sigmoid,
)

from mcp_server_polar_arcs.core.torus_dynamics import (
    TorusMap,
    conjugate,
    fixed_points_2d,
    invariant_matrix,
    model_f0,
    model_fJ,
    trace_separatrix,
)

from mcp_server_polar_arcs.core.arc_engine import (
    ArcFamily,
    get_arc,
    model_arc_H01,
    smooth_product,
    twist_arc,
)

from mcp_server_polar_arcs.core.arc_planner import (
    ArcPlan,
    canonicalize,
    plan,
    realize,
)

from mcp_server_polar_arcs.core.bifurcation_lab import (
    BifurcationEvent,
    census_scan,
    locate_saddle_node,
    scan_events,
)

from mcp_server_polar_arcs.core.config import RunConfig, load_config
from mcp_server_polar_arcs.core.unimodular import UnimodularMatrix

# Re-export server functions
from mcp_server_polar_arcs.server import main

__all__ = [
    # 1-D model maps
    "LiftMap",
    "fixed_points_1d",
    "model_lift",
    "sigmoid",

    # Torus maps
    "TorusMap",
    "conjugate",
    "fixed_points_2d",
    "invariant_matrix",
    "model_f0",
    "model_fJ",
    "trace_separatrix",

    # Arcs
    "ArcFamily",
    "get_arc",
    "model_arc_H01",
    "smooth_product",
    "twist_arc",

    # Planner
    "ArcPlan",
    "UnimodularMatrix",
    "canonicalize",
    "plan",
    "realize",

    # Bifurcations
    "BifurcationEvent",
    "census_scan",
    "locate_saddle_node",
    "scan_events",

    # Configuration
    "RunConfig",
    "load_config",

    # Server function
    "main"
]
