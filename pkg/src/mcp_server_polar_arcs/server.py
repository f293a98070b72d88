"""
Polar Arcs MCP Server.

This module provides an MCP server that exposes the polar torus map
toolkit: fixed points, invariant matrices, arc planning and saddle-node
scans. Every tool call is independent; configuration is read from the
environment on each call.
"""

import logging
from mcp.server.fastmcp import FastMCP

# Import utilities
from .utils import setup_resilient_process

# Import core functionality
from .core.tools import (
    # maps and separatrices
    polar_fixed_points_1d,
    polar_fixed_points,
    polar_invariant_matrix,
    polar_trace,
    polar_eval,
    # planner
    polar_canonicalize,
    polar_euclid_decompose,
    polar_plan,
    polar_compose_plans,
    # arcs and events
    polar_list_arcs,
    polar_scan,
    polar_locate_events,
)

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)


def create_server() -> FastMCP:
    """Create the FastMCP server with every polar_ tool registered."""
    mcp = FastMCP(name="polar-arcs")

    # Register map and separatrix functions
    mcp.tool()(polar_fixed_points_1d)
    mcp.tool()(polar_fixed_points)
    mcp.tool()(polar_invariant_matrix)
    mcp.tool()(polar_trace)
    mcp.tool()(polar_eval)

    # Register planner functions
    mcp.tool()(polar_canonicalize)
    mcp.tool()(polar_euclid_decompose)
    mcp.tool()(polar_plan)
    mcp.tool()(polar_compose_plans)

    # Register arc and event functions
    mcp.tool()(polar_list_arcs)
    mcp.tool()(polar_scan)
    mcp.tool()(polar_locate_events)

    return mcp


def main():
    """Start the polar arcs MCP server."""
    logger.info("Polar arcs MCP server initializing")
    mcp = create_server()

    # Handle signals and keep stdio line-buffered
    setup_resilient_process()

    logger.info("Polar arcs MCP server starting...")
    mcp.run()


if __name__ == "__main__":
    main()
