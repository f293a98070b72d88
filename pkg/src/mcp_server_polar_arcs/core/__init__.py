"""
Polar arcs core functionality.

Model circle maps, torus maps and their separatrices, arcs of maps, the
arc planner and the saddle-node laboratory.

MCP tool functions follow a consistent naming convention with the polar_
prefix and live in ``tools``.
"""

from .tools import *
