"""
Main entry point for the polar arcs MCP server.
"""

import logging
import sys
import os

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)


def main():
    """Run the server, falling back to a minimal one if startup fails."""
    logger.info("Starting polar arcs MCP server")
    logger.info(f"Python version: {sys.version}")
    logger.info(f"Current directory: {os.getcwd()}")
    logger.info(f"Module path: {__file__}")

    try:
        from mcp_server_polar_arcs.server import main as server_main

        logger.info("Calling main()")
        server_main()
    except Exception as e:
        logger.error(f"Error starting server: {e}", exc_info=True)
        # Keep the process alive for the MCP client with a minimal server
        from mcp.server.fastmcp import FastMCP

        from mcp_server_polar_arcs.utils import setup_resilient_process

        setup_resilient_process()

        logger.info("Starting minimal MCP server after error")
        minimal_mcp = FastMCP(name="polar-arcs-minimal")
        minimal_mcp.run()


if __name__ == "__main__":
    main()
