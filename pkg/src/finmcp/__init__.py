"""Financial-data MCP server and offline benchmark harness."""

__version__ = "0.1.0"
SERVER_NAME = "finmcp"
