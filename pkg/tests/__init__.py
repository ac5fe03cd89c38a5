# Tests package for MCP server
