"""
Scenario handlers shared by the CLI and the MCP server.

Each module provides a handler class running one scenario command on a
parsed ScenarioConfig.
"""
from handlers.audit import AuditHandler
from handlers.lambda_star import LambdaStarHandler
from handlers.norms import NormsHandler
from handlers.solve import SolveHandler

HANDLERS = {
    "norms": NormsHandler,
    "audit": AuditHandler,
    "lambda-star": LambdaStarHandler,
    "solve": SolveHandler,
}

__all__ = [
    "AuditHandler",
    "LambdaStarHandler",
    "NormsHandler",
    "SolveHandler",
    "HANDLERS",
]
