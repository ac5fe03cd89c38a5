"""
Utility libraries for the vexp toolkit.
Pure helpers shared by handlers, CLI and server.
"""
from .common import normalize, to_jsonable, ok, ng
from .types import (
    ErrorDetail,
    AuditDict,
    ThresholdsDict,
    SummaryDict,
)

__all__ = [
    # Summary types
    "ErrorDetail",
    "AuditDict",
    "ThresholdsDict",
    "SummaryDict",
    # Functions
    "normalize",
    "to_jsonable",
    "ok",
    "ng",
]
