"""
Audit handler package.

Exports AuditHandler for the hypothesis audit families.
"""
from handlers.audit.handler import AuditHandler

__all__ = ["AuditHandler"]
