"""
Audit handler class.

Runs the base, H1 and H2 audit families on the scenario's potential and
resolves the mode. A mode that cannot be resolved is an AUDIT_FAILED error
carrying the full audit report.
"""
from __future__ import annotations

from typing import Any, ClassVar

from core.base_handler import BaseHandler
from lib.errors import AuditFailedError
from numerics.exponent_domain import validate_exponents


class AuditHandler(BaseHandler):
    """Handler for the `audit` scenario."""

    OP: ClassVar[str] = "audit"

    def _execute(self) -> dict[str, Any]:
        validity = validate_exponents(self.p)
        if not validity.admissible:
            self.warnings.append("exponent outside the admissible window: " + ", ".join(validity.violated_clauses))
        thresholds = self.compute_thresholds()
        families = self.run_audits()
        report = families.to_dict()
        if families.required_failed:
            raise AuditFailedError(
                f"hypotheses do not hold for mode {families.requested_mode}: {families.reason}",
                families=report,
                thresholds=thresholds,
            )
        return {
            "potential": self.j.name,
            "validity": validity.to_dict(),
            "thresholds": thresholds,
            "families": report,
        }
