"""
Type definitions for the vexp toolkit.
Typed layouts of audits and artifact summaries.
"""
from typing import Any, TypedDict


class ErrorDetail(TypedDict):
    """Error detail structure."""
    code: str
    message: str


class AuditDict(TypedDict):
    """Serialized HypothesisAudit."""
    hypothesis: str
    verdict: str
    witnesses: list[dict[str, Any]]
    parameters: dict[str, Any]
    notes: list[str]


class ThresholdsDict(TypedDict, total=False):
    """lambda thresholds embedded in every summary."""
    lambda_star: float
    tilde_p: float
    lambda_threshold_H1: float
    lambda_threshold_geometry: float


class SummaryDict(TypedDict):
    """Top-level layout of summary.json."""
    schema_version: int
    command: str
    seed: int
    ok: bool
    exit_code: int
    error: ErrorDetail | None
    thresholds: ThresholdsDict
    audits: list[AuditDict]
    warnings: list[str]
    scenario: dict[str, Any]
    data: dict[str, Any]
