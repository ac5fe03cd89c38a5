"""
Base handler class for scenario operations.

Provides common functionality for all handlers:
- Problem loading (grid, exponent, potential, energy model) with error handling
- lambda_* thresholds and their warnings
- Audit families with the scenario's settings
- Response helper (ok)
"""
from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from typing import Any, ClassVar

from config import DEFAULT_SEED
from lib.common import ok, to_jsonable
from lib.errors import NotConvergedError, VexpError, from_exception, internal_error
from lib.scenario_config import ScenarioConfig
from lib.types import ThresholdsDict
from numerics.discrete_operator import SearchResult, lambda_star_search
from numerics.energy import EnergyModel
from numerics.exponent_domain import ExponentField, Grid, GridFunction, build_grid, tilde_p
from numerics.potential import (
    AuditFamilies,
    AuditSettings,
    PiecewisePotential,
    build_potential,
    run_audit_families,
)

logger = logging.getLogger(__name__)


class BaseHandler(ABC):
    """
    Abstract base class for scenario handlers.

    Subclasses must define:
    - OP: operation name used in envelopes and summaries
    - _execute(): the scenario body, returning the `data` dict

    Example:
        class NormsHandler(BaseHandler):
            OP = "norms"

            def _execute(self) -> dict[str, Any]:
                u = self.function(self.config.problem.function)
                return {"bundle": norm_bundle(u, self.p).to_dict()}
    """

    OP: ClassVar[str] = ""

    def __init__(self, config: ScenarioConfig) -> None:
        """
        Initialize handler with a validated scenario.

        Args:
            config: Parsed ScenarioConfig
        """
        self.config = config

        # Lazily loaded
        self._grid: Grid | None = None
        self._p: ExponentField | None = None
        self._j: PiecewisePotential | None = None
        self._model: EnergyModel | None = None
        self._lambda_star: SearchResult | None = None

        # Collected while running
        self.warnings: list[str] = []
        self.thresholds: ThresholdsDict = {}
        self.audits: list[dict[str, Any]] = []

    # === Properties ===

    @property
    def grid(self) -> Grid:
        if self._grid is None:
            g = self.config.grid
            self._grid = build_grid(g.dimension, g.bounds, g.nodes)
        return self._grid

    @property
    def p(self) -> ExponentField:
        if self._p is None:
            self._p = ExponentField.from_preset(self.grid, self.config.exponent)
        return self._p

    @property
    def j(self) -> PiecewisePotential:
        if self._j is None:
            self._j = build_potential(self.config.potential, self.config.potential_params, self.p)
        return self._j

    @property
    def model(self) -> EnergyModel:
        if self._model is None:
            self._model = EnergyModel(self.grid, self.p, self.config.problem.lam, self.j)
        return self._model

    @property
    def seed(self) -> int:
        seed = self.config.solver.seed
        return DEFAULT_SEED if seed is None else seed

    # === Problem Loading ===

    def load_problem(self, op_name: str) -> dict | None:
        """
        Build grid, exponent, potential and model.

        Args:
            op_name: Operation name for error messages

        Returns:
            Error dict if failed, None on success.
        """
        try:
            _ = self.model
        except VexpError as e:
            return from_exception(op_name, e)
        return None

    def function(self, preset: str) -> GridFunction:
        """Grid function from a preset string on the scenario grid."""
        return GridFunction.from_preset(self.grid, preset)

    # === Thresholds ===

    def lambda_star(self) -> SearchResult:
        """Run (once) the lambda_* search; a capped search still yields its best value."""
        if self._lambda_star is None:
            try:
                self._lambda_star = lambda_star_search(self.p, restarts=self.config.solver.restarts, seed=self.seed)
            except NotConvergedError as e:
                self.warnings.append(f"lambda_* search did not converge; using best value {e.best.value:.6g}")
                self._lambda_star = e.best
        return self._lambda_star

    def compute_thresholds(self) -> ThresholdsDict:
        """lambda_*, tilde_p and the two lambda thresholds; warns when lambda exceeds them."""
        lam_star = self.lambda_star().value
        tp = tilde_p(self.p)
        self.thresholds = {
            "lambda_star": lam_star,
            "tilde_p": tp,
            "lambda_threshold_H1": tp * lam_star,
            "lambda_threshold_geometry": self.p.p_minus / self.p.p_plus * lam_star,
        }
        lam = self.config.problem.lam
        if lam >= self.thresholds["lambda_threshold_H1"]:
            self.warnings.append(
                f"lambda={lam:g} is not below tilde_p*lambda_*={self.thresholds['lambda_threshold_H1']:.6g}"
            )
        if lam >= self.thresholds["lambda_threshold_geometry"]:
            self.warnings.append(
                f"lambda={lam:g} is not below (p-/p+)*lambda_*={self.thresholds['lambda_threshold_geometry']:.6g}"
            )
        for w in self.warnings:
            logger.warning(w)
        return self.thresholds

    # === Audits ===

    def audit_settings(self) -> AuditSettings:
        a = self.config.audit
        return AuditSettings(
            mu_claim=a.mu_claim,
            tang_c=a.tang_c,
            nu=a.nu,
            M=a.M,
            growth_t_max=a.growth_t_max,
            superlinear_t_max=a.superlinear_t_max,
            tang_t_range=a.tang_t_range,
            tol=self.config.tolerances.audit,
        )

    def u_bar(self) -> GridFunction | None:
        preset = self.config.problem.u_bar
        return None if preset is None else self.function(preset)

    def run_audits(self) -> AuditFamilies:
        families = run_audit_families(
            self.j,
            self.p,
            self.config.problem.lam,
            settings=self.audit_settings(),
            u_bar=self.u_bar(),
            mode=self.config.problem.mode,
        )
        self.audits = [a.to_dict() for a in families.all_audits]
        return families

    # === Execution ===

    @abstractmethod
    def _execute(self) -> dict[str, Any]:
        """Scenario body; raise VexpError subclasses on failure."""

    def run(self) -> dict[str, Any]:
        """
        Load the problem and run the scenario.

        Returns:
            Success envelope with the scenario data, or an error envelope
            whose code maps to the process exit code.
        """
        error = self.load_problem(self.OP)
        if error:
            return error
        try:
            data = self._execute()
        except VexpError as e:
            logger.warning("%s failed: %s", self.OP, e.message)
            return from_exception(self.OP, e)
        except Exception as e:  # pragma: no cover - reported, not expected
            logger.exception("%s crashed", self.OP)
            return internal_error(self.OP, f"{type(e).__name__}: {e}")
        return self._ok(self.OP, to_jsonable(data))

    # === Response Helpers ===

    def _ok(self, op: str, data: dict[str, Any] | None = None) -> dict[str, Any]:
        """
        Return success response.

        Args:
            op: Operation name
            data: Response data

        Returns:
            Success response dict
        """
        return ok(op, data or {})
