"""
lambda_* handler class.

Estimates lambda_* = inf int |grad u|^p / int |u|^p on the scenario grid and
reports the two lambda thresholds derived from it.
"""
from __future__ import annotations

from typing import Any, ClassVar

from core.base_handler import BaseHandler
from numerics.discrete_operator import estimate_poincare, first_eigenvector
from numerics.exponent_domain import validate_exponents


class LambdaStarHandler(BaseHandler):
    """Handler for the `lambda-star` scenario."""

    OP: ClassVar[str] = "lambda-star"

    def _execute(self) -> dict[str, Any]:
        thresholds = self.compute_thresholds()
        search = self.lambda_star()
        eig, _ = first_eigenvector(self.grid)
        data: dict[str, Any] = {
            **thresholds,
            "search": search.to_dict(),
            "linear_eigenvalue": eig,
            "validity": validate_exponents(self.p).to_dict(),
        }
        if self.config.solver.poincare:
            data["poincare"] = estimate_poincare(self.p, restarts=self.config.solver.restarts, seed=self.seed)
        return data
