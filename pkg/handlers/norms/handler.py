"""
Norms handler class.

Reports modulars, Luxemburg norms and the norm/modular relations for the
scenario's function, plus the Hoelder pairing against a seeded partner.
"""
from __future__ import annotations

from typing import Any, ClassVar

from core.base_handler import BaseHandler
from numerics.discrete_operator import estimate_poincare
from numerics.exponent_domain import critical_exponent, validate_exponents
from numerics.modular_spaces import (
    gradient_full_modular,
    holder_pairing,
    lemma_checks,
    luxemburg_norm,
    modular,
    norm_bundle,
    norm_equivalence,
    sequence_check,
)

# scales for the shrinking / growing sequence shadows
SHRINK_SCALES: tuple[float, ...] = tuple(10.0**-k for k in range(0, 13, 3))
GROW_SCALES: tuple[float, ...] = tuple(10.0**k for k in range(0, 13, 3))


class NormsHandler(BaseHandler):
    """Handler for the `norms` scenario."""

    OP: ClassVar[str] = "norms"

    def _execute(self) -> dict[str, Any]:
        p = self.p
        u = self.function(self.config.problem.function)
        tol = self.config.tolerances.lemma
        validity = validate_exponents(p)
        if not validity.admissible:
            self.warnings.append("exponent outside the admissible window: " + ", ".join(validity.violated_clauses))

        partner = self.function(f"random({self.seed})")
        lhs, rhs = holder_pairing(u, partner, p)

        data: dict[str, Any] = {
            "function": self.config.problem.function,
            "validity": validity.to_dict(),
            "norms": norm_bundle(u, p).to_dict(),
            "gradient_full_modular": gradient_full_modular(u, p),
            "equivalence": norm_equivalence(u, p),
            "lemmas": lemma_checks(u, p, tol=tol),
            "holder": {"lhs": lhs, "rhs": rhs, "holds": lhs <= rhs * (1.0 + tol) + tol},
            "critical_exponent_min": float(critical_exponent(p).values.min()),
        }
        if not u.is_zero:
            shrink = [u.scaled(s) for s in SHRINK_SCALES]
            grow = [u.scaled(s) for s in GROW_SCALES]
            data["sequences"] = {
                "to_zero": sequence_check([luxemburg_norm(v, p) for v in shrink], [modular(v, p) for v in shrink]),
                "to_infinity": sequence_check([luxemburg_norm(v, p) for v in grow], [modular(v, p) for v in grow]),
            }
        if self.config.solver.poincare:
            data["poincare"] = estimate_poincare(p, restarts=self.config.solver.restarts, seed=self.seed)
        return data
