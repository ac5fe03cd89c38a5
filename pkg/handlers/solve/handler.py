"""
Solve handler class.

Mountain-pass pipeline on the scenario:
audits -> geometry -> far point -> minimax + polish -> certificate.

The mode decided by the audits picks the far point: H1 uses the supplied
u_bar, H2 scans the ray through problem.u0.
"""
from __future__ import annotations

from typing import Any, ClassVar

from core.base_handler import BaseHandler
from lib.errors import AuditFailedError, NotConvergedError
from numerics.energy import geometry_constants
from numerics.exponent_domain import GridFunction, validate_exponents
from numerics.modular_spaces import sobolev_norm
from numerics.mountain_pass import (
    MountainPassResult,
    PassMode,
    certify_solution,
    find_far_point,
    minimax_solve,
    sample_sphere_directions,
    verify_geometry,
)


class SolveHandler(BaseHandler):
    """
    Handler for the `solve` scenario.

    After `run()`, `solution` holds the candidate (converged or not) so the
    caller can write it out.
    """

    OP: ClassVar[str] = "solve"

    def __init__(self, *args: Any, **kwargs: Any) -> None:
        super().__init__(*args, **kwargs)
        self.solution: GridFunction | None = None
        self.result: MountainPassResult | None = None

    def _execute(self) -> dict[str, Any]:
        cfg = self.config
        model = self.model
        validity = validate_exponents(self.p)
        if not validity.admissible:
            self.warnings.append("exponent outside the admissible window: " + ", ".join(validity.violated_clauses))
        thresholds = self.compute_thresholds()

        families = self.run_audits()
        if families.required_failed:
            raise AuditFailedError(
                f"hypotheses do not hold for mode {families.requested_mode}: {families.reason}",
                families=families.to_dict(),
                thresholds=thresholds,
            )
        mode = PassMode(families.resolved_mode)

        geometry = verify_geometry(model, cfg.solver.rho_grid, cfg.solver.samples_per_sphere, self.seed)
        u_bar = find_far_point(
            model,
            self.function(cfg.problem.u0),
            t_max=cfg.solver.t_max,
            rho=geometry.rho,
            mode=mode,
            u_bar=self.u_bar(),
        )
        result = minimax_solve(
            model,
            u_bar,
            path_nodes=cfg.solver.path_nodes,
            max_iters=cfg.solver.max_iters,
            tol=cfg.solver.tol,
            geometry=geometry,
            seed=self.seed,
            switch_tol=cfg.solver.switch_tol,
            newton_max_iters=cfg.solver.newton_max_iters,
            mode=mode,
        )
        self.result = result
        self.solution = result.u_candidate

        certificate = certify_solution(model, result.u_candidate, cfg.tolerances.certify)
        certificate.pop("report")
        unit = [d.scaled(1.0 / sobolev_norm(d, self.p)) for d in sample_sphere_directions(model, 4, self.seed)]
        samples = [d.scaled(r["rho"]) for d in unit for r in geometry.per_rho]
        data = {
            "mode": mode.value,
            "validity": validity.to_dict(),
            "thresholds": thresholds,
            "geometry": result.geometry.to_dict(),
            "geometry_constants": geometry_constants(model, thresholds["lambda_star"], samples=samples),
            "result": result.to_dict(),
            "certificate": certificate,
        }
        if not result.converged:
            raise NotConvergedError(
                "mountain pass did not converge: " + ("; ".join(result.reasons) or "tolerance not met"),
                best=result,
                **data,
            )
        return data
