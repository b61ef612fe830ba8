"""
Scenario workflow using Langgraph
"""

from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from langgraph.graph import END, StateGraph
from loguru import logger
from typing_extensions import TypedDict

from ..errors import exit_code_for
from ..models.balayage_models import BalayageResult, MeasureSpec
from ..models.ball_models import BallResult, CheckReport
from ..models.grid_models import DomainKind, DomainMask
from ..models.scenario_models import ScenarioConfig, ScenarioKind
from ..models.twophase_models import TwoPhaseResult
from ..services.balayage_service import BalayageService, occupancy
from ..services.ball_service import (
    check_oracle_equivalence,
    check_positivity,
    compute_ball,
    run_suite,
    verify_field_characterization,
)
from ..services.export_service import export_balayage, export_twophase, write_scalar_csv, write_summary
from ..services.green_service import GreenEvaluator
from ..services.grid_service import build_domain_mask, region_from_domain, weighted_integral
from ..services.twophase_service import null_quadrature_pair, one_phase_schwarz_reports, reflection_twophase, run_twophase_suite


class ScenarioState(TypedDict):
    """State model for the scenario workflow"""
    config: ScenarioConfig
    command: str
    out_dir: str
    mask: Optional[DomainMask]
    ball: Optional[BallResult]
    twophase: Optional[TwoPhaseResult]
    sandpile: Optional[BalayageResult]
    reports: List[CheckReport]
    artifacts: List[str]
    summary: Dict[str, Any]
    current_step: str
    error: Optional[str]
    exit_code: int


class ScenarioAgent:
    """Langgraph agent running build domain -> compute -> verify -> export"""

    def __init__(self):
        self.graph = self._build_workflow()

    def _build_workflow(self):
        workflow = StateGraph(ScenarioState)

        workflow.add_node("build_domain", self.build_domain)
        workflow.add_node("compute", self.compute)
        workflow.add_node("verify", self.verify)
        workflow.add_node("export", self.export)

        workflow.set_entry_point("build_domain")
        workflow.add_edge("build_domain", "compute")
        workflow.add_edge("compute", "verify")
        workflow.add_edge("verify", "export")
        workflow.add_edge("export", END)

        return workflow.compile()

    def run(self, config: ScenarioConfig, command: str = "compute", out_dir: Optional[str] = None) -> ScenarioState:
        """
        Execute the scenario workflow

        Args:
            config: validated scenario
            command: "compute" writes every artifact, "verify" only the summary
            out_dir: output directory, defaults to the scenario's own

        Returns:
            Final workflow state with reports, summary and exit code
        """
        initial_state: ScenarioState = {
            "config": config,
            "command": command,
            "out_dir": out_dir or config.output_dir,
            "mask": None,
            "ball": None,
            "twophase": None,
            "sandpile": None,
            "reports": [],
            "artifacts": [],
            "summary": {},
            "current_step": "initialized",
            "error": None,
            "exit_code": 0,
        }
        return self.graph.invoke(initial_state)

    @staticmethod
    def _fail(state: ScenarioState, step: str, error: Exception) -> ScenarioState:
        logger.error(f"Error in {step}: {error}")
        state["error"] = f"{type(error).__name__}: {error}"
        state["exit_code"] = exit_code_for(error)
        return state

    def build_domain(self, state: ScenarioState) -> ScenarioState:
        """Step 1: classify the grid against K"""
        config = state["config"]
        logger.info(f"Building {config.domain.kind.value} domain for a {config.kind.value} scenario")
        try:
            grid = config.grid.to_spec()
            state["mask"] = build_domain_mask(grid, config.domain)
            state["current_step"] = "domain_built"
        except Exception as e:
            return self._fail(state, "build_domain", e)
        return state

    def compute(self, state: ScenarioState) -> ScenarioState:
        """Step 2: solve the balayage problem(s) for the scenario kind"""
        if state["error"]:
            return state
        config = state["config"]
        mask = state["mask"]
        service = BalayageService(config.solver, config.sandpile)
        try:
            if config.kind == ScenarioKind.BALL:
                state["ball"] = compute_ball(mask, config.x0, config.alpha, service)
                if config.sandpile.enabled:
                    state["sandpile"] = service.sandpile(mask, MeasureSpec.point_mass(config.x0, config.alpha))
            elif config.kind == ScenarioKind.TWOPHASE_REFLECTION:
                tp = reflection_twophase(
                    mask.grid, config.x0, config.alpha, service, config.verification.exclusion_cells
                )
                state["twophase"] = tp
                state["ball"] = tp.ball
            else:
                d_plus = region_from_domain(mask.grid, config.dplus)
                state["twophase"] = null_quadrature_pair(mask, d_plus, service)
            state["current_step"] = "computed"
        except Exception as e:
            return self._fail(state, "compute", e)
        return state

    def verify(self, state: ScenarioState) -> ScenarioState:
        """Step 3: run the verification suite"""
        if state["error"]:
            return state
        config = state["config"]
        settings = config.verification
        reports: List[CheckReport] = []
        try:
            if config.kind == ScenarioKind.BALL:
                ball = state["ball"]
                green = GreenEvaluator(ball.mask, config.green_mode, config.solver)
                reports.extend(run_suite(ball, settings, green))
                if ball.mask.kind == DomainKind.WHOLE_PLANE_BOX:
                    reports.extend(one_phase_schwarz_reports(ball, settings))
                if state["sandpile"] is not None:
                    reports.append(check_oracle_equivalence(ball.balayage, state["sandpile"], settings))
            else:
                tp = state["twophase"]
                if tp.ball is not None:
                    reports.append(verify_field_characterization(tp.ball, settings))
                    reports.append(check_positivity(tp.ball, settings))
                reports.extend(run_twophase_suite(tp, settings))
            state["reports"] = reports
            state["current_step"] = "verified"
            failed = [r.name for r in reports if not r.passed]
            if failed:
                logger.warning(f"Failed checks: {', '.join(failed)}")
                state["exit_code"] = 1
        except Exception as e:
            return self._fail(state, "verify", e)
        return state

    def export(self, state: ScenarioState) -> ScenarioState:
        """Step 4: write artifacts and the JSON summary"""
        out_dir = Path(state["out_dir"])
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            artifacts: List[str] = []
            if state["command"] == "compute" and not state["error"]:
                tp = state["twophase"]
                if state["ball"] is not None:
                    artifacts.extend(export_balayage(state["ball"].balayage, out_dir))
                elif tp is not None:
                    write_scalar_csv(out_dir / "u.csv", tp.u)
                    artifacts.append("u.csv")
                if tp is not None:
                    artifacts.extend(export_twophase(tp, out_dir))
            state["artifacts"] = artifacts
            state["summary"] = build_summary(state)
            write_summary(out_dir / "summary.json", state["summary"])
            state["current_step"] = "completed"
            logger.info(f"Scenario finished with exit code {state['exit_code']}; summary in {out_dir / 'summary.json'}")
        except Exception as e:
            logger.error(f"Error exporting artifacts: {e}")
            state["error"] = state["error"] or f"{type(e).__name__}: {e}"
            state["exit_code"] = max(state["exit_code"], 2)
        return state


def mean_value_residual(reports: List[CheckReport]) -> Optional[float]:
    for report in reports:
        if report.name == "mean_value":
            return report.item("mean_value").value
    return None


def build_summary(state: ScenarioState) -> Dict[str, Any]:
    """Deterministic JSON summary (no timestamps)"""
    config = state["config"]
    summary: Dict[str, Any] = {
        "scenario": config.kind.value,
        "command": state["command"],
        "domain": config.domain.kind.value,
        "grid": config.grid.model_dump(),
        "exit_code": state["exit_code"],
        "error": state["error"],
        "artifacts": sorted(set(state["artifacts"] + ["summary.json"])),
        "checks": {report.name: report.to_summary() for report in state["reports"]},
        "overall": state["error"] is None and all(r.passed for r in state["reports"]),
    }
    ball = state["ball"]
    tp = state["twophase"]
    result = ball.balayage if ball is not None else None
    if result is not None:
        area = weighted_integral(np.ones(result.grid.shape), occupancy(result))
        summary["balayage"] = {
            "method": result.method,
            "alpha": ball.alpha,
            "x0": list(ball.center),
            "iterations": result.iterations,
            "residual": result.residual,
            "omega_nodes": result.omega.count,
            "Omega_nodes": result.omega_big.count,
            "lambda_omega": area,
            "nu_total": result.nu.total,
        }
    if tp is not None:
        summary["twophase"] = {
            "construction": tp.construction,
            "d_plus_nodes": tp.D_plus.count,
            "d_minus_nodes": tp.D_minus.count,
            "gamma_edges": len(tp.gamma),
        }
    residual = mean_value_residual(state["reports"])
    if residual is not None:
        summary["mean_value_residual"] = residual
    return summary
