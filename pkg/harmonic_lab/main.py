"""
Harmonic ball laboratory - command-line entry point

    python -m harmonic_lab.main compute --config scenarios/halfplane_contact.json
    python -m harmonic_lab.main verify --config scenarios/reflection.json --set verification.kmax=3
    python -m harmonic_lab.main sweep --config scenarios/halfplane_contact.json --parameter alpha --values 0.05 0.1 0.2
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import orjson
from dotenv import load_dotenv
from loguru import logger

from .agents.scenario_agent import ScenarioAgent, build_summary
from .config import configure_logging, settings
from .errors import ConfigError, HarmonicLabError, exit_code_for
from .models.scenario_models import ScenarioConfig, ScenarioKind
from .services.ball_service import check_monotonicity
from .services.export_service import SWEEP_COLUMNS, write_summary, write_sweep_csv

# Load environment variables
load_dotenv()

SWEEP_PARAMETERS = ("alpha", "h", "x0_y")


def _cli_overrides(overrides: Optional[List[str]], out_dir: Optional[str], green: Optional[str]) -> List[str]:
    extra = list(overrides or [])
    if out_dir:
        extra.append(f"output_dir={out_dir}")
    if green:
        extra.append(f"green_mode={green}")
    return extra


def load_config(
    config_path: str,
    overrides: Optional[List[str]] = None,
    out_dir: Optional[str] = None,
    green: Optional[str] = None,
) -> ScenarioConfig:
    return ScenarioConfig.from_file(config_path, _cli_overrides(overrides, out_dir, green))


def run_scenario(
    config_path: str,
    overrides: Optional[List[str]] = None,
    command: str = "compute",
    out_dir: Optional[str] = None,
    green: Optional[str] = None,
) -> int:
    """Compute and verify one scenario; returns the exit code (0 pass, 1 check failed, 2 error, 3 no convergence)"""
    try:
        config = load_config(config_path, overrides, out_dir, green)
    except HarmonicLabError as e:
        logger.error(str(e))
        return exit_code_for(e)
    logger.info(f"Running {config.kind.value} scenario from {config_path}")
    state = ScenarioAgent().run(config, command=command)
    return state["exit_code"]


def _sweep_override(config: ScenarioConfig, parameter: str, value: float) -> str:
    if parameter == "alpha":
        return f"alpha={value!r}"
    if parameter == "h":
        return f"grid.h={value!r}"
    return "x0=" + orjson.dumps([config.x0[0], value]).decode()


def sweep(
    config_path: str,
    parameter: str,
    values: List[float],
    overrides: Optional[List[str]] = None,
    out_dir: Optional[str] = None,
    green: Optional[str] = None,
) -> int:
    """
    Run one scenario per parameter value into <out>/<parameter>_<k> and write <out>/sweep.csv

    Alpha sweeps also check that consecutive balls are nested.
    """
    try:
        if parameter not in SWEEP_PARAMETERS:
            raise ConfigError(f"unknown sweep parameter {parameter!r}; expected one of {', '.join(SWEEP_PARAMETERS)}")
        if not values:
            raise ConfigError("sweep needs at least one value")
        base = load_config(config_path, overrides, out_dir, green)
        if parameter in ("alpha", "x0_y") and base.kind == ScenarioKind.NULLQD:
            raise ConfigError(f"{parameter} sweeps need a scenario with a centre and a size")
        if parameter == "alpha":
            values = sorted(values)
        document = base.model_dump(mode="json")
        root = Path(base.output_dir)
        configs = []
        for k, value in enumerate(values):
            run_dir = root / f"{parameter}_{k}"
            configs.append(
                ScenarioConfig.from_dict(
                    document, [_sweep_override(base, parameter, value), f"output_dir={run_dir.as_posix()}"]
                )
            )
    except HarmonicLabError as e:
        logger.error(str(e))
        return exit_code_for(e)

    agent = ScenarioAgent()
    rows = []
    exit_code = 0
    previous = None
    for value, config in zip(values, configs):
        logger.info(f"Sweep {parameter} = {value:.6g}")
        state = agent.run(config, command="compute")
        summary = state["summary"]
        balayage = summary.get("balayage", {})
        ball = state["ball"]

        monotone = ""
        if parameter == "alpha" and ball is not None:
            if previous is not None:
                try:
                    report = check_monotonicity(previous, ball)
                    state["reports"].append(report)
                    monotone = "pass" if report.passed else "FAIL"
                    if not report.passed:
                        state["exit_code"] = max(state["exit_code"], 1)
                except HarmonicLabError as e:
                    logger.error(f"monotonicity check skipped: {e}")
                    monotone = "error"
                    state["exit_code"] = max(state["exit_code"], exit_code_for(e))
                state["summary"] = build_summary(state)
                write_summary(Path(config.output_dir) / "summary.json", state["summary"])
            previous = ball

        rows.append([
            value,
            balayage.get("lambda_omega", np.nan),
            balayage.get("nu_total", np.nan),
            summary.get("mean_value_residual", np.nan),
            balayage.get("residual", np.nan),
            state["exit_code"],
            monotone,
        ])
        exit_code = max(exit_code, state["exit_code"])

    root.mkdir(parents=True, exist_ok=True)
    table = write_sweep_csv(root / "sweep.csv", rows)
    logger.info(f"Sweep table written to {table}")
    return exit_code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="harmonic_lab",
        description="Harmonic and subharmonic balls via partial balayage, with two-phase Schwarz checks",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    def common(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--config", required=True, help="Path to a JSON scenario file")
        sub.add_argument("--out", default=None, help="Output directory (overrides output_dir)")
        sub.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                         help="Override a config entry, e.g. --set verification.kmax=3")
        sub.add_argument("--green", choices=["analytic", "numeric", "free_space"], default=None,
                         help="Green function evaluation mode")
        sub.add_argument("--log-level", default=None, help=f"Log level (default {settings.log_level})")

    common(subparsers.add_parser("compute", help="Compute, verify and write every artifact"))
    common(subparsers.add_parser("verify", help="Recompute and run the checks; writes summary.json only"))
    sweep_parser = subparsers.add_parser("sweep", help="Run a scenario over a list of parameter values")
    common(sweep_parser)
    sweep_parser.add_argument("--parameter", required=True, help="alpha, h or x0_y")
    sweep_parser.add_argument("--values", required=True, nargs="+", type=float)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    if args.command == "sweep":
        return sweep(args.config, args.parameter, args.values, args.overrides, args.out, args.green)
    return run_scenario(args.config, args.overrides, args.command, args.out, args.green)


if __name__ == "__main__":
    sys.exit(main())
