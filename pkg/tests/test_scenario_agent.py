import orjson
import pytest

from harmonic_lab.agents.scenario_agent import ScenarioAgent, build_summary, mean_value_residual
from harmonic_lab.models.ball_models import CheckReport
from harmonic_lab.models.scenario_models import ScenarioConfig

from .conftest import DISC_ALPHA


def noncontact_config(out_dir, **extra):
    raw = {
        "kind": "ball",
        "grid": {"x_min": -0.5, "x_max": 0.5, "y_min": 0.0, "y_max": 1.0, "h": 0.02},
        "domain": {"kind": "half_plane", "offset": 0.0, "upper": True},
        "x0": [0.0, 0.5],
        "alpha": DISC_ALPHA,
        "sandpile": {"enabled": False},
        "verification": {"mean_value": False},
        "output_dir": str(out_dir),
    }
    raw.update(extra)
    return raw


@pytest.fixture(scope="module")
def agent():
    return ScenarioAgent()


def test_compute_writes_artifacts(agent, tmp_path):
    config = ScenarioConfig.from_dict(noncontact_config(tmp_path))
    state = agent.run(config)
    assert state["error"] is None
    assert state["exit_code"] == 0
    assert state["current_step"] == "completed"
    for name in ["omega.pgm", "omega_big.pgm", "u.csv", "nu.csv", "summary.json"]:
        assert (tmp_path / name).exists()

    summary = orjson.loads((tmp_path / "summary.json").read_bytes())
    assert summary["overall"] is True
    assert summary["artifacts"] == sorted(summary["artifacts"])
    assert set(summary["checks"]) == {"field_characterization", "positivity", "starshaped", "halfspace_omega_equality"}
    assert summary["balayage"]["nu_total"] == 0.0
    assert summary["balayage"]["lambda_omega"] == pytest.approx(DISC_ALPHA, rel=1e-4)


def test_verify_writes_only_summary(agent, tmp_path):
    config = ScenarioConfig.from_dict(noncontact_config(tmp_path))
    state = agent.run(config, command="verify")
    assert state["exit_code"] == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["summary.json"]


def test_summary_is_deterministic(agent, tmp_path):
    config = ScenarioConfig.from_dict(noncontact_config(tmp_path))
    agent.run(config, command="verify", out_dir=str(tmp_path / "a"))
    agent.run(config, command="verify", out_dir=str(tmp_path / "b"))
    assert (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()


def test_failed_check_gives_exit_one(agent, tmp_path):
    raw = noncontact_config(tmp_path, verification={"mean_value": True, "relative_tolerance": 1e-9})
    state = agent.run(ScenarioConfig.from_dict(raw))
    assert state["error"] is None
    assert state["exit_code"] == 1
    summary = orjson.loads((tmp_path / "summary.json").read_bytes())
    assert summary["overall"] is False
    assert summary["checks"]["mean_value"]["overall"] is False
    assert summary["mean_value_residual"] > 1e-9


def test_non_convergence_gives_exit_three(agent, tmp_path):
    raw = noncontact_config(tmp_path, solver={"max_sweeps": 1})
    state = agent.run(ScenarioConfig.from_dict(raw))
    assert state["exit_code"] == 3
    assert state["error"].startswith("NonConvergence")
    summary = orjson.loads((tmp_path / "summary.json").read_bytes())
    assert summary["artifacts"] == ["summary.json"]
    assert "balayage" not in summary


def test_geometry_error_gives_exit_two(agent, tmp_path):
    raw = noncontact_config(tmp_path, domain={"kind": "disc", "center": [0.0, 0.5], "radius": 0.8})
    state = agent.run(ScenarioConfig.from_dict(raw))
    assert state["exit_code"] == 2
    assert state["error"].startswith("GeometryOutOfBounds")


def test_null_pair_scenario(agent, tmp_path):
    raw = {
        "kind": "nullqd",
        "grid": {"x_min": -0.8, "x_max": 0.8, "y_min": -0.8, "y_max": 0.8, "h": 0.02},
        "dplus": {"kind": "disc", "center": [0.0, 0.0], "radius": 0.3},
        "verification": {"kmax": 3},
        "output_dir": str(tmp_path),
    }
    state = agent.run(ScenarioConfig.from_dict(raw))
    assert state["error"] is None
    assert state["ball"] is None
    assert {"u.csv", "d_plus.pgm", "d_minus.pgm", "S_plus.csv", "S_minus.csv", "gamma.csv"} <= set(state["artifacts"])
    summary = state["summary"]
    assert summary["twophase"]["construction"] == "null_pair"
    assert summary["checks"]["null_mass"]["overall"] is True
    assert summary["checks"]["quadrature_identity"]["overall"] is True
    assert summary["checks"]["dbar_plus"]["overall"] is True
    assert summary["overall"] is True
    assert state["exit_code"] == 0


def test_summary_helpers():
    report = CheckReport(name="mean_value")
    report.add("mean_value", 0.004, 0.01, True)
    assert mean_value_residual([CheckReport(name="positivity"), report]) == 0.004
    assert mean_value_residual([]) is None


def test_build_summary_without_results(tmp_path):
    config = ScenarioConfig.from_dict(noncontact_config(tmp_path))
    state = {
        "config": config, "command": "verify", "out_dir": str(tmp_path), "mask": None, "ball": None,
        "twophase": None, "sandpile": None, "reports": [], "artifacts": [], "summary": {},
        "current_step": "initialized", "error": "ConfigError: boom", "exit_code": 2,
    }
    summary = build_summary(state)
    assert summary["overall"] is False
    assert summary["artifacts"] == ["summary.json"]
    assert summary["grid"]["h"] == 0.02
