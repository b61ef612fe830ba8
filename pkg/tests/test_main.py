from pathlib import Path

import orjson
import pytest

from harmonic_lab.main import SWEEP_COLUMNS, build_parser, load_config, main, run_scenario, sweep

from .test_scenario_agent import noncontact_config

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_bytes(orjson.dumps(noncontact_config(tmp_path / "out")))
    return path


def test_parser_requires_config():
    parser = build_parser()
    with pytest.raises(SystemExit):
        parser.parse_args(["compute"])
    args = parser.parse_args(["sweep", "--config", "a.json", "--parameter", "alpha", "--values", "0.1", "0.2"])
    assert args.values == [0.1, 0.2]
    assert args.overrides == []


def test_overrides_and_out_dir(config_file, tmp_path):
    config = load_config(str(config_file), ["verification.kmax=2", "grid.h=0.025"], str(tmp_path / "elsewhere"), "analytic")
    assert config.verification.kmax == 2
    assert config.grid.h == 0.025
    assert config.output_dir == str(tmp_path / "elsewhere")
    assert config.green_mode.value == "analytic"


def test_compute_exit_zero(config_file, tmp_path):
    assert main(["compute", "--config", str(config_file)]) == 0
    assert (tmp_path / "out" / "omega.pgm").exists()
    assert (tmp_path / "out" / "summary.json").exists()


def test_verify_honours_out(config_file, tmp_path):
    target = tmp_path / "verify_out"
    assert main(["verify", "--config", str(config_file), "--out", str(target)]) == 0
    assert [p.name for p in target.iterdir()] == ["summary.json"]


def test_failed_check_exit_one(config_file):
    code = run_scenario(
        str(config_file),
        ["verification.mean_value=true", "verification.relative_tolerance=1e-9"],
        command="verify",
    )
    assert code == 1


def test_non_convergence_exit_three(config_file):
    assert main(["verify", "--config", str(config_file), "--set", "solver.max_sweeps=1"]) == 3


def test_config_errors_exit_two(tmp_path, config_file):
    assert main(["compute", "--config", str(tmp_path / "missing.json")]) == 2
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert main(["compute", "--config", str(broken)]) == 2
    assert main(["compute", "--config", str(config_file), "--set", "alpha=-1"]) == 2
    assert main(["compute", "--config", str(config_file), "--set", "nokeyvalue"]) == 2


def test_alpha_sweep_table(config_file, tmp_path):
    code = sweep(str(config_file), "alpha", [0.1, 0.05])
    assert code == 0
    rows = (tmp_path / "out" / "sweep.csv").read_text().splitlines()
    assert rows[0] == SWEEP_COLUMNS
    assert len(rows) == 3
    first, second = (row.split(",") for row in rows[1:])
    assert float(first[0]) == 0.05 and float(second[0]) == 0.1
    assert first[-1] == "" and second[-1] == "pass"
    assert float(first[1]) < float(second[1])
    assert (tmp_path / "out" / "alpha_0" / "summary.json").exists()
    assert (tmp_path / "out" / "alpha_1" / "omega.pgm").exists()
    first_summary = orjson.loads((tmp_path / "out" / "alpha_0" / "summary.json").read_bytes())
    assert "monotonicity" not in first_summary["checks"]
    second_summary = orjson.loads((tmp_path / "out" / "alpha_1" / "summary.json").read_bytes())
    assert second_summary["checks"]["monotonicity"]["overall"] is True
    assert second_summary["exit_code"] == 0


def test_sweep_rejects_bad_requests(config_file, tmp_path):
    assert main(["sweep", "--config", str(config_file), "--parameter", "beta", "--values", "1"]) == 2
    assert sweep(str(config_file), "alpha", []) == 2
    nullqd = tmp_path / "nullqd.json"
    nullqd.write_bytes((SCENARIOS / "nullqd_disc.json").read_bytes())
    assert sweep(str(nullqd), "x0_y", [0.1]) == 2


@pytest.mark.slow
@pytest.mark.parametrize("name", ["halfplane_noncontact", "halfplane_contact"])
def test_half_plane_scenarios_pass(name, tmp_path):
    assert main(["compute", "--config", str(SCENARIOS / f"{name}.json"), "--out", str(tmp_path)]) == 0
    summary = orjson.loads((tmp_path / "summary.json").read_bytes())
    assert summary["checks"]["mean_value"]["overall"] is True
    assert summary["checks"]["oracle_equivalence"]["overall"] is True


@pytest.mark.slow
def test_reflection_scenario_symmetry(tmp_path):
    main(["compute", "--config", str(SCENARIOS / "reflection.json"), "--out", str(tmp_path)])
    summary = orjson.loads((tmp_path / "summary.json").read_bytes())
    assert summary["error"] is None
    assert summary["checks"]["odd_symmetry"]["overall"] is True
    assert summary["checks"]["quadrature_identity"]["overall"] is True
    assert summary["twophase"]["gamma_edges"] > 0


@pytest.mark.slow
def test_whole_plane_scenario_quadrature(tmp_path):
    main(["compute", "--config", str(SCENARIOS / "whole_plane_disc.json"), "--out", str(tmp_path)])
    summary = orjson.loads((tmp_path / "summary.json").read_bytes())
    assert summary["error"] is None
    assert summary["checks"]["one_phase_quadrature"]["overall"] is True
    assert summary["checks"]["positivity"]["overall"] is True
