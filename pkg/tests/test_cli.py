import json

import pytest

from netctl.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main


def test_success_writes_csv_and_summary(tmp_path):
    assert main(["decomposition", "--out", str(tmp_path), "--seed", "5"]) == EXIT_OK
    assert (tmp_path / "rollout_constraints.csv").exists()
    assert json.loads((tmp_path / "summary.json").read_text())["seed"] == 5


def test_config_file(tmp_path):
    c = tmp_path / "c.toml"
    c.write_text('recipe = "sphere"\nsamples = 100\n')
    assert main(["sphere", "--config", str(c), "--out", str(tmp_path / "o")]) == EXIT_OK
    assert (tmp_path / "o" / "sphere_quartiles.csv").exists()


@pytest.mark.parametrize("body", ['{"samples": 0}', "{", '{"unknown": 1}', '{"recipe": "decomposition"}'])
def test_config_errors_exit_2(tmp_path, body):
    c = tmp_path / "c.json"
    c.write_text(body)
    assert main(["sphere", "--config", str(c), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_missing_config_and_bad_usage(tmp_path):
    assert main(["sphere", "--config", str(tmp_path / "none.json")]) == EXIT_CONFIG
    assert main(["no-such-recipe"]) == EXIT_CONFIG
    assert main(["sphere", "--seed", "-3", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_numerical_failure_exit_3(tmp_path):
    c = tmp_path / "c.json"
    # Nodes 3 and 4 of the star network always move together.
    c.write_text(json.dumps({"network": {"builtin": "star-4"}, "drivers": [1], "targets": [3, 4],
                             "tau_f": [10, 12]}))
    assert main(["bound-sweep", "--config", str(c), "--out", str(tmp_path / "o")]) == EXIT_NUMERICAL
    c.write_text(json.dumps({"gramian": [[1.0, 0, 0], [0, 0.0, 0], [0, 0, 1.0]]}))
    assert main(["sphere", "--config", str(c), "--out", str(tmp_path / "o")]) == EXIT_NUMERICAL
