"""
This module contains test cases for the command-line application in
uframe.main. Every test drives ``run(argv)`` directly and inspects the exit
code, the JSON report and the error written to stderr.

Test Cases:
- test_covariant_weyl_check: diagnostics of the d = 2 and d = 3 Weyl detector pass --check.
- test_covariant_sud: a = 3, b = -1 and noise coefficient 4 for a pure qubit ancilla.
- test_covariant_sud_maximally_mixed: the SU(d) frame with nu = I/d is singular.
- test_frame_check: Pauli basis file is a tight frame, a three-element file is not.
- test_povm_check: tetrahedral POVM, Weyl Bell POVM with an ancilla, and an invalid file.
- test_estimate_weyl_with_csv: Monte Carlo estimate of <0|Z|0> with per-shot rows.
- test_estimate_sud: importance-sampled estimate with the SU(2) detector.
- test_estimate_reproducible: the same configuration yields byte-identical reports.
- test_estimate_threads_embedded: the report embeds the thread count actually used under UFRAME_THREADS.
- test_reconstruct: d = 3 Weyl reconstruction written to --output.
- test_universality_maximally_mixed: nu = I/d fails with "frame singular: nu = I/d".
- test_variance_scan: strictly decreasing coefficient with two Monte Carlo spot checks for d = 2 and d = 4.
- test_scan_purities: spot-check purities off the grid are added, so d = 4 scans 21 points.
- test_optimality_demo: ratio d + 2 for a pure ancilla, confirmed by Monte Carlo.
- test_haar_check: Haar moment identities from the CLI, and the minimum budget.
- test_sample_data_configs: the shipped configurations validate.
- test_invalid_input_exit_codes: missing configuration file, d = 1, unknown keyword.

Fixtures:
- config_file: factory writing an experiment configuration into tmp_path.

Helper Functions:
- run_json: run the CLI and parse the JSON report from stdout.
- write_matrices: write a list of matrices as a frame or POVM file.
"""
import json
from pathlib import Path

import numpy as np
import pytest

from uframe.covariant.weyl import weyl_bell_povm, weyl_system
from uframe.commands.experiments import scan_purities
from uframe.main import run
from uframe.povm.catalog import PAULI_I, PAULI_X, PAULI_Y, PAULI_Z, tetrahedral_povm
from uframe.schemas import ExperimentConfig, MatrixSchema

SAMPLE_DATA = Path(__file__).resolve().parent.parent / "sample_data"


@pytest.fixture
def config_file(tmp_path):
    """
    Factory writing an experiment configuration and returning its path.
    """
    def write(**fields):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(fields), encoding="utf-8")
        return str(path)

    return write


def run_json(capsys, argv):
    """
    Helper function running the CLI, asserting success and returning the parsed report.
    """
    code = run(argv)
    captured = capsys.readouterr()
    assert code == 0, captured.err
    return json.loads(captured.out)


def write_matrices(path, matrices, **header):
    """
    Helper function writing matrices in the frame/POVM file layout.
    """
    elements = [MatrixSchema.from_matrix(m).model_dump() for m in matrices]
    path.write_text(json.dumps(header | {"elements": elements}), encoding="utf-8")
    return str(path)


@pytest.mark.parametrize("d", [2, 3])
def test_covariant_weyl_check(capsys, d):
    report = run_json(capsys, ["covariant", "weyl", "--d", str(d), "--check"])
    assert report["d"] == d
    assert report["ancilla_min_eigenvalue"] >= -1e-10
    assert report["min_abs_trace"] > 1e-6
    assert report["dual_completeness_defect"] < 1e-8
    assert report["unique_dual_distance"] < 1e-8


def test_covariant_sud(capsys):
    report = run_json(capsys, ["covariant", "sud", "--d", "2"])
    assert report["p"] == pytest.approx(1.0)
    assert report["a"] == pytest.approx(3.0)
    assert report["b"] == pytest.approx(-1.0)
    assert sorted(report["eigenvalues"]) == pytest.approx([1 / 3, 1.0])
    assert report["dual_conditions_hold"]
    assert report["noise_coefficient"] == pytest.approx(4.0)


def test_covariant_sud_maximally_mixed(capsys):
    assert run(["covariant", "sud", "--d", "2", "--ancilla", "maximally-mixed"]) == 2
    assert "frame singular: nu = I/d" in capsys.readouterr().err


def test_frame_check(capsys, tmp_path):
    paulis = np.array([PAULI_I, PAULI_X, PAULI_Y, PAULI_Z]) / np.sqrt(2)
    path = write_matrices(tmp_path / "frame.json", paulis, dim_h=2, dim_k=2)
    report = run_json(capsys, ["frame", "check", path])
    assert report["is_frame"]
    assert report["lower_bound"] == pytest.approx(1.0)
    assert report["upper_bound"] == pytest.approx(1.0)
    assert report["canonical_dual_defect"] < 1e-12

    path = write_matrices(tmp_path / "short.json", paulis[:3], dim_h=2, dim_k=2)
    report = run_json(capsys, ["frame", "check", path])
    assert not report["is_frame"]
    assert report["canonical_dual_defect"] is None


def test_povm_check(capsys, tmp_path):
    path = write_matrices(tmp_path / "tetra.json", tetrahedral_povm().elements, dim=2)
    report = run_json(capsys, ["povm", "check", path])
    assert report["povm"]["is_valid"]
    assert report["info_complete"]
    assert report["universality"] is None

    bell = weyl_bell_povm(weyl_system(2)).povm.elements
    path = write_matrices(tmp_path / "bell.json", bell, dim=4, dim_h=2, dim_k=2)
    report = run_json(capsys, ["povm", "check", path, "--ancilla", "paper-abelian"])
    assert report["universality"]["universal"]

    path = write_matrices(tmp_path / "broken.json", [np.diag([1.0, 0.0])], dim=2)
    assert run(["povm", "check", path]) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_estimate_weyl_with_csv(capsys, config_file, tmp_path):
    shots = tmp_path / "shots.csv"
    path = config_file(experiment="estimate", d=2, shots=5000, seed=7, csv=str(shots))
    report = run_json(capsys, ["estimate", "run", "--config", path])
    assert report["exact"] == pytest.approx(1.0)
    assert abs(report["estimate"] - 1.0) <= 4 * report["std_error"]
    assert report["delta_obs"] == pytest.approx(2 / 3)
    assert report["ratio"] > 1.0
    lines = shots.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "outcome,f"
    assert len(lines) == 5001


def test_estimate_sud(capsys, config_file):
    path = config_file(experiment="estimate", d=2, detector="sud", ancilla="pure-basis", shots=20000, seed=3)
    report = run_json(capsys, ["estimate", "run", "--config", path])
    assert report["ratio"] == pytest.approx(4.0)
    assert abs(report["estimate"] - report["exact"]) <= 4 * report["std_error"]


def test_estimate_reproducible(capsys, config_file):
    path = config_file(experiment="estimate", d=3, state="random-pure", observable="random-hermitian", seed=99)
    first = run(["estimate", "run", "--config", path, "--shots", "2000"])
    out_first = capsys.readouterr().out
    second = run(["estimate", "run", "--config", path, "--shots", "2000"])
    out_second = capsys.readouterr().out
    assert first == second == 0
    assert out_first == out_second
    assert json.loads(out_first)["config"]["shots"] == 2000


def test_estimate_threads_embedded(capsys, config_file, monkeypatch):
    path = config_file(experiment="estimate", d=2, shots=4000, seed=17)
    argv = ["estimate", "run", "--config", path]
    monkeypatch.setattr("uframe.estimation.parallel.UFRAME_THREADS", 4)
    assert run_json(capsys, argv)["config"]["threads"] == 4
    assert run_json(capsys, argv + ["--threads", "2"])["config"]["threads"] == 2

    monkeypatch.setattr("uframe.estimation.parallel.UFRAME_THREADS", 1)
    capped = run_json(capsys, argv + ["--threads", "4"])
    assert capped["config"]["threads"] == 1
    assert capped == run_json(capsys, argv + ["--threads", "1"])
    assert capped == run_json(capsys, argv)


def test_reconstruct(capsys, config_file, tmp_path):
    output = tmp_path / "report.json"
    path = config_file(experiment="reconstruct", d=3, output=str(output))
    assert run(["estimate", "run", "--config", path]) == 0
    assert capsys.readouterr().out == ""
    report = json.loads(output.read_text(encoding="utf-8"))
    assert report["operators"] == 50
    assert report["max_reconstruction_error"] < 1e-8
    assert report["dual_completeness_defect"] < 1e-8


def test_universality_maximally_mixed(capsys, config_file):
    path = config_file(experiment="universality", d=2, ancilla="maximally-mixed")
    assert run(["estimate", "run", "--config", path]) == 2
    assert "frame singular: nu = I/d" in capsys.readouterr().err

    path = config_file(experiment="universality", d=2)
    report = run_json(capsys, ["estimate", "run", "--config", path])
    assert report["universal"]
    assert report["lower_bound"] > 0


@pytest.mark.parametrize("d, points, last", [(2, 20, 4.0), (4, 21, 6.0)])
def test_variance_scan(capsys, config_file, tmp_path, d, points, last):
    rows = tmp_path / "scan.csv"
    path = config_file(experiment="variance-scan", d=d, shots=20000, seed=5, csv=str(rows))
    report = run_json(capsys, ["estimate", "run", "--config", path])
    assert report["strictly_decreasing"]
    assert len(report["rows"]) == points
    assert report["rows"][-1]["coefficient"] == pytest.approx(last)
    checked = [row for row in report["rows"] if row["empirical_ratio"] is not None]
    assert [row["p"] for row in checked] == pytest.approx([0.6, 1.0])
    for row in checked:
        assert abs(row["empirical_ratio"] - row["coefficient"]) <= 4 * row["empirical_ratio_std_error"]
    assert len(rows.read_text(encoding="utf-8").splitlines()) == points + 1


def test_scan_purities():
    assert len(scan_purities(2)) == len(scan_purities(3)) == 20
    purities = scan_purities(4)
    assert len(purities) == 21
    assert purities == sorted(purities)
    assert 0.6 in purities
    assert purities[-1] == pytest.approx(1.0)


def test_optimality_demo(capsys, config_file):
    path = config_file(experiment="optimality-demo", d=2, detector="sud", ancilla="pure-basis", shots=20000, seed=11)
    report = run_json(capsys, ["estimate", "run", "--config", path])
    assert report["ratio"] == pytest.approx(4.0, rel=1e-10)
    assert report["delta_xi"] == pytest.approx(4 * report["delta_obs"])
    assert abs(report["empirical_ratio"] - 4.0) <= 4 * report["empirical_ratio_std_error"]
    assert report["min_perturbed_purity_excess"] > 0


def test_haar_check(capsys, config_file):
    path = config_file(experiment="haar-check", d=2, shots=20000, seed=13)
    report = run_json(capsys, ["estimate", "run", "--config", path])
    assert report["swap_identity_error"] < 1e-12
    assert report["first_moment_max_z"] < 4.5
    assert report["second_moment_max_z"] < 4.5

    path = config_file(experiment="haar-check", d=2, shots=500)
    assert run(["estimate", "run", "--config", path]) == 2
    assert "shots >= 1000" in capsys.readouterr().err


def test_sample_data_configs():
    for path in sorted(SAMPLE_DATA.glob("*.json")):
        fields = json.loads(path.read_text(encoding="utf-8"))
        if "experiment" in fields:
            assert ExperimentConfig.load(path).experiment == fields["experiment"]


def test_invalid_input_exit_codes(capsys, config_file, tmp_path):
    assert run(["estimate", "run", "--config", str(tmp_path / "missing.json")]) == 1
    assert run(["estimate", "run", "--d", "1"]) == 2
    path = config_file(experiment="estimate", ancilla="thermal")
    assert run(["estimate", "run", "--config", path]) == 2
    assert run(["covariant", "weyl", "--d", "1"]) == 2
    lines = capsys.readouterr().err.splitlines()
    assert sum(line.startswith("error:") for line in lines) == 4
