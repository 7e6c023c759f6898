import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from designham_sim.cli import (
    SCHEMAS,
    ConfigError,
    ExperimentConfig,
    RunManifest,
    emit_outputs,
    main,
    run_experiment,
)


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def run_main(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


FP = {"mode": "frame-potential", "molecule": "random:3", "ensemble_size": 8, "rng_seed": 4}


def test_empty_records_give_header_only(tmp_path):
    emit_outputs([], SCHEMAS["frame_potential"], tmp_path)
    text = (tmp_path / "frame_potential.csv").read_bytes()
    assert text == b"t_s,k,f_tilde,f,ensemble_size,pair_count\n"


def test_float_formatting(tmp_path):
    emit_outputs([(0.1, 2, 1 / 3)], SCHEMAS["spectra"], tmp_path)
    rows = read_csv(tmp_path / "spectra.csv")
    assert rows[1] == ["0.10000000000000001", "2", "0.33333333333333331"]
    assert float(rows[1][2]) == 1 / 3


def test_record_validation(tmp_path):
    with pytest.raises(ValueError):
        emit_outputs([(1, 2)], SCHEMAS["spectra"], tmp_path)
    with pytest.raises(ValueError):
        emit_outputs([{"t_s": 0, "nu": 1}], SCHEMAS["spectra"], tmp_path)


def test_unwritable_directory(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        emit_outputs([], SCHEMAS["typical"], blocker / "sub")


def test_typical_command(capsys, tmp_path):
    code, out, _ = run_main(["typical", "--n", 12], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "nu,intensity" and len(lines) == 26
    assert lines[1].startswith("-12,") and lines[-1].startswith("12,")
    assert float(lines[13].split(",")[1]) == pytest.approx(0.1612, abs=5e-5)
    assert run_main(["typical", "--n", 4, "--output-dir", tmp_path], capsys)[0] == 0
    assert len(read_csv(tmp_path / "typical.csv")) == 10


def test_verify_oracle_command(capsys, tmp_path):
    code, out, _ = run_main(["verify-oracle", "--n", 2, "--trials", 50, "--seed", 1,
                             "--output-dir", tmp_path], capsys)
    report = json.loads(out)
    assert code == 0 and report["passed"]
    assert report["max_distance"] < 1e-10 and report["trials"] == 50
    assert len(read_csv(tmp_path / "oracle.csv")) == 51


def test_frame_potential_run(tmp_path):
    manifest = run_experiment(ExperimentConfig.from_dict(FP), tmp_path)
    rows = read_csv(tmp_path / "frame_potential.csv")
    assert tuple(rows[0]) == ("t_s", "k", "f_tilde", "f", "ensemble_size", "pair_count")
    assert [r[1] for r in rows[1:]] == ["1", "2"]
    assert rows[1][4] == "8" and rows[1][5] == "56"
    assert set(manifest.outputs) == {"frame_potential.csv", "haar_frame_potential.csv",
                                     "fp_vs_size.csv"}
    assert manifest.verify(tmp_path)
    stored = json.loads((tmp_path / "manifest.json").read_text())
    assert stored["config"]["rng_seed"] == 4
    assert stored["code_version"] == manifest.code_version
    assert set(stored["seeds"]) == {"master", "design", "pairs", "haar"}


def test_byte_identical_reruns(tmp_path):
    config = ExperimentConfig.from_dict({**FP, "mode": "convergence"})
    run_experiment(config, tmp_path / "a", threads=1)
    run_experiment(config, tmp_path / "b", threads=2)
    assert (tmp_path / "a" / "convergence.csv").read_bytes() == \
        (tmp_path / "b" / "convergence.csv").read_bytes()
    rows = read_csv(tmp_path / "a" / "convergence.csv")
    assert len(rows) == 1 + 5 * 2
    assert float(rows[1][2]) == pytest.approx(64.0)


def test_mqc_run(tmp_path):
    config = ExperimentConfig.from_dict({"mode": "mqc", "molecule": "random:4",
                                         "initial_operator": "Z2", "rng_seed": 5,
                                         "phi_points": 16})
    manifest = run_experiment(config, tmp_path)
    for name in ("spectra.csv", "signal.csv", "epsilon.json", "schedule.json"):
        assert name in manifest.outputs
    spectra = read_csv(tmp_path / "spectra.csv")
    assert spectra[0] == ["t_s", "nu", "intensity"] and len(spectra) == 1 + 5 * 9
    signal = read_csv(tmp_path / "signal.csv")
    assert signal[0] == ["t_s", "phi", "re_S", "im_S"] and len(signal) == 1 + 2 * 16
    eps = json.loads((tmp_path / "epsilon.json").read_text())
    assert len(eps["series"]) == 5 and eps["initial_operator"] == "IZII"
    # total intensity is conserved at every time
    by_time = {}
    for t, _, i in spectra[1:]:
        by_time[t] = by_time.get(t, 0.0) + float(i)
    np.testing.assert_allclose(list(by_time.values()), 1.0, atol=1e-9)


def test_mqc_run_with_bundled_schedule(tmp_path):
    config = ExperimentConfig.from_dict({"mode": "mqc", "schedule": "experiment1",
                                         "rounds": 1, "phi_points": 8,
                                         "initial_operator": "Z7"})
    manifest = run_experiment(config, tmp_path)
    assert manifest.seeds["schedule"] is None
    assert manifest.summary["final_epsilon"] > 0


def test_otoc_and_oracle_runs(tmp_path):
    otoc = run_experiment(ExperimentConfig.from_dict(
        {"mode": "otoc-check", "ensemble_size": 4, "rng_seed": 1}), tmp_path / "o")
    assert otoc.summary["max_difference"] < 1e-8
    oracle = run_experiment(ExperimentConfig.from_dict(
        {"mode": "verify-oracle", "n": 2, "trials": 5, "rng_seed": 1}), tmp_path / "v")
    assert oracle.summary["passed"]


@pytest.mark.parametrize("doc, fragment", [
    ({"mode": "frame-potential"}, "rng_seed"),
    ({"mode": "nope", "rng_seed": 1}, "mode"),
    ({"rng_seed": 1}, "mode"),
    ({"mode": "mqc", "rng_seed": 1, "colour": "red"}, "unknown"),
    ({"mode": "verify-oracle", "rng_seed": 1}, "n"),
    ({"mode": "verify-oracle", "rng_seed": 1, "n": 11}, "n"),
    ({"mode": "frame-potential", "rng_seed": 1, "k_list": [0]}, "k_list"),
    ({"mode": "frame-potential", "rng_seed": 1, "period_s": -1}, "period"),
])
def test_config_errors(doc, fragment):
    with pytest.raises(ConfigError, match=fragment):
        ExperimentConfig.from_dict(doc)


def test_invalid_config_exit_code(tmp_path, capsys):
    path = write_config(tmp_path, {"mode": "frame-potential"})
    code, _, err = run_main(["run", path], capsys)
    assert code != 0
    error = json.loads(err)
    assert error["type"] == "ConfigError" and "rng_seed" in error["error"]
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run_main(["run", bad], capsys)[0] != 0


def test_bad_operator_is_reported(tmp_path, capsys):
    path = write_config(tmp_path, {"mode": "mqc", "molecule": "random:3", "rng_seed": 1,
                                   "initial_operator": "Z9"})
    code, _, err = run_main(["run", path, "--output-dir", tmp_path / "out"], capsys)
    assert code == 2 and "error" in json.loads(err)


def test_run_command_end_to_end(tmp_path, monkeypatch):
    monkeypatch.setenv("DESIGNHAM_THREADS", "2")
    path = write_config(tmp_path, {"mode": "otoc-check", "ensemble_size": 3, "rng_seed": 2,
                                   "n_list": [1], "k_list": [1]})
    proc = subprocess.run([sys.executable, "-m", "designham_sim.cli", "run", str(path),
                           "--output-dir", str(tmp_path / "out")],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["outputs"] == ["otoc.csv"]
    assert (tmp_path / "out" / "manifest.json").exists()


def test_manifest_detects_tampering(tmp_path):
    manifest = run_experiment(ExperimentConfig.from_dict(FP), tmp_path)
    (tmp_path / "frame_potential.csv").write_text("changed\n")
    assert not RunManifest.verify(manifest, tmp_path)
