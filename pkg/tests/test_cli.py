import json
import subprocess
import sys
from pathlib import Path

import pytest

from gomkit.cli import main

SPEC = {
    "frame_rate_hz": 90.0,
    "classes": [
        {
            "label": "wave",
            "reps": 4,
            "length": 80,
            "noise_sigma": 0.05,
            "default": {"alpha1": 0.4},
            "channels": {
                "A.x": {"alpha1": 1.95, "alpha2": 0.985, "init": [0.0, 1.2]},
                "A.y": {"alpha1": 1.90, "alpha2": 0.98, "init": [4.0, 4.1]},
                "A.z": {"alpha1": 1.85, "alpha2": 0.975, "init": [-3.0, -2.9]},
                "B.x": {"alpha1": 1.80, "alpha2": 0.97, "init": [2.0, 2.2]},
                "B.y": {"alpha1": 1.75, "alpha2": 0.965, "init": [5.0, 5.0]},
                "B.z": {"alpha1": 1.70, "alpha2": 0.96, "init": [1.0, 1.1]},
            },
            "couplings": [{"src": "A.x", "dst": "A.y", "beta": 0.03}],
        },
        {
            "label": "hold",
            "reps": 4,
            "length": 80,
            "noise_sigma": 0.05,
            "channels": {
                "A.x": {"alpha1": 1.0, "init": [20.0, 20.0]},
                "A.y": {"alpha1": 1.0, "init": [-12.0, -12.0]},
            },
        },
    ],
}

TOPOLOGY = {
    "joints": ["A", "B"],
    "parent": {"A": None, "B": "A"},
    "limbs": {"A": "spine", "B": "spine"},
}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cliws")
    (root / "spec.json").write_text(json.dumps(SPEC))
    (root / "topology.json").write_text(json.dumps(TOPOLOGY))
    return root


def run_cli(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def synth_dir(workspace):
    out = workspace / "data"
    code = run_cli(
        "synth",
        "--spec", workspace / "spec.json",
        "--topology", workspace / "topology.json",
        "--seed", 7,
        "--out", out,
    )
    assert code == 0
    return out


@pytest.fixture(scope="module")
def fit_dir(workspace, synth_dir):
    out = workspace / "fit"
    code = run_cli(
        "fit",
        "--data", synth_dir,
        "--topology", workspace / "topology.json",
        "--class-label", "wave",
        "--method", "kf",
        "--seed", 3,
        "--max-iters", 80,
        "--restarts", 0,
        "--out", out,
    )
    assert code == 0
    return out


def test_synth_outputs(synth_dir):
    files = sorted(p.name for p in synth_dir.glob("*.csv"))
    assert files == [f"hold_{i:02d}.csv" for i in range(4)] + [
        f"wave_{i:02d}.csv" for i in range(4)
    ]
    assert (synth_dir / "topology.json").exists()
    assert (synth_dir / "ground_truth.json").exists()
    manifest = json.loads((synth_dir / "manifest.json").read_text())
    assert manifest["command"] == "synth"
    assert manifest["seed"] == 7


def test_synth_is_deterministic(workspace, synth_dir):
    out2 = workspace / "data2"
    assert run_cli(
        "synth",
        "--spec", workspace / "spec.json",
        "--topology", workspace / "topology.json",
        "--seed", 7,
        "--out", out2,
    ) == 0
    for p in sorted(synth_dir.glob("*.csv")):
        assert (out2 / p.name).read_bytes() == p.read_bytes()
    assert (out2 / "ground_truth.json").read_bytes() == (
        synth_dir / "ground_truth.json"
    ).read_bytes()


def test_fit_emits_loadable_exchange_file(fit_dir):
    from gomkit import load_bundle

    bundle = load_bundle(fit_dir / "coefficients.json")
    assert len(bundle.equations) == 6
    assert bundle.class_label == "wave"
    summary = json.loads((fit_dir / "fit_summary.json").read_text())
    assert len(summary["equations"]) == 6


def test_generate_and_metrics_roundtrip(workspace, synth_dir, fit_dir, capsys):
    gen_csv = workspace / "gen.csv"
    code = run_cli(
        "generate",
        "--model", fit_dir / "coefficients.json",
        "--seed-frames", synth_dir / "wave_00.csv",
        "--length", 80,
        "--out", gen_csv,
    )
    assert code == 0
    assert gen_csv.exists()

    code = run_cli("metrics", gen_csv, synth_dir / "wave_00.csv")
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert set(doc) >= {"mae", "rmse", "u1"}
    assert 0.0 <= doc["u1"] <= 1.0


def test_analyze_select_recognize_pipeline(workspace, synth_dir, fit_dir, capsys):
    an_dir = workspace / "analysis"
    assert run_cli("analyze", "--model", fit_dir / "coefficients.json", "--out", an_dir) == 0
    sig = json.loads((an_dir / "significance.json").read_text())
    assert len(sig["equations"]) == 6
    assert (an_dir / "p_values.csv").exists()

    sensors_json = workspace / "sensors.json"
    assert run_cli(
        "select-sensors",
        "--analysis", an_dir / "significance.json",
        "--topology", workspace / "topology.json",
        "--top-k", 3,
        "--out", sensors_json,
    ) == 0
    sensors = json.loads(sensors_json.read_text())
    assert sensors["selected_sensors"]

    assert run_cli(
        "recognize",
        "--data", synth_dir,
        "--topology", workspace / "topology.json",
        "--sensors", sensors_json,
        "--states", 3,
        "--folds", 4,
        "--seed", 1,
    ) == 0
    rec = json.loads(capsys.readouterr().out)
    assert 0.0 <= rec["f1_macro"] <= 1.0


def test_tolerance_bands(workspace, synth_dir, fit_dir):
    out = workspace / "tol"
    assert run_cli(
        "tolerance",
        "--models", fit_dir / "coefficients.json", fit_dir / "coefficients.json",
        "--k-sigma", 2,
        "--out", out,
    ) == 0
    lines = (out / "tolerance_bands.csv").read_text().splitlines()
    assert lines[0] == "target,coefficient,t,mean,std,lower,upper"
    # identical repetitions: zero-width bands
    row = lines[1].split(",")
    assert float(row[4]) == 0.0
    assert row[3] == row[5] == row[6]


def test_import_coeffs_validates_and_predicts(workspace, synth_dir, fit_dir):
    out_json = workspace / "validated.json"
    preds_csv = workspace / "preds.csv"
    assert run_cli(
        "import-coeffs",
        "--model", fit_dir / "coefficients.json",
        "--topology", synth_dir / "topology.json",
        "--data", synth_dir / "wave_00.csv",
        "--predictions", preds_csv,
        "--out", out_json,
    ) == 0
    assert out_json.read_bytes() == (fit_dir / "coefficients.json").read_bytes()
    from gomkit.motion import read_raw_csv

    header, values, _ = read_raw_csv(preds_csv)
    assert values.shape == (78, 6)


def test_unknown_flag_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--bogus"])
    assert exc.value.code == 2


def test_runtime_error_exits_1(tmp_path, capsys):
    code = main(["analyze", "--model", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
    assert code == 1
    err = capsys.readouterr().err
    assert err.startswith("error:")
    assert "\n" not in err.strip()


def test_console_script_entrypoint():
    proc = subprocess.run(
        [sys.executable, "-m", "gomkit.cli", "--version"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "gomkit" in proc.stdout


def test_full_pipeline_script(tmp_path):
    """The synth -> fit -> generate -> metrics -> analyze -> select ->
    tolerance -> recognize chain completes without manual intervention."""
    proc = subprocess.run(
        [
            sys.executable,
            str(Path(__file__).resolve().parents[1] / "scripts" / "run_pipeline.py"),
            "--out", str(tmp_path / "pipe"),
            "--seed", "7",
        ],
        capture_output=True,
        text=True,
        timeout=420,
    )
    assert proc.returncode == 0, proc.stderr[-800:]
    assert "pipeline complete" in proc.stdout
    for artifact in (
        "metrics.json",
        "sensors.json",
        "recognition.json",
        "tolerance/tolerance_bands.csv",
    ):
        assert (tmp_path / "pipe" / artifact).exists()
