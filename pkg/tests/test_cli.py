"""Exit codes, artifact layout, config merging, and determinism of the CLI."""

from __future__ import annotations

import json

import numpy as np

from ripshadow.cli import main
from ripshadow.models import PointCloud


def test_inverse_tower_example_succeeds(tmp_path):
    out = tmp_path / "run1.json"
    code = main(
        [
            "tower",
            "--model", "circle", "--radius", "1",
            "--beta-grid", "0.5,0.4,0.3,0.2",
            "--object", "shadow-nerve",
            "--dim", "1", "--seed", "7",
            "--out", str(out),
        ]
    )
    assert code == 0
    report = json.loads(out.read_text())
    assert report["verdict"] == "consistent"
    assert report["stabilized"]["tower"] == 1


def test_increasing_scale_grid_is_a_usage_error(tmp_path):
    code = main(["tower", "--model", "circle", "--beta-grid", "0.2,0.5"])
    assert code == 64


def test_missing_subcommand_and_unknown_flag_are_usage_errors():
    assert main([]) == 64
    assert main(["tower", "--frobnicate"]) == 64


def test_fault_injection_exits_two(tmp_path):
    out = tmp_path / "bad.json"
    code = main(
        ["tower", "--model", "circle", "--beta-grid", "0.7,0.6,0.5,0.4", "--out", str(out)]
    )
    assert code == 2
    report = json.loads(out.read_text())
    assert report["verdict"] == "out-of-regime"
    assert report["towers"] == {}


def test_identical_runs_produce_identical_bytes(tmp_path):
    args = [
        "tower", "--model", "circle",
        "--beta-grid", "0.5,0.4,0.3", "--n", "60", "--seed", "3",
    ]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_reconstruct_example_and_gated_variant(tmp_path):
    out = tmp_path / "rec.json"
    curve = tmp_path / "curve.csv"
    base = [
        "reconstruct", "--model", "circle",
        "--tau", "0.02", "--zeta", "0.05", "--n", "126", "--seed", "7",
        "--out", str(out), "--curve-csv", str(curve),
    ]
    assert main(base + ["--beta", "0.2"]) == 0
    result = json.loads(out.read_text())
    assert result["verdict"] == "ok"
    assert curve.read_text().startswith("x0,x1\n")
    # crowding the scale with noise flips the exit code
    assert main(base + ["--beta", "0.1"]) == 2


def test_file_pipeline_sample_rips_homology(tmp_path, capsys):
    pts = tmp_path / "pts.csv"
    cx = tmp_path / "cx.json"
    assert main(["sample", "--model", "circle", "--n", "40", "--seed", "3", "--out", str(pts)]) == 0
    assert PointCloud.from_csv(str(pts)).n == 40
    assert main(["rips", "--points", str(pts), "--beta", "0.4", "--out", str(cx)]) == 0
    assert main(["homology", "--complex", str(cx), "--up-to", "1"]) == 0
    payload = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert payload == {"betti": [1, 1], "up_to": 1}


def test_shadow_and_oracle_subcommands(tmp_path):
    pts = tmp_path / "pts.csv"
    nerve = tmp_path / "nerve.json"
    small = tmp_path / "small.csv"
    cx = tmp_path / "cx.json"
    assert main(["sample", "--model", "circle", "--n", "40", "--seed", "3", "--out", str(pts)]) == 0
    assert main(["shadow", "--points", str(pts), "--beta", "0.4", "--out", str(nerve)]) == 0
    stored = json.loads(nerve.read_text())
    assert len(stored["cells"]) == stored["n"] == 40
    assert main(["sample", "--model", "circle", "--n", "14", "--seed", "3", "--out", str(small)]) == 0
    assert main(["oracle", "--check", "rips", "--points", str(small), "--beta", "0.9"]) == 0
    assert main(["rips", "--points", str(pts), "--beta", "0.4", "--out", str(cx)]) == 0
    assert main(["oracle", "--check", "homology", "--complex", str(cx), "--dim", "1"]) == 0
    assert main(["oracle", "--check", "raster", "--points", str(pts), "--beta", "0.4"]) == 0


def test_plot_data_from_tower_and_reconstruction(tmp_path):
    run = tmp_path / "run.json"
    rec = tmp_path / "rec.json"
    plots = tmp_path / "plots"
    assert main(
        ["tower", "--model", "circle", "--beta-grid", "0.5,0.4,0.3", "--n", "60",
         "--out", str(run)]
    ) == 0
    assert main(["plot-data", "--report", str(run), "--out-dir", str(plots)]) == 0
    stages = (plots / "stages.csv").read_text().splitlines()
    assert stages[0] == "stage,beta,n,rank_m"
    assert len(stages) == 4
    assert (plots / "rank-table.csv").read_text().splitlines()[0] == "i,j,rank"

    assert main(
        ["reconstruct", "--model", "circle", "--tau", "0.02", "--zeta", "0.05",
         "--beta", "0.2", "--n", "126", "--out", str(rec)]
    ) == 0
    assert main(["plot-data", "--report", str(rec), "--out-dir", str(plots)]) == 0
    curve_rows = (plots / "curve.csv").read_text().splitlines()
    assert curve_rows[0] == "x0,x1"
    assert len(curve_rows) == 1 + 126


def test_plot_data_of_a_gated_report_keeps_the_header(tmp_path):
    bad = tmp_path / "bad.json"
    plots = tmp_path / "plots"
    assert main(
        ["tower", "--model", "circle", "--beta-grid", "0.7,0.6,0.5", "--out", str(bad)]
    ) == 2
    assert main(["plot-data", "--report", str(bad), "--out-dir", str(plots)]) == 0
    assert (plots / "stages.csv").read_text() == "stage,beta,n,rank_m\n"


def test_plot_data_names_the_missing_field(tmp_path, capsys):
    junk = tmp_path / "junk.json"
    junk.write_text('{"foo": 1}\n')
    assert main(["plot-data", "--report", str(junk)]) == 1
    err = capsys.readouterr().err
    assert "towers" in err and "curve" in err


def test_config_file_supplies_defaults_and_flags_win(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {"model": "circle", "beta_grid": "0.5,0.4,0.3", "n": 80, "seed": 1}
        )
    )
    out = tmp_path / "run.json"
    assert main(["tower", "--config", str(cfg), "--n", "60", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert all(stage["n"] == 60 for stage in report["stages"])


def test_model_json_file_is_accepted(tmp_path):
    model = tmp_path / "model.json"
    model.write_text(json.dumps({"kind": "circle", "params": {"radius": 2.0}}))
    pts = tmp_path / "pts.csv"
    assert main(["sample", "--model", str(model), "--n", "6", "--out", str(pts)]) == 0
    radii = np.linalg.norm(PointCloud.from_csv(str(pts)).points, axis=1)
    assert np.allclose(radii, 2.0)


def test_thread_cap_env_is_validated(tmp_path, monkeypatch):
    monkeypatch.setenv("RSL_THREADS", "banana")
    assert main(["sample", "--model", "circle", "--n", "4", "--out", str(tmp_path / "p.csv")]) == 64
    monkeypatch.setenv("RSL_THREADS", "2")
    assert main(["sample", "--model", "circle", "--n", "4", "--out", str(tmp_path / "p.csv")]) == 0


def test_no_temp_files_survive_a_run(tmp_path):
    out = tmp_path / "run.json"
    assert main(
        ["tower", "--model", "circle", "--beta-grid", "0.5,0.4,0.3", "--n", "60",
         "--out", str(out)]
    ) == 0
    leftovers = [p.name for p in tmp_path.iterdir() if p.name.startswith(".rsl-tmp-")]
    assert leftovers == []
