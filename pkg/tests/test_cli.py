import json
import os
import shutil
from importlib import resources

import pytest

from courtmetrics import cli, court, ingest, pipeline
from courtmetrics.errors import ConfigError

FIXTURES = os.path.join(os.path.dirname(__file__), os.pardir, "fixtures")
BASELINE = os.path.join(FIXTURES, "baseline-rally.json")


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def stream_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    assert cli.main(["synth", "--script", BASELINE, "--out-dir", str(d), "--seed", "42"]) == 0
    return d


def read_dir(d):
    return {name: (d / name).read_bytes() for name in sorted(os.listdir(d))}


def test_synth_writes_stream_and_truth(stream_dir):
    header, frames = ingest.parse_stream((stream_dir / "stream.jsonl").read_bytes())
    assert header.source_id.endswith(":seed=42")
    gt = json.loads((stream_dir / "ground_truth.json").read_text())
    assert gt["corruption"]["seed"] == 42 and gt["corruption"]["rng"] == "PCG64"
    assert len(frames) > 0


def test_analyze_writes_every_artifact(stream_dir, tmp_path, capsys):
    code, _, err = run(capsys, "analyze", "--detections", str(stream_dir / "stream.jsonl"),
                       "--out-dir", str(tmp_path))
    assert code == 0, err
    names = set(os.listdir(tmp_path))
    out = pipeline.OutputSection()
    expected = {out.metrics, out.shots, out.minicourt, out.tracks, out.manifest}
    expected |= {f"{out.heatmap_prefix}{k}.csv" for k in ("ball", "player1", "player2")}
    assert expected <= names

    manifest = json.loads((tmp_path / out.manifest).read_text())
    assert manifest["seed"] == 42
    assert manifest["thresholds"]["min_gap_frames"] == 15
    assert manifest["thresholds"]["angle_deg"] == pipeline.Thresholds().angle_deg
    assert manifest["config_sha256"] == pipeline.PipelineConfig().digest()
    assert sorted(manifest["outputs"]) == sorted(names)

    gt = json.loads((stream_dir / "ground_truth.json").read_text())
    metrics = json.loads((tmp_path / out.metrics).read_text())
    assert [s["frame"] for s in metrics["shots"]] == [s["frame"] for s in gt["shots"]]


def test_analyze_is_byte_identical(stream_dir, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert cli.main(["analyze", "--detections", str(stream_dir / "stream.jsonl"), "--out-dir", str(d)]) == 0
    assert read_dir(a) == read_dir(b)


def test_scalar_calibration_flag(stream_dir, tmp_path):
    assert cli.main(["analyze", "--detections", str(stream_dir / "stream.jsonl"),
                     "--out-dir", str(tmp_path), "--calibration", "scalar"]) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["calibration"] == "scalar"
    assert manifest["config"]["calibration"]["mode"] == "scalar"


def test_missing_keypoints_is_calibration_unavailable(stream_dir, tmp_path, capsys):
    header, frames = ingest.parse_stream((stream_dir / "stream.jsonl").read_bytes())
    bare = [ingest.DetectionFrame(f.frame_index, f.persons, f.ball, None) for f in frames]
    path = tmp_path / "bare.jsonl"
    path.write_bytes(ingest.serialize_stream(header, bare))
    code, _, err = run(capsys, "analyze", "--detections", str(path), "--out-dir", str(tmp_path / "o"))
    assert code == 6
    assert json.loads(err) == {"error": "calibration-unavailable", "exit_code": 6,
                               "message": json.loads(err)["message"]}


def test_unknown_config_key(stream_dir, tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[thresholds]\nangle = 30.0\n")
    code, _, err = run(capsys, "analyze", "--detections", str(stream_dir / "stream.jsonl"),
                       "--config", str(cfg), "--out-dir", str(tmp_path / "o"))
    assert code == 2 and json.loads(err)["error"] == "config"


def test_config_values_reach_the_manifest(stream_dir, tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[thresholds]\nmin_gap_s = 1.0\n")
    assert cli.main(["analyze", "--detections", str(stream_dir / "stream.jsonl"),
                     "--config", str(cfg), "--out-dir", str(tmp_path / "o")]) == 0
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["thresholds"]["min_gap_frames"] == 30


def test_bad_toml_and_missing_files(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[thresholds\n")
    assert run(capsys, "config", "--config", str(cfg))[0] == 2
    assert run(capsys, "config", "--config", str(tmp_path / "nope.toml"))[0] == 2
    assert run(capsys, "validate", "--detections", str(tmp_path / "nope.jsonl"))[0] == 2


def test_config_dump_equals_module_defaults(capsys):
    code, out, _ = run(capsys, "config")
    assert code == 0
    assert json.loads(out) == json.loads(json.dumps(pipeline.PipelineConfig().to_dict()))


def test_config_round_trips():
    d = pipeline.PipelineConfig().to_dict()
    assert pipeline.PipelineConfig.from_dict(d).to_dict() == d
    with pytest.raises(ConfigError):
        pipeline.PipelineConfig.from_dict({"kalman": {"process_noise": "big"}})
    with pytest.raises(ConfigError):
        pipeline.PipelineConfig.from_dict({"calibration": {"mode": "magic"}})


def test_validate_ok(stream_dir, capsys):
    code, out, _ = run(capsys, "validate", "--detections", str(stream_dir / "stream.jsonl"))
    assert code == 0 and json.loads(out)["ok"] is True


@pytest.mark.parametrize("text, code, category", [
    ('{"fps": 30, "width": 10, "height": 10}\n{"frame": 0\n', 3, "stream-format"),
    ("", 3, "stream-format"),
    ('{"fps": 30, "width": 10, "height": 10}\n{"frame": 2}\n{"frame": 1}\n', 4, "stream-ordering"),
    ('{"fps": 30, "width": 10, "height": 10}\n{"frame": 0, "ball": {"bbox": [0, 0, 1]}}\n', 5, "stream-schema"),
    ('{"fps": -1, "width": 10, "height": 10}\n', 5, "stream-schema"),
])
def test_validate_bad_streams(tmp_path, capsys, text, code, category):
    path = tmp_path / "s.jsonl"
    path.write_text(text)
    got, _, err = run(capsys, "validate", "--detections", str(path))
    assert got == code
    assert json.loads(err)["error"] == category


def test_validate_empty_stream_fails(tmp_path, capsys):
    path = tmp_path / "s.jsonl"
    path.write_text('{"fps": 30, "width": 10, "height": 10}\n')
    code, out, err = run(capsys, "validate", "--detections", str(path))
    assert code == 15
    assert json.loads(out)["ok"] is False
    assert json.loads(err)["error"] == "validation-failed"


def test_court_env_var_overrides_config(stream_dir, tmp_path, monkeypatch, capsys):
    doc = json.loads(resources.files("courtmetrics").joinpath("courts/itf-standard.json").read_text())
    doc["name"] = "renamed-court"
    alt = tmp_path / "alt.json"
    alt.write_text(json.dumps(doc))
    monkeypatch.setenv(court.COURT_ENV_VAR, str(alt))
    assert cli.main(["analyze", "--detections", str(stream_dir / "stream.jsonl"),
                     "--out-dir", str(tmp_path / "o")]) == 0
    assert json.loads((tmp_path / "o" / "manifest.json").read_text())["court_model"] == "renamed-court"

    monkeypatch.setenv(court.COURT_ENV_VAR, str(tmp_path / "missing.json"))
    code, _, err = run(capsys, "analyze", "--detections", str(stream_dir / "stream.jsonl"),
                       "--out-dir", str(tmp_path / "p"))
    assert code == 2 and json.loads(err)["error"] == "config"


def test_seed_from_source():
    assert cli.seed_from_source("synth:rally:seed=12") == 12
    assert cli.seed_from_source("seed=3") == 3
    assert cli.seed_from_source("camera-1") is None
    assert cli.seed_from_source("synth:reseed=4x") is None


def test_script_errors_exit_14(tmp_path, capsys):
    bad = tmp_path / "s.json"
    shutil.copy(BASELINE, bad)
    doc = json.loads(bad.read_text())
    doc["shots"][1]["striker"] = doc["shots"][0]["striker"]
    bad.write_text(json.dumps(doc))
    code, _, err = run(capsys, "synth", "--script", str(bad), "--out-dir", str(tmp_path / "o"))
    assert code == 14 and json.loads(err)["error"] == "script"
