"""Command-line entry point: ``courtmetrics analyze | synth | validate | config``.

Failures print one JSON object ``{"error": category, "exit_code": n,
"message": ...}`` on stderr and exit with that code.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import platform
import re
import sys

import numpy as np

from . import __version__, court, export, ingest, pipeline, synth
from .errors import ConfigError, CourtMetricsError, ValidationFailedError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger("courtmetrics")

_SEED_RE = re.compile(r"(?:^|:)seed=(\d+)(?:$|:)")


def load_config(path: str | None) -> pipeline.PipelineConfig:
    if path is None:
        return pipeline.PipelineConfig()
    try:
        with open(path, "rb") as fh:
            obj = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path!r}: {exc}") from None
    return pipeline.PipelineConfig.from_dict(obj)


def _read_stream(path: str):
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read detections {path!r}: {exc.strerror}") from None
    header, frames = ingest.parse_stream(data)
    return data, header, frames


def _court_path(cfg: pipeline.PipelineConfig) -> str | None:
    # the environment variable wins over the config file
    return os.environ.get(court.COURT_ENV_VAR) or cfg.court.model or None


def seed_from_source(source_id: str) -> int | None:
    m = _SEED_RE.search(source_id)
    return int(m.group(1)) if m else None


def build_manifest(cfg, data: bytes, header, result, model, files) -> dict:
    fps = header.fps
    return {
        "tool": "courtmetrics",
        "versions": {
            "courtmetrics": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "config_sha256": cfg.digest(),
        "config": cfg.to_dict(),
        "thresholds": {
            **cfg.to_dict()["thresholds"],
            "min_gap_frames": cfg.event_config(fps).gap(fps),
        },
        "input": {"sha256": hashlib.sha256(data).hexdigest(), "source_id": header.source_id},
        "seed": seed_from_source(header.source_id),
        "fps": fps,
        "court_model": model.name,
        "calibration": cfg.calibration.mode,
        "velocity_space": result.velocity_space,
        "outputs": sorted(files),
    }


def cmd_analyze(args) -> int:
    cfg = load_config(args.config)
    if args.calibration:
        cfg = pipeline.PipelineConfig.from_dict(
            {**cfg.to_dict(), "calibration": {**cfg.to_dict()["calibration"], "mode": args.calibration}}
        )
    model = court.load_court_model(_court_path(cfg))
    data, header, frames = _read_stream(args.detections)
    result = pipeline.analyze(header, frames, cfg, model)
    files = export.write_analysis(args.out_dir, result, cfg.outputs)
    manifest = build_manifest(cfg, data, header, result, model, files + [cfg.outputs.manifest])
    export.write_text(os.path.join(args.out_dir, cfg.outputs.manifest), export.dumps(manifest))
    logger.info("%d shots, %d frames -> %s", len(result.shots), len(frames), args.out_dir)
    return 0


def cmd_synth(args) -> int:
    script = synth.load_script(args.script)
    header, frames, truth = synth.generate_rally(script, court.load_court_model())
    cfg = synth.CorruptionConfig(args.sigma, args.dropout, args.low_conf, args.seed)
    frames = synth.corrupt(frames, cfg)
    header = ingest.StreamHeader(
        header.fps, header.frame_width, header.frame_height, f"{header.source_id}:seed={args.seed}"
    )
    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "stream.jsonl"), "wb") as fh:
        fh.write(ingest.serialize_stream(header, frames))
    gt = truth.to_dict()
    gt["corruption"] = {
        "sigma_px": cfg.position_noise_sigma_px,
        "dropout": cfg.dropout_prob,
        "low_conf": cfg.low_conf_prob,
        "seed": cfg.seed,
        "rng": "PCG64",
    }
    export.write_text(os.path.join(args.out_dir, "ground_truth.json"), export.dumps(gt))
    return 0


def cmd_validate(args) -> int:
    _, header, frames = _read_stream(args.detections)
    report = ingest.validate_stream(header, frames)
    sys.stdout.write(export.dumps(report.to_dict()))
    if not report.ok:
        raise ValidationFailedError(f"{len(report.errors)} validation error(s)")
    return 0


def cmd_config(args) -> int:
    sys.stdout.write(export.dumps(load_config(args.config).to_dict()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="courtmetrics", description="Tennis rally analytics from detections.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="run the full pipeline on a detection stream")
    a.add_argument("--detections", required=True, help="JSON Lines detection stream")
    a.add_argument("--config", help="TOML configuration (defaults if omitted)")
    a.add_argument("--out-dir", required=True)
    a.add_argument("--calibration", choices=("homography", "scalar"), help="override calibration.mode")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("synth", help="render a rally script to a detection stream plus ground truth")
    s.add_argument("--script", required=True)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--sigma", type=float, default=0.0, help="pixel noise standard deviation")
    s.add_argument("--dropout", type=float, default=0.0, help="ball dropout probability")
    s.add_argument("--low-conf", type=float, default=0.0, help="probability of a low-confidence ball")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synth)

    v = sub.add_parser("validate", help="check a detection stream and report coverage")
    v.add_argument("--detections", required=True)
    v.set_defaults(func=cmd_validate)

    c = sub.add_parser("config", help="print the effective configuration as JSON")
    c.add_argument("--config")
    c.set_defaults(func=cmd_config)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except CourtMetricsError as exc:
        err = {"error": exc.category, "exit_code": exc.exit_code, "message": str(exc)}
        sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
