#!/usr/bin/env python3
"""End-to-end synthetic run: generate scenes, calibrate, estimate, evaluate.

Everything flows through the command-line interface, so the outputs under the
chosen directory are byte-reproducible for a fixed --seed.

Usage: python scripts/run_synthetic_suite.py [--out OUT_DIR] [--seed N]
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from monorange.cli import main as cli

REPO = Path(__file__).resolve().parent.parent
SCENES = REPO / "scenes"


def run(*argv):
    code = cli([str(a) for a in argv])
    if code != 0:
        sys.exit(code)


def write_regression_frames(path: Path, seed: int):
    """Labeled person-box features lying exactly on a published profile's law."""
    a, b, c = -2.42, -1.29, 0.0043
    rng = np.random.default_rng(seed)
    with open(path, "w") as fh:
        for d in (2.0, 3.0, 4.0):
            for _ in range(10):
                w = float(rng.uniform(400, 800))
                h = (d - a * w) / (b + c * w)
                fh.write(json.dumps({"w_b": w, "h_b": h, "true_distance_m": d}) + "\n")


def write_focal_samples(path: Path):
    """Reference frames of the 0.63 m vest at 3 m (constant, like a hover shot)."""
    bbox = {"x_min": 540.0, "y_min": 193.0, "x_max": 740.0, "y_max": 193.0 + 334.32,
            "resolution_w": 1280, "resolution_h": 720}
    with open(path, "w") as fh:
        for _ in range(50):
            fh.write(json.dumps({"bbox": bbox, "object_height_m": 0.63,
                                 "true_distance_m": 3.0}) + "\n")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/synthetic_suite")
    parser.add_argument("--seed", type=int, default=17)
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = args.seed

    print("== synthesize scenes")
    run("synth", "--scene", SCENES / "calib_2p5m.json", "--out-dir", out / "calib25",
        "--seed", seed)
    run("synth", "--scene", SCENES / "calib_4m.json", "--out-dir", out / "calib40",
        "--seed", seed)
    run("synth", "--scene", SCENES / "static_mixed.json", "--out-dir", out / "static",
        "--seed", seed)
    run("synth", "--scene", SCENES / "drift_run.json", "--out-dir", out / "drift",
        "--seed", seed)

    print("== calibrate")
    depth_profile = out / "depth_profile.json"
    run("calibrate", "depth",
        "--stream", out / "calib25" / "frames.jsonl",
        "--stream", out / "calib40" / "frames.jsonl",
        "--pair", "2.5,4.0", "--vip-id", "S1", "--out", depth_profile)

    regression_frames = out / "regression_frames.jsonl"
    write_regression_frames(regression_frames, seed)
    run("calibrate", "regression", "--frames", regression_frames, "--mode", "three",
        "--vip-id", "S1", "--out", out / "regression_profile.json")

    focal_samples = out / "focal_samples.jsonl"
    write_focal_samples(focal_samples)
    run("focal", "--samples", focal_samples, "--fov-deg", "82.6",
        "--out", out / "camera_profile.json")

    print("== estimate (static scene, three estimators)")
    static_stream = out / "static" / "frames.jsonl"
    run("estimate", "--stream", static_stream, "--estimator", "geometric",
        "--camera-profile", out / "camera_profile.json", "--out", out / "est_geo.jsonl")
    run("estimate", "--stream", static_stream, "--estimator", "geometric_star",
        "--camera-profile", out / "camera_profile.json", "--out", out / "est_geostar.jsonl")
    run("estimate", "--stream", static_stream, "--estimator", "neo_norc",
        "--depth-profile", depth_profile, "--out", out / "est_neo_norc.jsonl")

    print("== estimate (drift scene, online recalibration)")
    run("estimate", "--stream", out / "drift" / "frames.jsonl", "--estimator", "neo",
        "--depth-profile", depth_profile, "--gt-source", "truth", "--fps", "10",
        "--seed", seed, "--out", out / "est_neo_rc.jsonl")

    print("== evaluate")
    for name, stream in [
        ("geo", static_stream),
        ("geostar", static_stream),
        ("neo_norc", static_stream),
        ("neo_rc", out / "drift" / "frames.jsonl"),
    ]:
        run("evaluate", "--estimates", out / f"est_{name}.jsonl", "--truth", stream,
            "--out-dir", out / f"metrics_{name}")

    print(f"\nDone. Outputs under {out}/")


if __name__ == "__main__":
    main()
