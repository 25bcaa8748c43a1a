"""Command-line interface.

Subcommands:
    generate  build a dataset end to end from a YAML config
    corrupt   inject calibrated ground-truth perturbations
    stats     median position/orientation error between two datasets
    render    debug-render a single pose from a config's scene
    inspect   validate a dataset directory against its manifest

Exit codes: 0 success, 1 validation error, 2 runtime error. Report
paths (--report-dir) write delimited CSV output plus matplotlib
figures.
"""

from __future__ import annotations

import argparse
import json
import math
import shutil
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, reporting
from .config import ConfigError, RunConfig
from .corrupt import CorruptionError, CorruptionSpec, corrupt_pose_matrices, pose_errors
from .dataset import (
    COLOR_PATTERN,
    DEPTH_PATTERN,
    POSE_PATTERN,
    SEQ_PATTERN,
    DatasetError,
    DatasetManifest,
    Frame,
    inspect_dataset,
    list_frames,
    read_pose,
    split_paths,
    write_frame,
    write_pose,
)
from .mesh_io import MeshError, decimate
from .pose_math import Pose6D, PoseError
from .raycast import build_bvh
from .render import RenderError, camera_pose_matrix, render
from .selection import SelectionError
from .trajectory import GenerationError, generate_paths

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

_VALIDATION_ERRORS = (ConfigError, MeshError, PoseError, DatasetError,
                      CorruptionError, RenderError, ValueError)
_RUNTIME_ERRORS = (GenerationError, SelectionError, OSError)


class StageFailure(Exception):
    def __init__(self, stage: str, cause: Exception, code: int):
        super().__init__(f"stage {stage}: {cause}")
        self.code = code


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except _RUNTIME_ERRORS as e:
        raise StageFailure(name, e, EXIT_RUNTIME) from e
    except _VALIDATION_ERRORS as e:
        raise StageFailure(name, e, EXIT_VALIDATION) from e


# ---------------------------------------------------------------------------
# generate


def cmd_generate(args) -> int:
    config = _stage("cli", RunConfig.load, args.config)
    mesh = _stage("mesh_io", config.load_scene_mesh)
    gen_cfg = _stage("pose_sampler", config.generation_config, mesh)

    raycast_mesh = mesh
    if config.decimate_ratio < 1.0:
        raycast_mesh = _stage("mesh_io", decimate, mesh, config.decimate_ratio)
    bvh = _stage("raycast", build_bvh, raycast_mesh)

    # phase 1: pose sequence (no rendering)
    poses: list[Pose6D] = []
    path_ids: list[int] = []

    def collect(pose, path_index, frame_index):
        poses.append(pose)
        path_ids.append(path_index)

    t0 = time.perf_counter()
    report = _stage("trajectory_engine", generate_paths, bvh, raycast_mesh,
                    gen_cfg, collect)

    # phase 2: split paths, then render and write every frame
    train_paths, test_paths = _stage(
        "dataset_io", split_paths, report.path_frame_counts,
        config.split.train, config.split.test, config.split.train_fraction,
        config.seed,
    )
    split_of = {pi: "train" for pi in train_paths}
    split_of.update({pi: "test" for pi in test_paths})
    seq_of = {pi: si for si, pi in enumerate(train_paths)}
    seq_of.update({pi: si for si, pi in enumerate(test_paths)})

    scene_dir = Path(config.output)
    counts = {"train": 0, "test": 0}
    frame_in_path: dict[int, int] = {}
    for pose, pid in zip(poses, path_ids):
        split = split_of.get(pid)
        if split is None:
            continue  # path beyond the requested split sizes
        seq_dir = scene_dir / split / SEQ_PATTERN.format(seq_of[pid])
        seq_dir.mkdir(parents=True, exist_ok=True)
        idx = frame_in_path.get(pid, 0)
        frame_in_path[pid] = idx + 1
        rgb, depth = _stage("renderer", render, mesh, config.camera, pose,
                            config.clear_color)
        frame = Frame(index=idx, rgb=rgb, depth=depth,
                      pose=camera_pose_matrix(pose))
        _stage("dataset_io", write_frame, seq_dir, frame)
        counts[split] += 1
    elapsed = time.perf_counter() - t0

    report.elapsed_seconds = elapsed
    report.frames_per_second = report.frames_emitted / elapsed if elapsed > 0 else 0.0
    report.config_echo = config.to_dict()

    manifest = DatasetManifest(
        scene=config.scene_name,
        generator_version=__version__,
        train_frames=counts["train"],
        test_frames=counts["test"],
        intrinsics=config.to_dict()["camera"],
        frame_spacing=config.frame_spacing,
        master_seed=config.seed,
        split_seed=config.seed,
        train_paths=train_paths,
        test_paths=test_paths,
        config=config.to_dict(),
    )
    _stage("dataset_io", manifest.save, scene_dir)
    report.save(scene_dir / "report.json")

    print(f"scene: {config.scene_name}")
    print(f"frames: {report.frames_emitted} "
          f"(train {counts['train']}, test {counts['test']}) "
          f"over {report.paths_generated} paths")
    print(f"rejected candidates: {report.rejected_collision} collision, "
          f"{report.rejected_clearance} clearance")
    print(f"elapsed: {elapsed:.2f} s")
    print(f"frames/sec: {report.frames_per_second:.2f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# corrupt


def _dataset_pose_table(scene_dir: Path):
    """[(split, seq, index)] for every frame, and the (n,4,4) pose stack."""
    keys, poses = [], []
    for split in ("train", "test"):
        for seq, idx in list_frames(scene_dir / split):
            keys.append((split, seq, idx))
            poses.append(read_pose(scene_dir / split / seq / POSE_PATTERN.format(idx)))
    return keys, (np.stack(poses) if poses else np.empty((0, 4, 4)))


def cmd_corrupt(args) -> int:
    src = Path(args.input)
    dst = Path(args.output)
    if not src.exists():
        raise StageFailure("dataset_io", DatasetError(f"no dataset at {src}"),
                           EXIT_VALIDATION)
    spec = _stage("corruptor", CorruptionSpec,
                  args.pos_median, math.radians(args.ori_median), args.seed)
    keys, poses = _stage("dataset_io", _dataset_pose_table, src)
    corrupted = _stage("corruptor", corrupt_pose_matrices, poses, spec)

    for (split, seq, idx), pose in zip(keys, corrupted):
        out_dir = dst / split / seq
        out_dir.mkdir(parents=True, exist_ok=True)
        for pattern in (COLOR_PATTERN, DEPTH_PATTERN):
            shutil.copyfile(src / split / seq / pattern.format(idx),
                            out_dir / pattern.format(idx))
        write_pose(out_dir / POSE_PATTERN.format(idx), pose)
    if (src / "manifest.json").exists():
        with open(src / "manifest.json") as f:
            manifest = json.load(f)
        manifest["notes"] = (
            manifest.get("notes", "")
            + f" | corrupted: pos_median={args.pos_median} m,"
              f" ori_median={args.ori_median} deg, seed={args.seed}"
        )
        dst.mkdir(parents=True, exist_ok=True)
        with open(dst / "manifest.json", "w") as f:
            json.dump(manifest, f, indent=2)
    print(f"corrupted {len(keys)} frames -> {dst}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# stats


def cmd_stats(args) -> int:
    keys_a, poses_a = _stage("dataset_io", _dataset_pose_table, Path(args.dataset_a))
    keys_b, poses_b = _stage("dataset_io", _dataset_pose_table, Path(args.dataset_b))
    if keys_a != keys_b:
        raise StageFailure(
            "dataset_io",
            DatasetError("datasets do not share identical frame indices"),
            EXIT_VALIDATION,
        )
    if not keys_a:
        raise StageFailure("dataset_io", DatasetError("datasets are empty"),
                           EXIT_VALIDATION)
    pos_err, ang_err = _stage("corruptor", pose_errors, poses_a, poses_b)
    med_pos = float(np.median(pos_err))
    med_ang_deg = math.degrees(float(np.median(ang_err)))
    print(f"frames compared: {len(keys_a)}")
    print(f"median position error: {med_pos:.6f} m")
    print(f"median orientation error: {med_ang_deg:.6f} deg")

    if args.report_dir:
        out = reporting.ensure_dir(args.report_dir)
        rows = [
            (split, seq, idx, f"{p:.9g}", f"{math.degrees(a):.9g}")
            for (split, seq, idx), p, a in zip(keys_a, pos_err, ang_err)
        ]
        reporting.write_csv(out / "pose_errors.csv",
                            ["split", "sequence", "frame", "position_error_m",
                             "orientation_error_deg"], rows)
        reporting.save_error_curves(out / "pose_errors.png",
                                    pos_err, np.degrees(ang_err))
        print(f"report written to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# render


def cmd_render(args) -> int:
    config = _stage("cli", RunConfig.load, args.config)
    mesh = _stage("mesh_io", config.load_scene_mesh)
    x, y, z, roll, pitch, yaw = args.pose
    pose = _stage("cli", Pose6D, x, y, z,
                  math.radians(roll), math.radians(pitch), math.radians(yaw))
    rgb, depth = _stage("renderer", render, mesh, config.camera, pose,
                        config.clear_color)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    from PIL import Image

    Image.fromarray(rgb).save(out.with_suffix(".color.png"))
    Image.fromarray(depth).save(out.with_suffix(".depth.png"))
    write_pose(out.with_suffix(".pose.txt"), camera_pose_matrix(pose))
    print(f"wrote {out.with_suffix('.color.png')} and depth/pose files")
    return EXIT_OK


# ---------------------------------------------------------------------------
# inspect


def cmd_inspect(args) -> int:
    scene_dir = Path(args.dataset)
    if not scene_dir.exists():
        raise StageFailure("dataset_io", DatasetError(f"no dataset at {scene_dir}"),
                           EXIT_VALIDATION)
    report = _stage("dataset_io", inspect_dataset, scene_dir)
    for split, info in report["splits"].items():
        print(f"{split}: {info['frames']} frames in {info['sequences']} sequences, "
              f"{info['valid_poses']} valid poses")
    if "spacing" in report:
        s = report["spacing"]
        print(f"spacing: median {s['median']:.4f} m, "
              f"min {s['min']:.4f}, max {s['max']:.4f} over {s['count']} steps")
    for issue in report["issues"]:
        print(f"ISSUE: {issue}")

    if args.report_dir:
        out = reporting.ensure_dir(args.report_dir)
        rows = []
        for split, info in report["splits"].items():
            rows.append((split, info["frames"], info["sequences"], info["valid_poses"]))
        reporting.write_csv(out / "inspect.csv",
                            ["split", "frames", "sequences", "valid_poses"], rows)
        spacing_values = report.get("spacing_values", [])
        reporting.save_histogram(
            out / "spacing_hist.png", spacing_values,
            "consecutive frame spacing", "meters",
            vline=report.get("manifest", {}).get("frame_spacing"),
        )
        print(f"report written to {out}")

    if report["issues"]:
        print(f"{len(report['issues'])} inconsistencies found")
        return EXIT_RUNTIME
    print("dataset consistent")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="camsynth",
        description="Synthetic camera-localization dataset generator.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a dataset from a YAML config")
    p.add_argument("--config", required=True, help="YAML run configuration")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("corrupt", help="perturb a dataset's ground-truth poses")
    p.add_argument("--in", dest="input", required=True, help="source dataset dir")
    p.add_argument("--out", dest="output", required=True, help="destination dir")
    p.add_argument("--pos-median", type=float, default=0.0,
                   help="target median position perturbation (m)")
    p.add_argument("--ori-median", type=float, default=0.0,
                   help="target median orientation perturbation (deg)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("stats", help="median pose errors between two datasets")
    p.add_argument("dataset_a")
    p.add_argument("dataset_b")
    p.add_argument("--report-dir", help="write pose_errors.csv + figures here")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("render", help="render one pose for debugging")
    p.add_argument("--config", required=True, help="YAML run configuration")
    p.add_argument("--pose", type=float, nargs=6, required=True,
                   metavar=("X", "Y", "Z", "ROLL", "PITCH", "YAW"),
                   help="pose: meters and degrees")
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("inspect", help="validate a dataset directory")
    p.add_argument("dataset")
    p.add_argument("--report-dir", help="write inspect.csv + spacing figure here")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StageFailure as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
