import json

import numpy as np
import pytest
import yaml
from PIL import Image

from camsynth.cli import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, main
from camsynth.config import ConfigError, RunConfig, SplitRequest
from camsynth.dataset import DatasetManifest, list_frames, read_pose


def _toy_config(out_dir, **overrides):
    kwargs = dict(
        scene_name="toy",
        output=str(out_dir / "dataset"),
        procedural={"kind": "box_room", "size": [6.0, 6.0, 3.0], "subdiv": 1},
        seed=4,
        total_frames=24,
        candidates_per_path=8,
        frame_spacing=0.25,
        viewpoint_clearance_min=0.5,
        resample_limit=8,
        split=SplitRequest(train_fraction=0.75),
    )
    kwargs.update(overrides)
    from camsynth.render import CameraIntrinsics

    kwargs.setdefault("camera", CameraIntrinsics(
        fx=60.0, fy=60.0, cx=32.0, cy=24.0, width=64, height=48))
    return RunConfig(**kwargs)


class TestRunConfig:
    def test_yaml_round_trip_identity(self, tmp_path):
        cfg = _toy_config(tmp_path)
        cfg.save(tmp_path / "run.yaml")
        loaded = RunConfig.load(tmp_path / "run.yaml")
        assert loaded == cfg
        assert loaded.to_dict() == cfg.to_dict()

    def test_unsupported_schema_version(self, tmp_path):
        cfg = _toy_config(tmp_path)
        d = cfg.to_dict()
        d["schema_version"] = 999
        (tmp_path / "bad.yaml").write_text(yaml.safe_dump(d))
        with pytest.raises(ConfigError, match="schema_version"):
            RunConfig.load(tmp_path / "bad.yaml")

    def test_needs_mesh_or_procedural(self):
        with pytest.raises(ConfigError, match="mesh.*procedural"):
            RunConfig(scene_name="x", output="y")

    def test_unknown_key_rejected(self, tmp_path):
        d = _toy_config(tmp_path).to_dict()
        d["not_a_real_option"] = 1
        (tmp_path / "bad.yaml").write_text(yaml.safe_dump(d))
        with pytest.raises(ConfigError):
            RunConfig.load(tmp_path / "bad.yaml")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            RunConfig.load(tmp_path / "absent.yaml")

    def test_split_validation(self):
        with pytest.raises(ConfigError):
            SplitRequest()
        with pytest.raises(ConfigError):
            SplitRequest(train_fraction=2.0)

    def test_unknown_procedural_kind(self, tmp_path):
        cfg = _toy_config(tmp_path, procedural={"kind": "torus"})
        with pytest.raises(ConfigError, match="torus"):
            cfg.load_scene_mesh()

    def test_angle_ranges_converted_to_radians(self, tmp_path):
        cfg = _toy_config(tmp_path, pitch_range_deg=(-30.0, 30.0))
        bounds = cfg.sampling_bounds(cfg.load_scene_mesh())
        lo, hi = bounds.pitch_range
        assert (lo, hi) == pytest.approx((-np.pi / 6, np.pi / 6))


@pytest.fixture(scope="module")
def generated(tmp_path_factory):
    """One small end-to-end `generate` run shared by the CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    cfg = _toy_config(root)
    cfg.save(root / "run.yaml")
    code = main(["generate", "--config", str(root / "run.yaml")])
    assert code == EXIT_OK
    return root, cfg


class TestGenerate:
    def test_layout_and_manifest(self, generated):
        root, cfg = generated
        scene = root / "dataset"
        manifest = DatasetManifest.load(scene)
        assert manifest.scene == "toy"
        assert manifest.train_frames + manifest.test_frames == 24
        n_train = len(list_frames(scene / "train"))
        n_test = len(list_frames(scene / "test"))
        assert n_train == manifest.train_frames
        assert n_test == manifest.test_frames
        # train fraction honored to within one path
        assert n_train >= 0.75 * 24 - max(
            json.load(open(scene / "report.json"))["path_frame_counts"]
        )

    def test_report_json(self, generated):
        root, _ = generated
        report = json.load(open(root / "dataset" / "report.json"))
        assert report["frames_emitted"] == 24
        assert report["master_seed"] == 4
        assert report["frames_per_second"] > 0

    def test_images_written_at_config_resolution(self, generated):
        root, cfg = generated
        scene = root / "dataset"
        seq, idx = list_frames(scene / "train")[0]
        img = Image.open(scene / "train" / seq / f"frame-{idx:06d}.color.png")
        assert img.size == (64, 48)
        depth = Image.open(scene / "train" / seq / f"frame-{idx:06d}.depth.png")
        assert np.asarray(depth).dtype == np.uint16

    def test_poses_are_rigid(self, generated):
        root, _ = generated
        scene = root / "dataset"
        for split in ("train", "test"):
            for seq, idx in list_frames(scene / split):
                m = read_pose(scene / split / seq / f"frame-{idx:06d}.pose.txt")
                r = m[:3, :3]
                np.testing.assert_allclose(r @ r.T, np.eye(3), atol=1e-9)

    def test_missing_config_exits_validation(self, tmp_path, capsys):
        code = main(["generate", "--config", str(tmp_path / "nope.yaml")])
        assert code == EXIT_VALIDATION
        assert "stage cli" in capsys.readouterr().err

    def test_missing_mesh_file_names_stage(self, tmp_path, capsys):
        cfg = _toy_config(tmp_path, procedural=None,
                          mesh=str(tmp_path / "missing.obj"))
        cfg.save(tmp_path / "run.yaml")
        code = main(["generate", "--config", str(tmp_path / "run.yaml")])
        assert code == EXIT_VALIDATION
        assert "stage mesh_io" in capsys.readouterr().err


class TestCorruptAndStats:
    def test_corrupt_then_stats(self, generated, tmp_path, capsys):
        root, _ = generated
        src = root / "dataset"
        dst = tmp_path / "corrupted"
        code = main(["corrupt", "--in", str(src), "--out", str(dst),
                     "--pos-median", "0.1", "--ori-median", "5.0",
                     "--seed", "3"])
        assert code == EXIT_OK
        capsys.readouterr()

        code = main(["stats", str(src), str(dst)])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        pos_line = next(l for l in out.splitlines()
                        if l.startswith("median position error:"))
        ori_line = next(l for l in out.splitlines()
                        if l.startswith("median orientation error:"))
        assert float(pos_line.split(":")[1].split()[0]) == pytest.approx(0.1, rel=1e-6)
        assert float(ori_line.split(":")[1].split()[0]) == pytest.approx(5.0, rel=1e-6)

    def test_stats_symmetry(self, generated, tmp_path, capsys):
        root, _ = generated
        src = root / "dataset"
        dst = tmp_path / "c"
        main(["corrupt", "--in", str(src), "--out", str(dst),
              "--pos-median", "0.2", "--seed", "1"])
        capsys.readouterr()
        main(["stats", str(src), str(dst)])
        fwd = capsys.readouterr().out
        main(["stats", str(dst), str(src)])
        rev = capsys.readouterr().out
        assert [l for l in fwd.splitlines() if "error" in l] == \
               [l for l in rev.splitlines() if "error" in l]

    def test_self_stats_zero(self, generated, capsys):
        root, _ = generated
        src = str(root / "dataset")
        assert main(["stats", src, src]) == EXIT_OK
        out = capsys.readouterr().out
        assert "median position error: 0.000000 m" in out
        assert "median orientation error: 0.000000 deg" in out

    def test_stats_report_dir_artifacts(self, generated, tmp_path, capsys):
        root, _ = generated
        src = str(root / "dataset")
        rep = tmp_path / "report"
        assert main(["stats", src, src, "--report-dir", str(rep)]) == EXIT_OK
        csv_path = rep / "pose_errors.csv"
        assert csv_path.exists()
        header = csv_path.read_text().splitlines()[0]
        assert header == "split,sequence,frame,position_error_m,orientation_error_deg"
        png = (rep / "pose_errors.png").read_bytes()
        assert png[:8] == b"\x89PNG\r\n\x1a\n"

    def test_corrupt_missing_input(self, tmp_path, capsys):
        code = main(["corrupt", "--in", str(tmp_path / "none"),
                     "--out", str(tmp_path / "o")])
        assert code == EXIT_VALIDATION

    def test_corrupted_images_byte_identical(self, generated, tmp_path):
        root, _ = generated
        src = root / "dataset"
        dst = tmp_path / "c2"
        main(["corrupt", "--in", str(src), "--out", str(dst),
              "--pos-median", "0.5"])
        seq, idx = list_frames(src / "train")[0]
        name = f"frame-{idx:06d}.color.png"
        assert (dst / "train" / seq / name).read_bytes() == \
               (src / "train" / seq / name).read_bytes()


class TestInspect:
    def test_consistent_dataset_exit_ok(self, generated, capsys):
        root, _ = generated
        assert main(["inspect", str(root / "dataset")]) == EXIT_OK
        assert "dataset consistent" in capsys.readouterr().out

    def test_report_dir_artifacts(self, generated, tmp_path, capsys):
        root, _ = generated
        rep = tmp_path / "rep"
        code = main(["inspect", str(root / "dataset"),
                     "--report-dir", str(rep)])
        assert code == EXIT_OK
        assert (rep / "inspect.csv").exists()
        assert (rep / "spacing_hist.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_broken_dataset_exit_runtime(self, generated, tmp_path, capsys):
        import shutil

        root, _ = generated
        copy = tmp_path / "broken"
        shutil.copytree(root / "dataset", copy)
        seq, idx = list_frames(copy / "train")[0]
        (copy / "train" / seq / f"frame-{idx:06d}.pose.txt").unlink()
        code = main(["inspect", str(copy)])
        assert code == EXIT_RUNTIME
        assert "ISSUE" in capsys.readouterr().out

    def test_missing_dir(self, tmp_path):
        assert main(["inspect", str(tmp_path / "ghost")]) == EXIT_VALIDATION


class TestRenderCommand:
    def test_debug_render_byte_identical(self, tmp_path, capsys):
        cfg = _toy_config(tmp_path)
        cfg.save(tmp_path / "run.yaml")
        args = ["render", "--config", str(tmp_path / "run.yaml"),
                "--pose", "3.0", "3.0", "1.5", "0", "0", "45"]
        assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
        assert main(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
        for suffix in (".color.png", ".depth.png", ".pose.txt"):
            assert (tmp_path / ("a" + suffix)).read_bytes() == \
                   (tmp_path / ("b" + suffix)).read_bytes()

    def test_pose_file_is_rigid(self, tmp_path):
        cfg = _toy_config(tmp_path)
        cfg.save(tmp_path / "run.yaml")
        main(["render", "--config", str(tmp_path / "run.yaml"),
              "--pose", "3", "3", "1.5", "0", "0", "0",
              "--out", str(tmp_path / "dbg")])
        m = read_pose(tmp_path / "dbg.pose.txt")
        np.testing.assert_allclose(m[:3, 3], [3.0, 3.0, 1.5], atol=1e-12)
