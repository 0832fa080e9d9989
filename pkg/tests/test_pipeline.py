"""Tests for rbdiag_cli.pipeline module"""

import numpy as np
import pytest
from pathlib import Path

from rbdiag_cli.errors import ArtifactIOError, ShapeMismatchError, StageError
from rbdiag_cli.grading import Group, Seeding
from rbdiag_cli.imaging import Mask, Volume, load_mask
from rbdiag_cli.metrics import accuracy, confusion, roc_curve, sensitivity, specificity
from rbdiag_cli.micronet import Model, NetworkConfig, TrainConfig, build_network, save_model, train
from rbdiag_cli.phantom import PhantomSpec, generate_phantom, make_patch_dataset
from rbdiag_cli.pipeline import ClinicalInputs, grade_mask, run_pipeline, segment_volume
from rbdiag_cli.reports import parse_report
from rbdiag_cli.settings import parse_config

SMALL_CONFIG = """
grid.size = 10
grid.slices = 2
grid.stride = 4
grid.views = 2d
net.conv_channels = 3, 4
net.kernel_sizes = 3, 3
net.hidden_units = 5
"""


def biased_model(tumor: bool) -> Model:
    """A network whose output ignores the input and always favours one class."""
    cfg = parse_config(SMALL_CONFIG)
    model = build_network(cfg.net)
    weight, bias = model.weights[-2]
    weight[:] = 0.0
    bias[:] = (-5.0, 5.0) if tumor else (5.0, -5.0)
    return model


def write_model(tmp_path: Path, tumor: bool) -> Path:
    path = tmp_path / "model.rbmodel"
    save_model(biased_model(tumor), path)
    return path


class TestSegmentVolume:
    def test_constant_model_gives_constant_mask(self):
        cfg = parse_config(SMALL_CONFIG)
        vol = generate_phantom(PhantomSpec(dims=(12, 12, 12), tumor_count=0)).volume
        seg = segment_volume(vol, biased_model(tumor=True), cfg.grid, cfg.aggregate)
        assert seg.mask.count == 12 ** 3
        assert len(seg.per_grid) == 1
        assert seg.scores.shape == (12, 12, 12)

    def test_three_views(self):
        cfg = parse_config(SMALL_CONFIG + "grid.views = 2.5d\n")
        vol = generate_phantom(PhantomSpec(dims=(12, 12, 12), tumor_count=0)).volume
        seg = segment_volume(vol, biased_model(tumor=False), cfg.grid, cfg.aggregate)
        assert len(seg.per_grid) == 3
        assert seg.mask.count == 0

    def test_last_batch_with_one_center(self):
        cfg = parse_config(SMALL_CONFIG + "grid.stride = 1\n")
        vol = Volume((5, 13, 1), np.full((5, 13, 1), 0.4))
        seg = segment_volume(vol, biased_model(tumor=True), cfg.grid, cfg.aggregate)
        assert seg.mask.count == 65

    def test_model_grid_mismatch(self):
        cfg = parse_config(SMALL_CONFIG + "grid.size = 12\n")
        vol = Volume((12, 12, 12), np.zeros((12, 12, 12)))
        with pytest.raises(ShapeMismatchError):
            segment_volume(vol, biased_model(tumor=False), cfg.grid, cfg.aggregate)


class TestGradeMask:
    def test_clinical_inputs_applied(self):
        truth = generate_phantom(PhantomSpec(dims=(24, 24, 24), tumor_count=1, diameter_range_mm=(1.5, 2.0)))
        report = grade_mask(truth.mask, 0.25, ClinicalInputs(vitreous_seeding=Seeding.DIFFUSE))
        assert report.group is Group.D

    def test_empty_mask(self):
        truth = generate_phantom(PhantomSpec(dims=(8, 8, 8), tumor_count=0))
        assert grade_mask(truth.mask, 0.25).group is None


class TestRunPipeline:
    def test_missing_model_fails_before_writing(self, tmp_path):
        out_dir = tmp_path / "out"
        vol = Volume((4, 4, 4), np.zeros((4, 4, 4)))
        with pytest.raises(StageError) as exc_info:
            run_pipeline(parse_config(SMALL_CONFIG), vol, tmp_path / "absent.rbmodel", out_dir)
        assert exc_info.value.stage == "segment"
        assert isinstance(exc_info.value.cause, ArtifactIOError)
        assert str(exc_info.value).startswith("segment: ")
        assert not out_dir.exists()

    def test_no_tumor_grades_none(self, tmp_path):
        truth = generate_phantom(PhantomSpec(dims=(12, 12, 12), tumor_count=0))
        result = run_pipeline(
            parse_config(SMALL_CONFIG), truth.volume, write_model(tmp_path, tumor=False), tmp_path / "out", truth.mask
        )
        assert result.mask.count == 0
        assert result.grade.group is None
        assert parse_report(result.grade_text)["group"] == "none"
        assert parse_report(result.metrics_text)["sensitivity"] == "undefined"

    def test_artifacts_written(self, tmp_path):
        truth = generate_phantom(PhantomSpec(dims=(12, 12, 12), tumor_count=0))
        out_dir = tmp_path / "out"
        result = run_pipeline(
            parse_config(SMALL_CONFIG), truth.volume, write_model(tmp_path, tumor=True), out_dir, truth.mask
        )
        for name in ("denoised.rbvol", "scores.rbvol", "mask.rbmask", "grade.txt", "metrics.txt", "manifest.json"):
            assert (out_dir / name).exists()
        assert load_mask(out_dir / "mask.rbmask") == result.mask

    def test_repeat_runs_byte_identical(self, tmp_path):
        truth = generate_phantom(PhantomSpec(dims=(12, 12, 12), tumor_count=1, diameter_range_mm=(1.5, 2.0)))
        model_path = write_model(tmp_path, tumor=False)
        cfg = parse_config(SMALL_CONFIG)
        run_pipeline(cfg, truth.volume, model_path, tmp_path / "a", truth.mask)
        run_pipeline(cfg, truth.volume, model_path, tmp_path / "b", truth.mask)
        for name in ("manifest.json", "grade.txt", "metrics.txt", "scores.rbvol"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_no_out_dir_writes_nothing(self, tmp_path):
        truth = generate_phantom(PhantomSpec(dims=(12, 12, 12), tumor_count=0))
        model_path = write_model(tmp_path, tumor=False)
        result = run_pipeline(parse_config(SMALL_CONFIG), truth.volume, model_path)
        assert result.metrics_text is None
        assert sorted(p.name for p in tmp_path.iterdir()) == ["model.rbmodel"]


@pytest.mark.slow
class TestEndToEnd:
    def test_trained_network_segments_held_out_phantoms(self, tmp_path):
        spec = dict(dims=(24, 24, 24), tumor_count=1, diameter_range_mm=(2.0, 2.5))
        cfg = parse_config(
            "grid.size = 9\ngrid.slices = 1\ngrid.stride = 1\ngrid.views = 2d\n"
            "net.conv_channels = 8\nnet.kernel_sizes = 2\nnet.hidden_units = 16\n"
        )
        truths = [generate_phantom(PhantomSpec(**spec, seed=s)) for s in range(8)]
        patches = make_patch_dataset(truths, per_volume=200, seed=0, n=9, slices=1)
        assert len(patches) == 1600
        model = train(build_network(cfg.net), patches, TrainConfig(learning_rate=0.05, epochs=30, batch_size=16))
        model_path = tmp_path / "model.rbmodel"
        save_model(model, model_path)

        held_out = [generate_phantom(PhantomSpec(**spec, seed=s)) for s in range(100, 104)]
        truth_labels, pred_labels, scores = [], [], []
        for truth in held_out:
            result = run_pipeline(cfg, truth.volume, model_path)
            truth_labels.append(truth.mask.labels)
            pred_labels.append(result.mask.labels)
            scores.append(result.scores)

        dims = (24 * len(held_out), 24, 24)
        truth_mask = Mask(dims, np.concatenate(truth_labels))
        counts = confusion(truth_mask, Mask(dims, np.concatenate(pred_labels)))
        assert accuracy(counts) >= 0.95
        assert sensitivity(counts) >= 0.90
        assert specificity(counts) >= 0.90
        assert roc_curve(np.concatenate(scores), truth_mask).auc >= 0.95
