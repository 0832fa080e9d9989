"""Tests for rbdiag_cli.patcher module"""

import math

import numpy as np
import pytest

from rbdiag_cli.errors import MalformedPatchArchiveError
from rbdiag_cli.imaging import Volume
from rbdiag_cli.patcher import (
    Patch,
    PlaneId,
    SamplingGrid,
    build_grids,
    center_axis,
    enumerate_centers,
    load_patches,
    sample_patch,
    save_patches,
    sphere_point_closed_form,
    sphere_point_count,
    spiral_points,
)


def linear_volume(size: int = 16) -> Volume:
    x, y, z = np.indices((size, size, size), dtype=np.float64)
    return Volume((size,) * 3, (x + 2 * y + 3 * z) / (6 * (size - 1)))


def linear_value(point: np.ndarray, size: int = 16) -> float:
    return (point[0] + 2 * point[1] + 3 * point[2]) / (6 * (size - 1))


class TestSpherePointCount:
    @pytest.mark.parametrize("n, tol", [(50, 0.05), (200, 0.01), (1000, 0.002)])
    def test_discrete_sum_matches_closed_form(self, n, tol):
        discrete = sphere_point_count(n, n)
        closed = sphere_point_closed_form(n)
        assert abs(discrete - closed) / closed < tol

    def test_closed_form_value(self):
        assert sphere_point_closed_form(10) == pytest.approx(400 / math.pi)

    def test_rejects_zero_scale(self):
        with pytest.raises(ValueError):
            sphere_point_count(0, 5)


class TestSpiralPoints:
    def test_points_are_unit_vectors(self):
        for p in spiral_points(12):
            assert math.isclose(sum(c * c for c in p.position), 1.0, abs_tol=1e-9)
            assert 0.0 <= p.latitude < 2 * math.pi
            assert 0.0 <= p.longitude <= math.pi

    def test_count_matches_rounded_circle_sizes(self):
        n = 20
        expected = sum(
            int(math.floor(2 * n * abs(math.sin(a * math.pi / n)) + 0.5)) for a in range(n + 1)
        )
        assert len(spiral_points(n)) == expected

    def test_poles_have_no_points(self):
        assert all(0.0 < p.longitude < math.pi for p in spiral_points(8))

    def test_scale_41_count(self):
        assert 2100 <= len(spiral_points(41)) <= 2180

    def test_points_distinct(self):
        pts = np.array([p.position for p in spiral_points(15)])
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt((diff ** 2).sum(axis=2))
        np.fill_diagonal(dist, np.inf)
        assert dist.min() > 0.0


class TestBuildGrids:
    def test_nine_grids_tilt_first(self):
        grids = build_grids((5.0, 5.0, 5.0), n=4)
        assert len(grids) == 9
        assert [g.tilt_deg for g in grids] == [0.0] * 3 + [-45.0] * 3 + [45.0] * 3
        assert [g.plane_id for g in grids[:3]] == [PlaneId.XY, PlaneId.YZ, PlaneId.XZ]

    def test_axes_orthonormal(self):
        for g in build_grids((0.0, 0.0, 0.0), n=3):
            u, v = np.array(g.u_axis), np.array(g.v_axis)
            assert abs(u @ v) < 1e-12
            assert np.linalg.norm(u) == pytest.approx(1.0)
            assert np.linalg.norm(v) == pytest.approx(1.0)

    def test_tilt_keeps_plane_normal(self):
        grids = build_grids((0.0, 0.0, 0.0), n=3)
        for base, tilted in zip(grids[:3], grids[3:6]):
            np.testing.assert_allclose(tilted.normal, base.normal, atol=1e-12)
        np.testing.assert_allclose(grids[0].normal, [0.0, 0.0, 1.0])

    def test_non_orthogonal_axes_rejected(self):
        with pytest.raises(ValueError):
            SamplingGrid((0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (1.0, 0.0, 0.0), 3, 1.0, PlaneId.XY, 0.0)

    def test_points_centered(self):
        g = build_grids((3.0, 4.0, 5.0), n=5, spacing=0.5)[0]
        pts = g.points()
        np.testing.assert_allclose(pts[2, 2], [3.0, 4.0, 5.0])
        np.testing.assert_allclose(pts[0, 0], [2.0, 3.0, 5.0])


class TestSamplePatch:
    def test_trilinear_reproduces_linear_field(self):
        vol = linear_volume()
        for grid in build_grids((8.0, 8.0, 8.0), n=5, spacing=1.0):
            patch = sample_patch(vol, grid, slices=3, slice_step=1.0)
            assert patch.data.shape == (5, 5, 3)
            for k, offset in enumerate((-1.0, 0.0, 1.0)):
                pts = grid.points(offset)
                for i in range(5):
                    for j in range(5):
                        assert patch.data[i, j, k] == pytest.approx(linear_value(pts[i, j]), abs=1e-9)

    def test_values_within_volume_range(self):
        vol = Volume((10, 10, 10), np.random.default_rng(5).uniform(0.3, 0.7, (10, 10, 10)))
        for grid in build_grids((5.0, 5.0, 5.0), n=6, spacing=0.7):
            data = sample_patch(vol, grid, slices=3).data
            assert data.min() >= 0.3 - 1e-12 and data.max() <= 0.7 + 1e-12

    def test_sampling_is_linear_in_volume(self):
        rng = np.random.default_rng(8)
        v1 = rng.random((9, 9, 9))
        v2 = rng.random((9, 9, 9))
        a, b = 0.3, 0.5
        mixed = Volume((9, 9, 9), a * v1 + b * v2)
        for grid in build_grids((4.0, 4.5, 3.7), n=7, spacing=0.9):
            p1 = sample_patch(Volume((9, 9, 9), v1), grid, slices=3).data
            p2 = sample_patch(Volume((9, 9, 9), v2), grid, slices=3).data
            np.testing.assert_allclose(sample_patch(mixed, grid, slices=3).data, a * p1 + b * p2, atol=1e-12)

    def test_outside_volume_reads_zero(self):
        vol = Volume((4, 4, 4), np.full((4, 4, 4), 0.5))
        grid = build_grids((0.0, 0.0, 0.0), n=5, spacing=1.0)[0]
        patch = sample_patch(vol, grid, slices=3, slice_step=1.0, label=1)
        assert patch.data[0, 0, 1] == 0.0
        assert patch.data[2, 2, 1] == pytest.approx(0.5)
        assert patch.label == 1
        assert len(patch.provenance) == 3


class TestPatch:
    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            Patch(np.zeros((3, 4, 2)))

    def test_rejects_bad_label(self):
        with pytest.raises(ValueError):
            Patch(np.zeros((2, 2, 1)), label=2)

    def test_properties(self):
        p = Patch(np.zeros((4, 4, 9)))
        assert p.n == 4 and p.slices == 9


class TestEnumerateCenters:
    def test_stride_and_margin(self):
        vol = Volume((10, 10, 10), np.zeros((10, 10, 10)))
        centers = enumerate_centers(vol, stride=4, margin=1)
        assert centers[0] == (1.0, 1.0, 1.0)
        assert len(centers) == 8
        assert all(1 <= c <= 8 for center in centers for c in center)

    def test_center_axis(self):
        np.testing.assert_array_equal(center_axis(10, 3, 0), [0, 3, 6, 9])

    def test_rejects_zero_stride(self):
        vol = Volume((2, 2, 2), np.zeros((2, 2, 2)))
        with pytest.raises(ValueError):
            enumerate_centers(vol, stride=0)


class TestPatchArchive:
    def test_save_load_keeps_labels(self, tmp_path):
        rng = np.random.default_rng(6)
        patches = [Patch(rng.random((3, 3, 2)), label=label) for label in (0, 1, None)]
        path = tmp_path / "p.rbpatch"
        save_patches(patches, path)
        loaded = load_patches(path)
        assert [p.label for p in loaded] == [0, 1, None]
        for a, b in zip(patches, loaded):
            np.testing.assert_allclose(a.data, b.data, atol=1e-7)

    def test_empty_archive_rejected(self, tmp_path):
        with pytest.raises(MalformedPatchArchiveError):
            save_patches([], tmp_path / "p.rbpatch")

    def test_bad_label_byte(self, tmp_path):
        path = tmp_path / "p.rbpatch"
        path.write_bytes(b"RBPATCH1\n1 1 1\n" + np.float32(0.5).tobytes() + bytes([7]))
        with pytest.raises(MalformedPatchArchiveError):
            load_patches(path)

    def test_truncated_archive(self, tmp_path):
        path = tmp_path / "p.rbpatch"
        path.write_bytes(b"RBPATCH1\n2 1 1\n" + np.float32(0.5).tobytes())
        with pytest.raises(MalformedPatchArchiveError):
            load_patches(path)
