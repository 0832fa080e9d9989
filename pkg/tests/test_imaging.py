"""Tests for rbdiag_cli.imaging module"""

import numpy as np
import pytest
from pathlib import Path

from rbdiag_cli.errors import (
    DimMismatchError,
    MalformedHeaderError,
    MalformedMaskFileError,
    MalformedVolumeFileError,
    TruncatedPayloadError,
    UnsupportedMaxvalError,
    ZeroDepthError,
)
from rbdiag_cli.imaging import (
    Mask,
    Plane,
    Volume,
    extract_green_channel,
    lift_to_volume,
    load_mask,
    load_plane,
    load_volume,
    save_mask,
    save_plane,
    save_volume,
)


def write(tmp_path: Path, name: str, data: bytes) -> Path:
    path = tmp_path / name
    path.write_bytes(data)
    return path


class TestLoadPlane:
    def test_reads_p5_with_comment(self, tmp_path):
        path = write(tmp_path, "a.pgm", b"P5\n# scanner v2\n2 2\n255\n" + bytes([0, 255, 128, 64]))
        plane = load_plane(path, spacing_mm=0.1)
        assert plane.width == 2 and plane.height == 2
        assert plane.spacing_mm == 0.1
        np.testing.assert_allclose(plane.pixels, [[0.0, 1.0], [128 / 255, 64 / 255]])

    def test_p6_returns_green_channel(self, tmp_path):
        path = write(tmp_path, "a.ppm", b"P6\n1 1\n255\n" + bytes([10, 200, 30]))
        plane = load_plane(path)
        assert plane.pixels[0, 0] == pytest.approx(200 / 255)

    def test_rejects_16_bit_maxval(self, tmp_path):
        path = write(tmp_path, "a.pgm", b"P5\n1 1\n65535\n" + bytes(2))
        with pytest.raises(UnsupportedMaxvalError):
            load_plane(path)

    def test_rejects_truncated_payload(self, tmp_path):
        path = write(tmp_path, "a.pgm", b"P5\n4 4\n255\n" + bytes(10))
        with pytest.raises(TruncatedPayloadError):
            load_plane(path)

    def test_rejects_ascii_magic(self, tmp_path):
        path = write(tmp_path, "a.pgm", b"P2\n1 1\n255\n0\n")
        with pytest.raises(MalformedHeaderError):
            load_plane(path)

    def test_rejects_incomplete_header(self, tmp_path):
        path = write(tmp_path, "a.pgm", b"P5\n2")
        with pytest.raises(MalformedHeaderError):
            load_plane(path)

    def test_save_then_load_keeps_grey_levels(self, tmp_path):
        pixels = np.arange(12, dtype=np.float64).reshape(3, 4) / 255
        path = tmp_path / "out.pgm"
        save_plane(Plane(4, 3, pixels), path)
        np.testing.assert_allclose(load_plane(path).pixels, pixels)


class TestPlane:
    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            Plane(1, 1, np.array([[1.5]]))

    def test_does_not_freeze_callers_array(self):
        pixels = np.zeros((2, 2))
        Plane(2, 2, pixels)
        pixels[0, 0] = 0.5
        assert pixels[0, 0] == 0.5

    def test_pixel_count_must_match(self):
        with pytest.raises(DimMismatchError):
            Plane(3, 3, np.zeros((2, 2)))


class TestExtractGreenChannel:
    def test_returns_green(self):
        r, g, b = (Plane(2, 2, np.full((2, 2), v)) for v in (0.1, 0.2, 0.3))
        assert extract_green_channel(r, g, b) is g

    def test_mismatched_shapes(self):
        r = Plane(2, 2, np.zeros((2, 2)))
        g = Plane(3, 2, np.zeros((2, 3)))
        with pytest.raises(DimMismatchError):
            extract_green_channel(r, g, r)


class TestLiftToVolume:
    def test_every_slice_equals_plane(self):
        pixels = np.random.default_rng(0).random((4, 5))
        plane = Plane(5, 4, pixels, spacing_mm=0.2)
        vol = lift_to_volume(plane, 3)
        assert vol.dims == (5, 4, 3)
        assert vol.spacing_mm == (0.2, 0.2, 0.2)
        for z in range(3):
            np.testing.assert_array_equal(vol.slice_plane(z).pixels, pixels)

    def test_depth_one(self):
        vol = lift_to_volume(Plane(2, 2, np.zeros((2, 2))), 1)
        assert vol.dims == (2, 2, 1)

    def test_zero_depth(self):
        with pytest.raises(ZeroDepthError):
            lift_to_volume(Plane(2, 2, np.zeros((2, 2))), 0)


class TestMaskFile:
    def test_save_load_identity(self, tmp_path):
        labels = (np.random.default_rng(1).random((3, 4, 5)) > 0.5).astype(np.uint8)
        mask = Mask((3, 4, 5), labels)
        path = tmp_path / "m.rbmask"
        save_mask(mask, path)
        assert load_mask(path) == mask

    def test_x_fastest_layout(self, tmp_path):
        labels = np.zeros((2, 2, 1), dtype=np.uint8)
        labels[1, 0, 0] = 1
        path = tmp_path / "m.rbmask"
        save_mask(Mask((2, 2, 1), labels), path)
        assert path.read_bytes().endswith(bytes([0, 1, 0, 0]))

    def test_rejects_label_byte_two(self, tmp_path):
        path = write(tmp_path, "m.rbmask", b"RBMASK1\n1 1 2\n" + bytes([0, 2]))
        with pytest.raises(MalformedMaskFileError):
            load_mask(path)

    def test_rejects_short_payload(self, tmp_path):
        path = write(tmp_path, "m.rbmask", b"RBMASK1\n2 2 2\n" + bytes(3))
        with pytest.raises(MalformedMaskFileError):
            load_mask(path)

    def test_rejects_negative_dims(self, tmp_path):
        path = write(tmp_path, "m.rbmask", b"RBMASK1\n-1 -1 1\n" + bytes(1))
        with pytest.raises(MalformedMaskFileError, match="≥ 1"):
            load_mask(path)

    def test_rejects_zero_voxel_mask(self, tmp_path):
        with pytest.raises(MalformedMaskFileError):
            save_mask(Mask.empty((0, 2, 2)), tmp_path / "m.rbmask")

    def test_rejects_bad_magic(self, tmp_path):
        path = write(tmp_path, "m.rbmask", b"RBVOL1\n1 1 1\n" + bytes(1))
        with pytest.raises(MalformedMaskFileError):
            load_mask(path)


class TestVolumeFile:
    def test_save_load_within_float32(self, tmp_path):
        voxels = np.random.default_rng(2).random((4, 3, 2))
        vol = Volume((4, 3, 2), voxels, (0.1, 0.2, 0.3))
        path = tmp_path / "v.rbvol"
        save_volume(vol, path)
        loaded = load_volume(path)
        assert loaded.dims == (4, 3, 2)
        assert loaded.spacing_mm == (0.1, 0.2, 0.3)
        np.testing.assert_allclose(loaded.voxels, voxels, atol=1e-7)

    def test_rejects_missing_spacing(self, tmp_path):
        path = write(tmp_path, "v.rbvol", b"RBVOL1\n1 1 1\n" + bytes(4))
        with pytest.raises(MalformedVolumeFileError):
            load_volume(path)

    def test_rejects_wrong_length(self, tmp_path):
        path = write(tmp_path, "v.rbvol", b"RBVOL1\n2 1 1 1 1 1\n" + bytes(4))
        with pytest.raises(MalformedVolumeFileError):
            load_volume(path)

    def test_rejects_negative_dims(self, tmp_path):
        path = write(tmp_path, "v.rbvol", b"RBVOL1\n-1 -1 1 1 1 1\n" + bytes(4))
        with pytest.raises(MalformedVolumeFileError, match="≥ 1"):
            load_volume(path)

    @pytest.mark.parametrize("value", [1.5, -0.25, float("nan")])
    def test_rejects_out_of_range_voxels(self, tmp_path, value):
        payload = np.array([0.5, value], dtype="<f4").tobytes()
        path = write(tmp_path, "v.rbvol", b"RBVOL1\n2 1 1 1 1 1\n" + payload)
        with pytest.raises(MalformedVolumeFileError):
            load_volume(path)
