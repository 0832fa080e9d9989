"""Tests for rbdiag_cli.lpdmf module"""

import math

import numpy as np
import pytest

from rbdiag_cli.errors import DimMismatchError, EmptySetError
from rbdiag_cli.imaging import Plane, Volume
from rbdiag_cli.lpdmf import FilterParams, denoise, denoise_volume, detect_impulse, median_of, psnr
from rbdiag_cli.phantom import add_impulse_noise


def smooth_plane(seed: int, size: int = 64) -> Plane:
    """Random tilted ramp kept well inside (0, 1) so no clean pixel looks like an impulse."""
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:size, 0:size] / (size - 1)
    a, b = rng.uniform(-1.0, 1.0, size=2)
    ramp = a * x + b * y
    ramp = (ramp - ramp.min()) / (ramp.max() - ramp.min() + 1e-12)
    return Plane(size, size, 0.15 + 0.7 * ramp)


class TestFilterParams:
    def test_defaults_are_valid(self):
        params = FilterParams()
        assert params.window_radius <= params.max_radius

    def test_window_larger_than_max(self):
        with pytest.raises(ValueError):
            FilterParams(window_radius=3, max_radius=2)

    def test_density_switch_range(self):
        with pytest.raises(ValueError):
            FilterParams(density_switch=0.0)


class TestDetectImpulse:
    def test_extremes_are_impulses(self):
        assert detect_impulse(0.0)
        assert detect_impulse(1.0)

    def test_midtone_is_clean(self):
        assert not detect_impulse(0.5)


class TestMedianOf:
    def test_odd_count(self):
        assert median_of([3.0, 1.0, 2.0]) == 2.0

    def test_even_count_takes_lower(self):
        assert median_of([4.0, 1.0, 3.0, 2.0]) == 2.0

    def test_result_is_member(self):
        values = np.random.default_rng(3).random(10)
        assert median_of(values) in values

    def test_empty(self):
        with pytest.raises(EmptySetError):
            median_of([])


class TestDenoise:
    def test_clean_image_unchanged(self):
        plane = smooth_plane(0, size=8)
        np.testing.assert_array_equal(denoise(plane).pixels, plane.pixels)

    def test_single_impulse_replaced_by_neighbours(self):
        pixels = np.full((5, 5), 0.4)
        pixels[2, 2] = 1.0
        out = denoise(Plane(5, 5, pixels))
        np.testing.assert_allclose(out.pixels, np.full((5, 5), 0.4))

    def test_uses_already_denoised_outputs(self):
        out = denoise(Plane(3, 1, np.array([[0.2, 1.0, 1.0]])))
        np.testing.assert_allclose(out.pixels, [[0.2, 0.2, 0.2]])

    def test_all_impulse_image_falls_back_to_half(self):
        pixels = np.zeros((4, 4))
        pixels[::2] = 1.0
        out = denoise(Plane(4, 4, pixels))
        np.testing.assert_allclose(out.pixels, np.full((4, 4), 0.5))

    def test_replacements_bounded_by_window(self):
        params = FilterParams()
        for seed in range(10):
            noisy = add_impulse_noise(smooth_plane(seed, size=24), 0.2, seed=500 + seed)
            out = denoise(noisy, params).pixels
            r = params.max_radius
            for y, x in zip(*np.nonzero((noisy.pixels <= 0.0) | (noisy.pixels >= 1.0))):
                window = out[max(0, y - r):y + r + 1, max(0, x - r):x + r + 1]
                assert window.min() <= out[y, x] <= window.max()
                assert 0.0 < out[y, x] < 1.0

    def test_constant_image_is_fixed_point(self):
        plane = Plane(6, 6, np.full((6, 6), 0.35))
        once = denoise(plane)
        np.testing.assert_array_equal(once.pixels, plane.pixels)
        np.testing.assert_array_equal(denoise(once).pixels, once.pixels)

    def test_second_pass_changes_nothing(self):
        noisy = add_impulse_noise(smooth_plane(3, size=16), 0.3, seed=9)
        once = denoise(noisy)
        np.testing.assert_array_equal(denoise(once).pixels, once.pixels)

    def test_input_not_modified(self):
        pixels = np.full((3, 3), 0.3)
        pixels[1, 1] = 0.0
        plane = Plane(3, 3, pixels)
        denoise(plane)
        assert plane.pixels[1, 1] == 0.0

    def test_psnr_gain_on_noisy_phantoms(self):
        gains = []
        for seed in range(50):
            clean = smooth_plane(seed)
            noisy = add_impulse_noise(clean, 0.3, seed=1000 + seed)
            out = denoise(noisy)
            untouched = (noisy.pixels > 0.0) & (noisy.pixels < 1.0)
            np.testing.assert_array_equal(out.pixels[untouched], noisy.pixels[untouched])
            gains.append(psnr(clean, out) - psnr(clean, noisy))
        assert np.mean(gains) >= 10.0


class TestDenoiseVolume:
    def test_each_slice_denoised_independently(self):
        rng = np.random.default_rng(4)
        voxels = 0.2 + 0.6 * rng.random((6, 5, 3))
        voxels[2, 2, 1] = 1.0
        vol = Volume((6, 5, 3), voxels)
        out = denoise_volume(vol)
        for z in range(3):
            np.testing.assert_array_equal(out.slice_plane(z).pixels, denoise(vol.slice_plane(z)).pixels)


class TestPsnr:
    def test_identical_is_infinite(self):
        plane = smooth_plane(1, size=4)
        assert math.isinf(psnr(plane, plane))

    def test_known_value(self):
        a = Plane(2, 2, np.zeros((2, 2)))
        b = Plane(2, 2, np.full((2, 2), 0.1))
        assert psnr(a, b) == pytest.approx(20.0)

    def test_shape_mismatch(self):
        with pytest.raises(DimMismatchError):
            psnr(Plane(2, 2, np.zeros((2, 2))), Plane(3, 2, np.zeros((2, 3))))

    def test_half_grey_against_black(self):
        a = Plane(2, 2, np.zeros((2, 2)))
        b = Plane(2, 2, np.full((2, 2), 0.5))
        assert psnr(a, b) == pytest.approx(10 * math.log10(4))
