import math

import numpy as np
import pytest

from mister import image as im


def rng(seed=0):
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# PGM / PNG I/O
# ---------------------------------------------------------------------------

class TestPgmIO:
    def test_load_maps_bytes_identically(self, tmp_path):
        p = tmp_path / "t.pgm"
        p.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 128, 255, 64]))
        img = im.load_image(p)
        assert img.shape == (2, 2)
        assert img.tolist() == [[0.0, 128.0], [255.0, 64.0]]

    def test_color_ppm_rejected(self, tmp_path):
        p = tmp_path / "t.ppm"
        p.write_bytes(b"P6\n1 1\n255\n" + bytes([1, 2, 3]))
        with pytest.raises(ValueError, match="color PGM/PPM"):
            im.load_image(p, format="pgm")

    def test_ascii_pgm_rejected(self, tmp_path):
        p = tmp_path / "t.pgm"
        p.write_bytes(b"P2\n1 1\n255\n7\n")
        with pytest.raises(ValueError, match="P2"):
            im.load_image(p)

    def test_sixteen_bit_rejected(self, tmp_path):
        p = tmp_path / "t.pgm"
        p.write_bytes(b"P5\n1 1\n65535\n" + bytes([0, 7]))
        with pytest.raises(ValueError, match="bit depth"):
            im.load_image(p)

    def test_truncated_payload_rejected(self, tmp_path):
        p = tmp_path / "t.pgm"
        p.write_bytes(b"P5\n3 3\n255\n" + bytes([1, 2, 3]))
        with pytest.raises(ValueError, match="truncated"):
            im.load_image(p)

    def test_header_comments_skipped(self, tmp_path):
        p = tmp_path / "t.pgm"
        p.write_bytes(b"P5\n# a comment\n2 1\n255\n" + bytes([9, 10]))
        assert im.load_image(p).tolist() == [[9.0, 10.0]]

    def test_roundtrip_is_bit_identical(self, tmp_path):
        data = rng(1).integers(0, 256, size=(17, 23)).astype(np.float64)
        p1 = tmp_path / "a.pgm"
        p2 = tmp_path / "b.pgm"
        im.save_image(data, p1)
        loaded = im.load_image(p1)
        im.save_image(loaded, p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert np.array_equal(loaded, data)


class TestPngIO:
    def test_roundtrip_pixels(self, tmp_path):
        data = rng(2).integers(0, 256, size=(11, 8)).astype(np.float64)
        p = tmp_path / "t.png"
        im.save_image(data, p)
        assert np.array_equal(im.load_image(p), data)

    def test_color_png_rejected(self, tmp_path):
        from PIL import Image as PILImage

        p = tmp_path / "c.png"
        PILImage.new("RGB", (4, 4), (10, 20, 30)).save(p)
        with pytest.raises(ValueError, match="color PNG"):
            im.load_image(p)

    def test_sixteen_bit_png_rejected(self, tmp_path):
        from PIL import Image as PILImage

        p = tmp_path / "d.png"
        PILImage.new("I;16", (4, 4)).save(p)
        with pytest.raises(ValueError, match="bit depth"):
            im.load_image(p)


class TestQuantize:
    @pytest.mark.parametrize(
        "value,expected",
        [(255.7, 255), (-3.2, 0), (127.5, 128), (127.49, 127), (0.5, 1), (254.5, 255)],
    )
    def test_rounding_rule(self, value, expected):
        assert im.quantize_u8(np.full((1, 1), value))[0, 0] == expected


# ---------------------------------------------------------------------------
# Grid operations
# ---------------------------------------------------------------------------

class TestGridOps:
    def test_downsample_by_two_indexing(self):
        img = np.arange(1, 17, dtype=np.float64).reshape(4, 4)
        assert im.downsample(img, 2).tolist() == [[1.0, 3.0], [9.0, 11.0]]

    def test_downsample_constant_by_three(self):
        out = im.downsample(np.full((7, 8), 5.5), 3)
        assert out.shape == (3, 3)
        assert np.all(out == 5.5)

    @pytest.mark.parametrize("s", [2, 3])
    def test_down_up_roundtrip(self, s):
        for h, w in [(4, 4), (5, 7), (9, 6), (16, 16)]:
            lr = rng(h * w + s).random((h, w)) * 255
            hr = im.upsample_zero_fill(lr, s, (s * h, s * w))
            assert np.array_equal(im.downsample(hr, s), lr)

    def test_upsample_single_pixel(self):
        out = im.upsample_zero_fill(np.array([[7.0]]), 2, (2, 2))
        assert out.tolist() == [[7.0, 0.0], [0.0, 0.0]]

    def test_upsample_grid_restriction_equals_input(self):
        lrs = rng(3).random((5, 4)) * 255
        out = im.upsample_zero_fill(lrs, 3, (13, 10))
        mask = np.zeros_like(out, dtype=bool)
        mask[::3, ::3] = True
        assert np.array_equal(out[::3, ::3], lrs)
        assert np.all(out[~mask] == 0.0)

    def test_upsample_rejects_inconsistent_target(self):
        with pytest.raises(ValueError, match="inconsistent"):
            im.upsample_zero_fill(np.ones((3, 3)), 2, (8, 6))

    def test_reflect_pad_definition(self):
        row = np.array([[1.0, 2.0, 3.0]])
        padded = im.reflect_pad(np.vstack([row, row + 3]), 1)
        assert padded[1].tolist() == [2.0, 1.0, 2.0, 3.0, 2.0]

    def test_reflect_pad_zero_margin_identity(self):
        a = rng(4).random((3, 5))
        assert np.array_equal(im.reflect_pad(a, 0), a)

    def test_pad_crop_roundtrip(self):
        a = rng(5).random((6, 9)) * 255
        for m in (1, 2, 5):
            padded = im.reflect_pad(a, m)
            assert np.array_equal(im.crop(padded, m, m, 9, 6), a)

    def test_crop_full_frame_identity(self):
        a = rng(6).random((4, 7))
        assert np.array_equal(im.crop(a, 0, 0, 7, 4), a)

    def test_crop_single_pixel(self):
        assert im.crop(np.array([[5.0, 6.0], [7.0, 8.0]]), 0, 0, 1, 1).tolist() == [[5.0]]

    def test_crop_out_of_bounds(self):
        with pytest.raises(ValueError, match="exceeds"):
            im.crop(np.ones((4, 4)), 2, 2, 3, 3)


# ---------------------------------------------------------------------------
# Cubic upscaling
# ---------------------------------------------------------------------------

class TestBicubic:
    @pytest.mark.parametrize("s", [2, 3])
    def test_constant_preserved(self, s):
        out = im.bicubic_interpolate(np.full((6, 5), 42.25), s)
        assert out.shape == (6 * s, 5 * s)
        assert np.allclose(out, 42.25, atol=1e-12)

    @pytest.mark.parametrize("s", [2, 3])
    def test_grid_samples_bit_exact(self, s):
        a = rng(7 + s).random((9, 11)) * 255
        out = im.bicubic_interpolate(a, s)
        assert np.array_equal(out[::s, ::s], a)

    def test_linear_ramp_reproduced_interior(self):
        # the a=-0.5 cubic kernel reproduces polynomials up to degree two
        r = np.arange(10, dtype=np.float64)
        c = np.arange(12, dtype=np.float64)
        a = 3.0 * r[:, None] + 2.0 * c[None, :] + 5.0
        out = im.bicubic_interpolate(a, 2)
        rr = np.arange(20, dtype=np.float64) / 2
        cc = np.arange(24, dtype=np.float64) / 2
        expected = 3.0 * rr[:, None] + 2.0 * cc[None, :] + 5.0
        # keep clear of the mirrored border: the widest tap reaches two samples out
        assert np.allclose(out[2:-4, 2:-4], expected[2:-4, 2:-4], atol=1e-9)


# ---------------------------------------------------------------------------
# Filtering
# ---------------------------------------------------------------------------

class TestGaussian:
    def test_kernel_unit_gain_and_symmetry(self):
        taps = im.gaussian_kernel(7, 0.9)
        assert abs(taps.sum() - 1.0) < 1e-12
        assert np.array_equal(taps, taps[::-1, :])
        assert np.array_equal(taps, taps[:, ::-1])
        assert np.array_equal(taps, taps.T)

    def test_even_side_rejected(self):
        with pytest.raises(ValueError, match="odd"):
            im.gaussian_kernel(6, 1.0)
        with pytest.raises(ValueError, match="odd"):
            im.gaussian_lowpass(np.ones((8, 8)), 4, 1.0)

    def test_constant_image_preserved(self):
        out = im.gaussian_lowpass(np.full((9, 9), 13.5), 5, 0.7)
        assert np.allclose(out, 13.5, atol=1e-10)

    def test_impulse_returns_taps(self):
        img = np.zeros((15, 15))
        img[7, 7] = 1.0
        out = im.gaussian_lowpass(img, 5, 0.8)
        assert np.allclose(out[5:10, 5:10], im.gaussian_kernel(5, 0.8), atol=1e-14)

    def test_noise_variance_reduced(self):
        g = rng(8)
        drops = 0
        for trial in range(20):
            noise = g.standard_normal((40, 40))
            filtered = im.gaussian_lowpass(noise, 7, 1.0)
            if filtered.var() < noise.var():
                drops += 1
        assert drops == 20


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

class TestPsnr:
    def test_identical_is_inf(self):
        a = rng(9).random((5, 5))
        assert im.psnr(a, a) == math.inf

    def test_full_scale_difference_is_zero_db(self):
        a = np.zeros((4, 4))
        b = np.full((4, 4), 255.0)
        assert abs(im.psnr(a, b)) < 1e-12

    def test_uniform_difference_of_sixteen(self):
        # direct evaluation of 20*log10(255/sqrt(MSE)) with MSE = 16^2
        expected = 20.0 * math.log10(255.0 / 16.0)
        a = np.zeros((6, 7))
        assert abs(im.psnr(a, a + 16.0) - expected) < 1e-12

    def test_symmetry_and_monotonicity(self):
        a = rng(10).random((8, 8)) * 255
        last = math.inf
        for delta in (1.0, 2.0, 4.0, 9.0):
            v = im.psnr(a, a + delta)
            assert v == im.psnr(a + delta, a)
            assert v < last
            last = v

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            im.psnr(np.ones((2, 2)), np.ones((2, 3)))


class TestMeasuredMean:
    def test_constant(self):
        assert im.measured_mean(np.full((6, 6), 3.25), 2) == 3.25

    def test_single_grid_point(self):
        img = np.array([[1.0, 9.0], [9.0, 9.0]])
        assert im.measured_mean(img, 2) == 1.0

    def test_matches_downsample_mean(self):
        a = rng(11).random((10, 13)) * 255
        for s in (2, 3):
            assert im.measured_mean(a, s) == im.downsample(a, s).mean()
