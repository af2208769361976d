import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from curbprice.errors import DimensionError
from curbprice.imgproc import box_sum, box_sum_clamped, equalize_histogram, \
    integral_image, to_grayscale

rng = np.random.default_rng(20260816)


def brute_prefix(img, y, x):
    return int(img[: y + 1, : x + 1].astype(np.int64).sum())


class TestGrayscale:
    def test_white_black_red(self):
        img = np.array([[[255, 255, 255], [0, 0, 0], [255, 0, 0]]], dtype=np.uint8)
        np.testing.assert_array_equal(to_grayscale(img)[0], [255, 0, 76])

    def test_gray_input_is_identity(self):
        v = rng.integers(0, 256, (9, 7), dtype=np.uint8)
        rgb = np.stack([v, v, v], axis=-1)
        np.testing.assert_array_equal(to_grayscale(rgb), v)

    def test_rejects_bad_shapes(self):
        with pytest.raises(DimensionError):
            to_grayscale(np.zeros((4, 4), dtype=np.uint8))
        with pytest.raises(DimensionError):
            to_grayscale(np.zeros((0, 4, 3), dtype=np.uint8))


class TestEqualize:
    def test_two_pixel_full_range(self):
        # cdf = (1, 2), cdf_min = 1, N = 2: 0 -> 0, 255 -> 255
        img = np.array([[0, 255]], dtype=np.uint8)
        np.testing.assert_array_equal(equalize_histogram(img), [[0, 255]])

    def test_constant_image_maps_to_255(self):
        img = np.full((5, 5), 128, dtype=np.uint8)
        out = equalize_histogram(img)
        assert (out == 255).all()

    def test_uniform_histogram_fixed_point(self):
        img = np.arange(256, dtype=np.uint8).reshape(16, 16)
        out = equalize_histogram(img)
        assert np.abs(out.astype(int) - img.astype(int)).max() <= 1

    def test_max_occupied_bin_hits_255(self):
        img = rng.integers(10, 200, (20, 20), dtype=np.uint8)
        out = equalize_histogram(img)
        assert out[img == img.max()].min() == 255

    @given(arrays(np.uint8, (12, 12), elements=st.integers(0, 255)))
    @settings(max_examples=50, deadline=None)
    def test_monotone_mapping(self, img):
        out = equalize_histogram(img)
        flat_in, flat_out = img.ravel(), out.ravel()
        order = np.argsort(flat_in, kind="stable")
        assert (np.diff(flat_out[order].astype(int))[np.diff(flat_in[order]) > 0] >= 0).all()
        assert out.min() >= 0 and out.max() <= 255


class TestIntegralImage:
    def test_all_ones_closed_form(self):
        img = np.ones((6, 9), dtype=np.uint8)
        ii = integral_image(img)
        yy, xx = np.mgrid[0:6, 0:9]
        np.testing.assert_array_equal(ii, (yy + 1) * (xx + 1))

    def test_single_pixel(self):
        np.testing.assert_array_equal(integral_image(np.array([[7]], dtype=np.uint8)), [[7]])

    def test_random_16x16_against_double_loop(self):
        img = rng.integers(0, 256, (16, 16), dtype=np.uint8)
        ii = integral_image(img)
        for y in range(16):
            for x in range(16):
                assert ii[y, x] == brute_prefix(img, y, x)

    def test_monotone_rows_and_cols(self):
        img = rng.integers(0, 256, (20, 14), dtype=np.uint8)
        ii = integral_image(img)
        assert (np.diff(ii, axis=0) >= 0).all() and (np.diff(ii, axis=1) >= 0).all()

    def test_no_overflow_at_4096(self):
        # worst case total 4096^2 * 255 must stay in int64 range
        assert 4096 * 4096 * 255 < np.iinfo(np.int64).max


class TestBoxSum:
    def test_full_rect_all_ones(self):
        ii = integral_image(np.ones((8, 8), dtype=np.uint8))
        assert box_sum(ii, 0, 0, 7, 7) == 64

    def test_single_pixel_rect(self):
        img = rng.integers(0, 256, (10, 10), dtype=np.uint8)
        ii = integral_image(img)
        assert box_sum(ii, 3, 5, 3, 5) == img[5, 3]

    def test_100_random_rects_exact(self):
        img = rng.integers(0, 256, (32, 32), dtype=np.uint8)
        ii = integral_image(img)
        for _ in range(100):
            x0, y0 = rng.integers(0, 32, 2)
            x1 = rng.integers(x0, 32)
            y1 = rng.integers(y0, 32)
            expect = int(img[y0:y1 + 1, x0:x1 + 1].sum())
            assert box_sum(ii, x0, y0, x1, y1) == expect

    def test_inverted_rect_rejected(self):
        ii = integral_image(np.ones((4, 4), dtype=np.uint8))
        with pytest.raises(ValueError):
            box_sum(ii, 2, 0, 1, 3)
        with pytest.raises(ValueError):
            box_sum_clamped(ii, 2, 3, 1, 3)

    def test_clamped_variant_matches_clipped_rect(self):
        img = rng.integers(0, 256, (12, 12), dtype=np.uint8)
        ii = integral_image(img)
        assert box_sum_clamped(ii, -3, -5, 4, 2) == int(img[0:3, 0:5].sum())
        assert box_sum_clamped(ii, 20, 20, 30, 30) == 0
