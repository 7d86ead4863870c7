import io
import unittest

import numpy as np
from PIL import Image

from .helper import _TempDirMixin, box_bits, rectangle


class GrayImageTest(unittest.TestCase):

    def _getTargetClass(self):
        from ..raster import GrayImage
        return GrayImage

    def test_read_only(self):
        image = self._getTargetClass()(np.zeros((3, 4)))
        self.assertEqual((image.width, image.height), (4, 3))
        self.assertRaises(ValueError, image.pixels.__setitem__, (0, 0), 1.0)

    def test_rejects_bad_pixels(self):
        from ..errors import DecodeError
        class_ = self._getTargetClass()
        self.assertRaises(DecodeError, class_, np.full((3, 3), 1.5))
        self.assertRaises(DecodeError, class_, np.zeros(5))
        self.assertRaises(DecodeError, class_, np.full((2, 2), np.nan))

    def test_png_round_trip(self):
        from ..raster import to_gray
        pixels = np.array([[0, 51, 102], [153, 204, 255]]) / 255.0
        image = self._getTargetClass()(pixels)
        self.assertEqual(to_gray(image.to_png_bytes()), image)

    def test_repr(self):
        image = self._getTargetClass()(np.zeros((3, 4)))
        self.assertEqual(repr(image), '<GrayImage 4x3 at %s>' % hex(id(image)))


class DecodeTest(_TempDirMixin, unittest.TestCase):

    def test_to_gray_rgb(self):
        from ..raster import to_gray
        buf = io.BytesIO()
        Image.new('RGB', (2, 2), (255, 0, 0)).save(buf, format='PNG')
        gray = to_gray(buf.getvalue())
        np.testing.assert_allclose(gray.pixels, np.full((2, 2), 0.299))

    def test_to_gray_garbage(self):
        from ..errors import DecodeError
        from ..raster import to_gray
        self.assertRaises(DecodeError, to_gray, b'not an image')

    def test_load_gray_missing(self):
        from ..errors import DecodeError
        from ..raster import load_gray
        self.assertRaises(DecodeError, load_gray, self.path('missing.png'))

    def test_save_and_load(self):
        from ..raster import GrayImage, load_gray
        image = GrayImage(np.eye(4))
        path = self.path('eye.png')
        image.save_png(path)
        self.assertEqual(load_gray(path), image)


class InstanceMaskTest(_TempDirMixin, unittest.TestCase):

    def _getTargetClass(self):
        from ..raster import InstanceMask
        return InstanceMask

    def test_bbox(self):
        mask = self._getTargetClass()(box_bits(10, 12, (2, 5), (3, 9)))
        self.assertEqual(mask.bbox, (2, 3, 4, 8))
        self.assertEqual(mask.count, 18)

    def test_empty(self):
        from ..errors import DegenerateMaskError
        class_ = self._getTargetClass()
        self.assertRaises(DegenerateMaskError, class_, np.zeros((4, 4)))

    def test_from_polygons(self):
        class_ = self._getTargetClass()
        mask = class_.from_polygons([rectangle(0.5, 0.5, 2.5, 2.5),
                                     rectangle(4.5, 0.5, 5.5, 1.5)], 8, 4)
        self.assertEqual(mask.shape, (4, 8))
        self.assertEqual(mask.count, 5)
        self.assertEqual(mask.bbox, (1, 1, 2, 5))

    def test_from_png(self):
        class_ = self._getTargetClass()
        bits = box_bits(6, 6, (1, 4), (2, 5))
        path = self.path('mask.png')
        Image.fromarray((bits * 255).astype(np.uint8)).save(path)
        self.assertEqual(class_.from_png(path), class_(bits))

    def test_from_png_missing(self):
        from ..errors import DecodeError
        class_ = self._getTargetClass()
        self.assertRaises(DecodeError, class_.from_png, self.path('nope.png'))

    def test_pixel_centers(self):
        class_ = self._getTargetClass()
        mask = class_(box_bits(3, 3, (1, 2), (0, 2)))
        np.testing.assert_array_equal(mask.pixel_centers(), [[0, 1], [1, 1]])


class EdgeFilterTest(unittest.TestCase):

    def _callFUT(self, pixels, orientation, kernel='sobel'):
        from ..raster import GrayImage, edge_filter
        return edge_filter(GrayImage(pixels), orientation, kernel)

    def _step(self):
        pixels = np.zeros((5, 5))
        pixels[:, 2:] = 1.0
        return pixels

    def test_vertical_step(self):
        from ..raster import VERTICAL_EDGES
        response = self._callFUT(self._step(), VERTICAL_EDGES).pixels
        expected = np.zeros((5, 5))
        expected[1:4, 1:3] = 1.0
        np.testing.assert_allclose(response, expected)

    def test_horizontal_ignores_vertical_step(self):
        from ..raster import HORIZONTAL_EDGES
        response = self._callFUT(self._step(), HORIZONTAL_EDGES).pixels
        self.assertFalse(response.any())

    def test_kernels_agree_on_a_step(self):
        from ..raster import VERTICAL_EDGES
        for kernel in ('prewitt', 'scharr'):
            response = self._callFUT(self._step(), VERTICAL_EDGES, kernel).pixels
            np.testing.assert_allclose(response[2, 1:3], [1.0, 1.0])

    def test_too_small(self):
        from ..errors import ImageTooSmallError
        from ..raster import VERTICAL_EDGES
        self.assertRaises(ImageTooSmallError, self._callFUT,
                          np.zeros((2, 5)), VERTICAL_EDGES)

    def test_unknown_orientation(self):
        from ..errors import ConfigError
        self.assertRaises(ConfigError, self._callFUT, np.zeros((4, 4)), 'diagonal')


class BinarizeTest(unittest.TestCase):

    def test_threshold_is_inclusive(self):
        from ..raster import GrayImage, binarize
        bits = binarize(GrayImage([[0.2, 0.5, 0.9]]), 0.5).bits
        np.testing.assert_array_equal(bits, [[False, True, True]])

    def test_invalid_threshold(self):
        from ..errors import ConfigError
        from ..raster import GrayImage, binarize
        self.assertRaises(ConfigError, binarize, GrayImage([[0.2]]), 0.0)

    def test_otsu_bimodal(self):
        from ..raster import GrayImage, binarize, otsu_threshold
        pixels = np.full((4, 8), 0.2)
        pixels[:, 4:] = 0.8
        threshold = otsu_threshold(GrayImage(pixels))
        self.assertTrue(0.2 < threshold <= 0.8)
        self.assertEqual(binarize(GrayImage(pixels), 'auto').count, 16)

    def test_otsu_constant(self):
        from ..raster import GrayImage, otsu_threshold
        self.assertEqual(otsu_threshold(GrayImage(np.full((3, 3), 0.5))), 1.0)


class RestrictToMaskTest(unittest.TestCase):

    def _callFUT(self, bits, mask, erosion_px):
        from ..raster import BinaryImage, InstanceMask, restrict_to_mask
        return restrict_to_mask(BinaryImage(bits), InstanceMask(mask), erosion_px)

    def test_erosion(self):
        restricted = self._callFUT(np.ones((10, 10)), box_bits(10, 10, (2, 8), (2, 8)), 1)
        np.testing.assert_array_equal(restricted.bits, box_bits(10, 10, (3, 7), (3, 7)))

    def test_no_erosion(self):
        mask = box_bits(10, 10, (2, 8), (2, 8))
        restricted = self._callFUT(np.ones((10, 10)), mask, 0)
        np.testing.assert_array_equal(restricted.bits, mask)

    def test_dimension_mismatch(self):
        from ..errors import DimensionMismatchError
        self.assertRaises(DimensionMismatchError, self._callFUT,
                          np.ones((10, 10)), np.ones((10, 11)), 1)


class GrowMaskTest(unittest.TestCase):

    def _callFUT(self, mask, margin_px):
        from ..raster import InstanceMask, grow_mask
        return grow_mask(InstanceMask(mask), margin_px)

    def test_grows_by_margin(self):
        grown = self._callFUT(box_bits(10, 10, (4, 6), (4, 6)), 2)
        np.testing.assert_array_equal(grown.bits, box_bits(10, 10, (2, 8), (2, 8)))

    def test_zero_margin(self):
        mask = box_bits(10, 10, (4, 6), (4, 6))
        np.testing.assert_array_equal(self._callFUT(mask, 0).bits, mask)


class WarpTest(unittest.TestCase):

    def test_scale(self):
        from ..geometry import Homography
        from ..raster import GrayImage, warp_to_rectangle
        pixels = np.arange(16, dtype=float).reshape(4, 4) / 15.0
        h = Homography([[2, 0, 0], [0, 2, 0], [0, 0, 1]])
        warped = warp_to_rectangle(GrayImage(pixels), h, 8, 8)
        self.assertEqual(warped.shape, (8, 8))
        self.assertAlmostEqual(warped.pixels[2, 2], pixels[1, 1])
        self.assertAlmostEqual(warped.pixels[2, 3], 0.5 * (pixels[1, 1] + pixels[1, 2]))
