"""Grayscale and binary images, oriented edge filtering, binarization and
mask restriction.

Images wrap read-only numpy arrays indexed ``[row, col]``; pixel
``(row, col)`` has its center at ``(x, y) = (col, row)``.
"""
import io
import logging

import numpy as np
from PIL import Image
from scipy import ndimage

from . import errors
from . import geometry
from . import store


__all__ = [
    'VERTICAL_EDGES',
    'HORIZONTAL_EDGES',
    'GrayImage',
    'BinaryImage',
    'InstanceMask',
    'to_gray',
    'load_gray',
    'edge_filter',
    'otsu_threshold',
    'binarize',
    'restrict_to_mask',
    'grow_mask',
    'warp_to_rectangle',
]


logger = logging.getLogger(__name__)


VERTICAL_EDGES = 'vertical'
HORIZONTAL_EDGES = 'horizontal'

# Derivative along x; transposed for the y derivative.
_KERNELS = {
    'sobel': np.array([[-1.0, 0.0, 1.0],
                       [-2.0, 0.0, 2.0],
                       [-1.0, 0.0, 1.0]]),
    'prewitt': np.array([[-1.0, 0.0, 1.0],
                         [-1.0, 0.0, 1.0],
                         [-1.0, 0.0, 1.0]]),
    'scharr': np.array([[-3.0, 0.0, 3.0],
                        [-10.0, 0.0, 10.0],
                        [-3.0, 0.0, 3.0]]),
}


def _frozen(array):
    array.setflags(write=False)
    return array


class _Raster(object):

    __slots__ = ('_pixels',)

    @property
    def pixels(self):
        """Read-only ``(height, width)`` array."""
        return self._pixels

    @property
    def shape(self):
        return self._pixels.shape

    @property
    def height(self):
        return self._pixels.shape[0]

    @property
    def width(self):
        return self._pixels.shape[1]

    def to_array(self):
        return self._pixels.copy()

    def __eq__(self, other):
        return (type(self) is type(other) and
                np.array_equal(self._pixels, other._pixels))

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return '<%s %dx%d at %s>' % (
            type(self).__name__, self.width, self.height, hex(id(self)))


class GrayImage(_Raster):
    """Intensities in ``[0, 1]``."""

    __slots__ = ()

    def __init__(self, pixels):
        pixels = np.array(pixels, dtype=float)
        if pixels.ndim != 2 or pixels.size == 0:
            raise errors.DecodeError('expected a non-empty 2D intensity array')
        if not np.all(np.isfinite(pixels)):
            raise errors.DecodeError('intensities must be finite')
        if pixels.min() < 0.0 or pixels.max() > 1.0:
            raise errors.DecodeError('intensities must lie in [0, 1]')
        self._pixels = _frozen(pixels)

    @classmethod
    def from_array(cls, array):
        return cls(array)

    def to_png_bytes(self):
        data = np.rint(self._pixels * 255.0).astype(np.uint8)
        buf = io.BytesIO()
        Image.fromarray(data).save(buf, format='PNG')
        return buf.getvalue()

    def save_png(self, path):
        """Write the image as an 8-bit grayscale PNG."""
        store.write_bytes(path, self.to_png_bytes())
        logger.info('wrote image %s', path)


class BinaryImage(_Raster):

    __slots__ = ()

    def __init__(self, bits):
        bits = np.array(bits, dtype=bool)
        if bits.ndim != 2 or bits.size == 0:
            raise errors.DecodeError('expected a non-empty 2D bit array')
        self._pixels = _frozen(bits)

    @property
    def bits(self):
        return self._pixels

    @property
    def count(self):
        return int(np.count_nonzero(self._pixels))


class InstanceMask(BinaryImage):
    """The pixel region of one transport unit.

    ``bbox`` is the tight ``(row_min, col_min, row_max, col_max)`` box of
    the on-pixels, inclusive.
    """

    __slots__ = ('bbox',)

    def __init__(self, bits):
        super(InstanceMask, self).__init__(bits)
        rows = np.flatnonzero(self._pixels.any(axis=1))
        cols = np.flatnonzero(self._pixels.any(axis=0))
        if rows.size == 0:
            raise errors.DegenerateMaskError('mask has no on-pixels')
        self.bbox = (int(rows[0]), int(cols[0]), int(rows[-1]), int(cols[-1]))

    @classmethod
    def from_polygons(cls, polygons, width, height):
        """Rasterize the union of polygons by pixel centers.

        :param polygons: list of polygons, each a list of ``[x, y]``.
        :rtype: InstanceMask
        """
        bits = np.zeros((height, width), dtype=bool)
        for polygon in polygons:
            bits |= geometry.polygon_mask((height, width), polygon)
        return cls(bits)

    @classmethod
    def from_png(cls, path):
        """Load a mask image; every nonzero pixel is on."""
        try:
            with Image.open(path) as image:
                data = np.asarray(image.convert('L'))
        except (IOError, OSError, SyntaxError) as e:
            raise errors.DecodeError('cannot decode mask %s: %s' % (path, e))
        return cls(data > 0)

    def pixel_centers(self):
        """``(N, 2)`` array of on-pixel centers as ``(x, y)``."""
        rows, cols = np.nonzero(self._pixels)
        return np.column_stack([cols, rows]).astype(float)


def to_gray(contents):
    """Decode an image file and convert it to luminance.

    :param contents: encoded PNG/PGM/PPM file contents.
    :type contents: bytes
    :rtype: GrayImage
    """
    try:
        image = Image.open(io.BytesIO(contents))
        image.load()
    except (IOError, OSError, SyntaxError, ValueError) as e:
        raise errors.DecodeError('cannot decode image: %s' % e)
    if image.mode == 'L':
        gray = np.asarray(image, dtype=float) / 255.0
    else:
        rgb = np.asarray(image.convert('RGB'), dtype=float)
        gray = (0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] +
                0.114 * rgb[..., 2]) / 255.0
    return GrayImage(np.clip(gray, 0.0, 1.0))


def load_gray(path):
    """Read an image file from disk as a :class:`GrayImage`."""
    try:
        with open(path, 'rb') as f:
            contents = f.read()
    except (IOError, OSError) as e:
        raise errors.DecodeError('cannot read image %s: %s' % (path, e))
    logger.info('loaded image %s', path)
    return to_gray(contents)


def edge_filter(img, orientation, kernel='sobel'):
    """Absolute oriented derivative response, normalized into ``[0, 1]``.

    ``VERTICAL_EDGES`` uses the x derivative and so responds to vertical
    structures. Border pixels are set to 0.

    :type img: GrayImage
    :type orientation: str
    :rtype: GrayImage
    """
    if img.width < 3 or img.height < 3:
        raise errors.ImageTooSmallError(
            'image %dx%d is smaller than the 3x3 kernel' % (img.width, img.height))
    try:
        weights = _KERNELS[kernel]
    except KeyError:
        raise errors.ConfigError('unknown edge kernel %r' % (kernel,))
    if orientation == HORIZONTAL_EDGES:
        weights = weights.T
    elif orientation != VERTICAL_EDGES:
        raise errors.ConfigError('unknown edge orientation %r' % (orientation,))
    scale = weights[weights > 0].sum()
    response = np.abs(ndimage.correlate(img.pixels, weights, mode='nearest'))
    response /= scale
    response[0, :] = 0.0
    response[-1, :] = 0.0
    response[:, 0] = 0.0
    response[:, -1] = 0.0
    return GrayImage(np.clip(response, 0.0, 1.0))


def otsu_threshold(img):
    """Otsu's threshold over a 256-bin histogram.

    Returns a value in ``(0, 1]``; a constant image yields 1.0.

    :type img: GrayImage
    :rtype: float
    """
    hist, edges = np.histogram(img.pixels, bins=256, range=(0.0, 1.0))
    hist = hist.astype(float)
    centers = 0.5 * (edges[:-1] + edges[1:])
    w0 = np.cumsum(hist)
    w1 = w0[-1] - w0
    m0 = np.cumsum(hist * centers)
    m1 = m0[-1] - m0
    valid = (w0 > 0) & (w1 > 0)
    if not valid.any():
        return 1.0
    between = np.zeros_like(w0)
    between[valid] = w0[valid] * w1[valid] * (
        m0[valid] / w0[valid] - m1[valid] / w1[valid]) ** 2
    k = int(np.argmax(between))
    return float(max(edges[k + 1], 1.0 / 256))


def binarize(img, threshold):
    """Set every pixel whose intensity is at least ``threshold``.

    :param threshold: value in ``(0, 1]`` or ``"auto"``.
    :rtype: BinaryImage
    """
    if threshold == 'auto':
        threshold = otsu_threshold(img)
        logger.debug('otsu threshold %.4f', threshold)
    try:
        threshold = float(threshold)
    except (TypeError, ValueError):
        raise errors.ConfigError('invalid threshold %r' % (threshold,))
    if not 0.0 < threshold <= 1.0:
        raise errors.ConfigError(
            'threshold %r outside (0, 1]' % (threshold,))
    return BinaryImage(img.pixels >= threshold)


def restrict_to_mask(img, mask, erosion_px=2):
    """Keep the bits of ``img`` inside ``mask`` eroded by ``erosion_px``.

    :type img: BinaryImage
    :type mask: InstanceMask
    :type erosion_px: int
    :rtype: BinaryImage
    """
    if img.shape != mask.shape:
        raise errors.DimensionMismatchError(
            'image is %dx%d but mask is %dx%d' % (
                img.width, img.height, mask.width, mask.height))
    region = mask.bits
    if erosion_px > 0:
        region = ndimage.binary_erosion(
            region, structure=np.ones((3, 3), dtype=bool),
            iterations=int(erosion_px), border_value=0)
    return BinaryImage(img.bits & region)


def grow_mask(mask, margin_px):
    """Dilate ``mask`` by ``margin_px`` pixels (8-connected).

    Edge responses of a silhouette fall on both sides of it; the grown
    mask keeps the outer flank.

    :type mask: InstanceMask
    :rtype: InstanceMask
    """
    if margin_px <= 0:
        return mask
    grown = ndimage.binary_dilation(
        mask.bits, structure=np.ones((3, 3), dtype=bool),
        iterations=int(margin_px))
    return InstanceMask(grown)


def warp_to_rectangle(img, homography, width, height):
    """Resample ``img`` into the ``width`` x ``height`` frame that
    ``homography`` maps it to (bilinear, zero outside).

    :type img: GrayImage
    :type homography: palletscope.geometry.Homography
    :rtype: GrayImage
    """
    width = int(round(width))
    height = int(round(height))
    rows, cols = np.mgrid[0:height, 0:width]
    targets = np.column_stack([cols.ravel(), rows.ravel()]).astype(float)
    sources = homography.inverse().apply_many(targets)
    coords = np.vstack([sources[:, 1], sources[:, 0]])
    values = ndimage.map_coordinates(img.pixels, coords, order=1,
                                     mode='constant', cval=0.0)
    return GrayImage(np.clip(values.reshape(height, width), 0.0, 1.0))
