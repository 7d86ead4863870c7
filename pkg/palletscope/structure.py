"""Packaging structure of a transport unit.

Side faces are rectified to a fronto-parallel frame of fixed height. Rows
and columns are then counted either from the mean size of the package
detections on the face (:func:`count_grid`) or from the frequency of edge
lines in the rectified image (:func:`count_by_line_frequency`). The two
face structures are consolidated under the regular-packing assumption.
"""
import collections
import logging
import math

import numpy as np
from scipy.signal import find_peaks

from . import errors
from . import raster
from .config import PipelineConfig
from .geometry import LineSegment, Quad, homography_from_correspondences


__all__ = [
    'KLT',
    'TRAY',
    'ROWS',
    'COLS',
    'PackageDetection',
    'FaceStructure',
    'PackagingStructure',
    'rectify_face',
    'assign_packages_to_face',
    'count_grid',
    'count_by_line_frequency',
    'count_face_by_frequency',
    'consolidate',
    'grid_lines',
]


logger = logging.getLogger(__name__)


KLT = 'KLT'
TRAY = 'Tray'
PACKAGE_CLASSES = (KLT, TRAY)

ROWS = 'rows'
COLS = 'cols'

# warped edge coverage that still counts as an edge pixel
_COVERAGE = 0.25


class PackageDetection(collections.namedtuple(
        'PackageDetection', ('quad', 'package_class', 'score', 'flagged'))):
    """One packaging unit seen on a side face.

    ``flagged`` marks detections whose class disagrees with the majority on
    their face; they are kept but do not contribute to counting.
    """

    __slots__ = ()

    def __new__(cls, quad, package_class, score=1.0, flagged=False):
        if not isinstance(quad, Quad):
            quad = Quad(quad)
        if package_class not in PACKAGE_CLASSES:
            raise errors.SchemaError(
                'unknown package class %r' % (package_class,), 'class')
        score = float(score)
        if not 0.0 <= score <= 1.0:
            raise errors.SchemaError('score %r outside [0, 1]' % score, 'score')
        return super(PackageDetection, cls).__new__(
            cls, quad, package_class, score, bool(flagged))

    @classmethod
    def from_data(cls, data):
        return cls(data['quad'], data['class'], data.get('score', 1.0))

    def to_data(self):
        return {'quad': self.quad.to_data(), 'class': self.package_class,
                'score': self.score}


class FaceStructure(collections.namedtuple(
        'FaceStructure', ('rows', 'cols', 'package_class', 'mean_w', 'mean_h',
                          'low_confidence'))):
    """Rows and columns of packages on one side face; ``mean_w`` and
    ``mean_h`` are in rectified pixels."""

    __slots__ = ()

    def __new__(cls, rows, cols, package_class=None, mean_w=0.0, mean_h=0.0,
                low_confidence=False):
        if rows < 1 or cols < 1:
            raise errors.InvalidGeometryError(
                'face structure needs at least one row and column, got %dx%d'
                % (rows, cols))
        return super(FaceStructure, cls).__new__(
            cls, int(rows), int(cols), package_class, float(mean_w),
            float(mean_h), bool(low_confidence))


class PackagingStructure(collections.namedtuple(
        'PackagingStructure', ('left', 'right', 'layers', 'total', 'pallet'))):

    __slots__ = ()

    def __new__(cls, left, right, layers, total, pallet=None):
        return super(PackagingStructure, cls).__new__(
            cls, left, right, layers, total, pallet)

    def to_data(self):
        data = {
            'rows_l': self.left.rows,
            'cols_l': self.left.cols,
            'rows_r': self.right.rows,
            'cols_r': self.right.cols,
            'total': self.total,
        }
        if self.pallet is not None:
            data['pallet'] = self.pallet
        return data


def _length(p, q):
    return math.hypot(q[0] - p[0], q[1] - p[1])


def rectify_face(face, target_h=400.0):
    """Homography taking ``face`` to an upright ``target_w x target_h``
    rectangle.

    ``target_w`` keeps the ratio of the median horizontal to the median
    vertical edge length of the quad.

    Basic usage::

        >>> from palletscope.geometry import Quad
        >>> from palletscope.structure import rectify_face
        >>> h, w = rectify_face(Quad([(0, 0), (300, 0), (300, 200), (0, 200)]))
        >>> round(w, 6)
        600.0

    :type face: Quad
    :rtype: tuple of (Homography, float)
    """
    tl, tr, br, bl = corners = face.upright_corners()
    horizontal = np.median([_length(tl, tr), _length(bl, br)])
    vertical = np.median([_length(tl, bl), _length(tr, br)])
    target_w = float(target_h * horizontal / vertical)
    target = [(0.0, 0.0), (target_w, 0.0), (target_w, target_h), (0.0, target_h)]
    return homography_from_correspondences(corners, target), target_w


def _majority(detections):
    counts = collections.Counter(d.package_class for d in detections)
    return KLT if counts[KLT] >= counts[TRAY] else TRAY


def assign_packages_to_face(dets, face):
    """Detections whose quad centroid lies inside ``face``.

    Under uniform packing a face holds one package class; detections of the
    minority class come back flagged.

    :type dets: list of PackageDetection
    :type face: Quad
    :rtype: list of PackageDetection
    """
    inside = [d for d in dets
              if bool(face.contains(d.quad.centroid.x, d.quad.centroid.y))]
    if not inside:
        return []
    majority = _majority(inside)
    return [d._replace(flagged=d.package_class != majority) for d in inside]


def _round(value):
    return max(1, int(math.floor(value + 0.5)))


def count_grid(face, dets, target_h=400.0, low_confidence_residual=0.35):
    """Rows and columns from the mean rectified package size.

    :type face: Quad
    :type dets: list of PackageDetection
    :rtype: FaceStructure
    """
    usable = [d for d in dets if not d.flagged]
    if not usable:
        raise errors.NoPackagesOnFaceError('no package detections on the face')
    homography, target_w = rectify_face(face, target_h)
    widths = []
    heights = []
    for det in usable:
        rectified = Quad(homography.apply_many(det.quad.as_array()))
        tl, tr, br, bl = rectified.upright_corners()
        widths.append(0.5 * (_length(tl, tr) + _length(bl, br)))
        heights.append(0.5 * (_length(tl, bl) + _length(tr, br)))
    mean_w = float(np.mean(widths))
    mean_h = float(np.mean(heights))
    cols_f = target_w / mean_w
    rows_f = target_h / mean_h
    rows, cols = _round(rows_f), _round(cols_f)
    residual = max(abs(rows_f - rows), abs(cols_f - cols))
    low_confidence = residual > low_confidence_residual
    if low_confidence:
        logger.info('face grid %dx%d has rounding residual %.3f',
                    rows, cols, residual)
    return FaceStructure(rows, cols, _majority(usable), mean_w, mean_h,
                         low_confidence)


def count_by_line_frequency(edges, axis, prominence_frac=0.3, border_frac=0.02,
                            max_count=12):
    """Count rows or columns from the edge profile of a rectified face.

    The on-pixels are summed along the divisions sought (image rows for
    ``ROWS``, columns for ``COLS``). Peaks of the profile with prominence of
    at least ``prominence_frac`` of its maximum mark division lines. Peaks
    closer than half the smallest package pitch (the profile length over
    ``max_count``) merge, and the band of that width or of ``border_frac``
    at either end holds the face borders. The count is the profile length
    over the median spacing of the borders and interior peaks.

    :type edges: palletscope.raster.BinaryImage
    :rtype: int
    """
    if axis == ROWS:
        profile = edges.bits.sum(axis=1)
    elif axis == COLS:
        profile = edges.bits.sum(axis=0)
    else:
        raise errors.ConfigError('unknown axis %r' % (axis,))
    profile = profile.astype(float)
    top = profile.max()
    if top <= 0.0:
        raise errors.FrequencyInconclusiveError('edge image is blank')

    last = len(profile) - 1
    half_pitch = 0.5 * len(profile) / float(max_count)
    border = max(border_frac * last, half_pitch)
    # zero padding lets lines on the very first or last row register
    padded = np.concatenate([[0.0], profile, [0.0]])
    peaks, _ = find_peaks(padded, prominence=prominence_frac * top,
                          distance=max(1, int(half_pitch)))
    peaks = peaks - 1
    interior = [p for p in peaks if border < p < last - border]
    logger.debug('%s profile: %d peaks, %d interior', axis, len(peaks),
                 len(interior))
    if interior:
        spacing = float(np.median(np.diff([0] + interior + [last])))
        return max(1, int(round(last / spacing)))
    if len(peaks):
        return 1
    raise errors.FrequencyInconclusiveError('no division lines on the face')


def count_face_by_frequency(gray, face, cfg=None, package_class=None):
    """Count rows and columns of ``face`` from its edge lines.

    Edges are found at the image's own scale and the edge map is warped
    upright; magnifying a small face first would soften its lines below
    the binarization threshold.

    :type gray: palletscope.raster.GrayImage
    :type face: Quad
    :type cfg: PipelineConfig
    :rtype: FaceStructure
    """
    cfg = cfg or PipelineConfig()
    s = cfg.structure
    homography, target_w = rectify_face(face, s.target_h)

    counts = {}
    for axis, orientation in ((ROWS, raster.HORIZONTAL_EDGES),
                              (COLS, raster.VERTICAL_EDGES)):
        edges = raster.edge_filter(gray, orientation, cfg.raster.kernel)
        bits = raster.binarize(edges, cfg.raster.threshold)
        coverage = raster.warp_to_rectangle(
            raster.GrayImage(bits.bits.astype(float)), homography,
            target_w, s.target_h)
        counts[axis] = count_by_line_frequency(
            raster.binarize(coverage, _COVERAGE), axis, s.prominence_frac,
            s.border_frac, s.max_count)
    return FaceStructure(counts[ROWS], counts[COLS], package_class,
                         target_w / float(counts[COLS]),
                         s.target_h / float(counts[ROWS]))


def consolidate(left, right, pallet=None):
    """Combine the two face structures of one transport unit.

    Both faces show every layer, so their row counts must agree; the total
    is ``layers * left.cols * right.cols``.

    :type left: FaceStructure
    :type right: FaceStructure
    :param pallet: base pallet label, passed through unchanged.
    :rtype: PackagingStructure
    """
    if left.rows != right.rows:
        raise errors.LayerMismatchError(
            'left face has %d layers, right face %d' % (left.rows, right.rows))
    if (left.package_class and right.package_class and
            left.package_class != right.package_class):
        raise errors.ClassMismatchError(
            'left face holds %s, right face %s' % (
                left.package_class, right.package_class))
    layers = left.rows
    return PackagingStructure(left, right, layers,
                              layers * left.cols * right.cols, pallet)


def grid_lines(face, structure, target_h=400.0):
    """Image-space row and column division lines of a counted face.

    :type face: Quad
    :type structure: FaceStructure
    :rtype: list of LineSegment
    """
    homography, target_w = rectify_face(face, target_h)
    ends = []
    for i in range(1, structure.rows):
        y = target_h * i / structure.rows
        ends.append(((0.0, y), (target_w, y)))
    for j in range(1, structure.cols):
        x = target_w * j / structure.cols
        ends.append(((x, 0.0), (x, target_h)))
    if not ends:
        return []
    points = homography.inverse().apply_many(
        np.array([p for pair in ends for p in pair]))
    return [LineSegment(points[2 * k], points[2 * k + 1]) for k in range(len(ends))]
