"""Fit a quadrilateral to a binary mask.

The start is the minimum-area bounding rectangle of the mask; a coordinate
descent then moves one corner at a time along the eight compass directions,
keeping only moves that raise the IoU with the mask. The step shrinks
along ``step_schedule`` whenever a full sweep brings no improvement.
"""
import logging
import math

import numpy as np
from scipy.spatial import ConvexHull

from . import errors
from .config import QuadFitConfig
from .geometry import Quad, _signed_area, is_simple_quad, points_in_polygon


__all__ = [
    'initial_quad',
    'fit_quad_to_mask',
]


logger = logging.getLogger(__name__)


_MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1),
          (-1, -1), (1, -1), (-1, 1), (1, 1))


def initial_quad(mask):
    """Minimum-area rectangle around the mask pixels.

    Candidate orientations are those of the convex hull edges. The
    rectangle encloses the full pixel squares, i.e. it extends half a pixel
    beyond the outermost centers.

    :type mask: palletscope.raster.InstanceMask
    :rtype: Quad
    """
    points = mask.pixel_centers()
    if len(points) < 3 or np.linalg.matrix_rank(points - points.mean(axis=0)) < 2:
        raise errors.DegenerateMaskError('mask pixels are collinear')
    hull = points[ConvexHull(points).vertices]
    edges = np.roll(hull, -1, axis=0) - hull
    angles = np.unique(np.mod(np.arctan2(edges[:, 1], edges[:, 0]), 0.5 * math.pi))

    best = None
    for angle in angles:
        c, s = math.cos(angle), math.sin(angle)
        rx = hull[:, 0] * c + hull[:, 1] * s
        ry = -hull[:, 0] * s + hull[:, 1] * c
        area = (np.ptp(rx) + 1.0) * (np.ptp(ry) + 1.0)
        if best is None or area < best[0]:
            best = (area, c, s, rx.min() - 0.5, ry.min() - 0.5,
                    rx.max() + 0.5, ry.max() + 0.5)

    _, c, s, x0, y0, x1, y1 = best
    corners = [(x * c - y * s, x * s + y * c)
               for x, y in ((x0, y0), (x1, y0), (x1, y1), (x0, y1))]
    return Quad(corners)


class _Objective(object):
    """IoU between a polygon and the mask, counted on pixel centers.

    With ``stride > 1`` only every ``stride``-th row and column of the
    pixel lattice is counted.
    """

    def __init__(self, mask, stride=1):
        self._bits = mask.bits
        self._stride = stride
        self._mask_count = int(np.count_nonzero(self._bits[::stride, ::stride]))

    def _axis(self, lo, hi):
        s = self._stride
        start = int(math.ceil(math.floor(lo) / float(s))) * s
        return np.arange(start, int(math.ceil(hi)) + 1, s)

    def __call__(self, corners):
        xs = [p[0] for p in corners]
        ys = [p[1] for p in corners]
        cols = self._axis(min(xs), max(xs))
        rows = self._axis(min(ys), max(ys))
        gx, gy = np.meshgrid(cols, rows)
        inside = points_in_polygon(gx, gy, corners)
        height, width = self._bits.shape
        on_image = (gx >= 0) & (gx < width) & (gy >= 0) & (gy < height)
        hits = inside & on_image
        inter = int(np.count_nonzero(self._bits[gy[hits], gx[hits]]))
        union = int(np.count_nonzero(inside)) + self._mask_count - inter
        if union == 0:
            return 0.0
        return inter / float(union)


def _stride(mask, resolution):
    if resolution is None:
        return 1
    r0, c0, r1, c1 = mask.bbox
    return max(1, int(math.ceil(max(r1 - r0 + 1, c1 - c0 + 1) / float(resolution))))


def fit_quad_to_mask(mask, cfg=None, trace=None):
    """Fit a quad to ``mask`` by corner-wise coordinate descent.

    :type mask: palletscope.raster.InstanceMask
    :type cfg: QuadFitConfig
    :param trace: optional list that receives the IoU after every accepted
        move, starting with the IoU of the initial rectangle.
    :returns: ``(quad, iou)``
    """
    cfg = cfg or QuadFitConfig()
    objective = _Objective(mask, _stride(mask, cfg.iou_resolution))
    corners = [tuple(p) for p in initial_quad(mask).corners]
    best = objective(corners)
    if trace is not None:
        trace.append(best)
    initial = best

    for step in cfg.step_schedule:
        for _ in range(cfg.max_sweeps_per_step):
            improved = False
            for i in range(4):
                x, y = corners[i]
                move = None
                for dx, dy in _MOVES:
                    candidate = list(corners)
                    candidate[i] = (x + dx * step, y + dy * step)
                    if not is_simple_quad(candidate) or _signed_area(candidate) <= 0.0:
                        continue
                    score = objective(candidate)
                    if score > best and (move is None or score > move[0]):
                        move = (score, candidate)
                if move is not None:
                    best, corners = move
                    improved = True
                    if trace is not None:
                        trace.append(best)
            if not improved:
                break
    logger.debug('quad fit: iou %.4f -> %.4f', initial, best)
    return Quad(corners), best
