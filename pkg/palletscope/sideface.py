"""Vanishing point estimation, boundary regression and side-face
construction.

A transport unit shows at most two neighbouring side faces. Their
horizontal edges converge toward one vanishing point on each side of the
image, and all vertical edges converge toward a common vertical vanishing
point (usually far below the image or at infinity). Each face boundary is a
line through one of these points, regressed from the endpoints of the
detected edge segments.
"""
import collections
import itertools
import logging
import math

import numpy as np

from . import errors
from . import hough
from . import raster
from .config import PipelineConfig, VPConfig
from .geometry import (
    HomogeneousPoint,
    LineSegment,
    PolarLine,
    Quad,
    intersect_lines,
    point_line_distance,
)


__all__ = [
    'BELOW',
    'LEFT',
    'RIGHT',
    'UNCONSTRAINED',
    'VERTICAL',
    'VanishingPointEstimate',
    'SideFacePair',
    'SceneCheck',
    'estimate_vp',
    'assign_horizontal_vps',
    'regress_boundary',
    'segment_side_faces',
    'validate_scene',
]


logger = logging.getLogger(__name__)


BELOW = 'below'
LEFT = 'left'
RIGHT = 'right'
UNCONSTRAINED = 'unconstrained'
# above or below the image, steeper than 45 degrees from its center
VERTICAL = 'vertical'

SEED_REGIONS = (BELOW, LEFT, RIGHT, UNCONSTRAINED, VERTICAL)


class VanishingPointEstimate(collections.namedtuple(
        'VanishingPointEstimate',
        ('point', 'supporting_lines', 'mean_residual', 'threshold', 'segments'))):
    """A vanishing point with the lines that support it.

    ``threshold`` is the final filtering distance in pixels; for a point at
    infinity distances are angular deviations scaled by the image diagonal.
    ``segments[i]`` holds the segments of ``supporting_lines[i]`` when they
    are known.
    """

    __slots__ = ()

    def __new__(cls, point, supporting_lines, mean_residual, threshold,
                segments=None):
        supporting_lines = tuple(supporting_lines)
        if segments is None:
            segments = tuple(() for _ in supporting_lines)
        return super(VanishingPointEstimate, cls).__new__(
            cls, point, supporting_lines, float(mean_residual), float(threshold),
            tuple(tuple(s) for s in segments))

    @property
    def is_infinite(self):
        return self.point.is_infinite

    def with_segments(self, segments_by_line):
        """Attach segments from a ``{PolarLine: [LineSegment]}`` mapping."""
        return self._replace(segments=tuple(
            tuple(segments_by_line.get(line, ())) for line in self.supporting_lines))


class SideFacePair(collections.namedtuple(
        'SideFacePair',
        ('left', 'right', 'shared_edge', 'vertical_vp', 'left_vp', 'right_vp'))):
    __slots__ = ()


class SceneCheck(collections.namedtuple('SceneCheck', ('status', 'reason'))):

    __slots__ = ()

    OK = 'ok'
    WARNING = 'warning'

    @property
    def ok(self):
        return self.status == self.OK


def _direction_deviation(point, line):
    dx, dy = point.direction
    lx, ly = line.direction
    return math.acos(min(1.0, abs(dx * lx + dy * ly)))


def _line_distance(point, line, image_diag):
    if point.is_infinite:
        return _direction_deviation(point, line) * image_diag
    return point_line_distance(point, line)


def _in_region(point, region, image_size):
    if region == UNCONSTRAINED:
        return True
    if point.is_infinite:
        dx, dy = point.direction
        if region in (BELOW, VERTICAL):
            return abs(dy) >= abs(dx)
        return abs(dx) >= abs(dy)
    x = point.hx / point.hw
    y = point.hy / point.hw
    if region == LEFT:
        return x < 0.0
    if region == RIGHT:
        return x > image_size[0]
    if region == VERTICAL:
        dx = x - 0.5 * image_size[0]
        dy = y - 0.5 * image_size[1]
        return (y < 0.0 or y > image_size[1]) and abs(dy) >= abs(dx)
    return y > image_size[1]


def _mean_direction(lines):
    doubled = np.array([2.0 * line.direction_angle for line in lines])
    c = np.cos(doubled).mean()
    s = np.sin(doubled).mean()
    if c == 0.0 and s == 0.0:
        phi = lines[0].direction_angle
    else:
        phi = 0.5 * math.atan2(s, c)
    return HomogeneousPoint.at_infinity(math.cos(phi), math.sin(phi))


def _intersections(lines, region, image_size, cfg, image_diag):
    # Intersections beyond far_factor diagonals from the image center count
    # as points at infinity in their direction.
    if image_size is None:
        cx, cy = 0.0, 0.0
    else:
        cx, cy = 0.5 * image_size[0], 0.5 * image_size[1]
    finite = []
    infinite = 0
    for a, b in itertools.combinations(lines, 2):
        try:
            point = intersect_lines(a, b)
        except errors.IdenticalLinesError:
            continue
        if not point.is_infinite:
            dx, dy = point.hx - cx, point.hy - cy
            if math.hypot(dx, dy) > cfg.far_factor * image_diag:
                point = HomogeneousPoint.at_infinity(dx, dy)
        if not _in_region(point, region, image_size):
            continue
        if point.is_infinite:
            infinite += 1
        else:
            finite.append((point.hx, point.hy))
    return np.array(finite, dtype=float).reshape(-1, 2), infinite


def _final_threshold(cfg, image_diag):
    return cfg.init_dist_frac * image_diag * cfg.decay ** (cfg.iterations - 1)


def _consensus(lines, region, image_size, cfg, image_diag):
    """The point most of ``lines`` pass close to.

    Candidates are the in-region intersections plus, when some pairs meet
    at infinity, the mean line direction. Every line gives a candidate a
    vote that falls linearly from 1 at distance 0 to 0 at the final
    filtering distance; the first candidate with the highest total wins.
    A finite winner is averaged with the intersections around it.
    """
    finite, infinite = _intersections(lines, region, image_size, cfg, image_diag)
    if not len(finite) and not infinite:
        raise errors.InsufficientSupportError(
            'no line intersections in the %s region' % region)
    tolerance = _final_threshold(cfg, image_diag)
    rho = np.array([line.rho for line in lines])
    cos_t = np.cos([line.theta for line in lines])
    sin_t = np.sin([line.theta for line in lines])
    distances = np.abs(np.outer(finite[:, 0], cos_t) +
                       np.outer(finite[:, 1], sin_t) - rho)
    if infinite:
        direction = _mean_direction(lines)
        distances = np.vstack([distances, [
            _line_distance(direction, line, image_diag) for line in lines]])

    scores = np.clip(1.0 - distances / tolerance, 0.0, None).sum(axis=1)
    best = int(np.argmax(scores))
    if best == len(finite):
        backers = [line for line, d in zip(lines, distances[best]) if d <= tolerance]
        return _mean_direction(backers or lines)
    gaps = np.hypot(finite[:, 0] - finite[best, 0], finite[:, 1] - finite[best, 1])
    mean = finite[gaps <= tolerance].mean(axis=0)
    return HomogeneousPoint(mean[0], mean[1], 1.0)


def _spread(lines, region, image_size, cfg, image_diag):
    finite, _ = _intersections(lines, region, image_size, cfg, image_diag)
    if len(finite) < 2:
        return 0.0
    return math.sqrt(np.mean(np.sum((finite - finite.mean(axis=0)) ** 2, axis=1)))


def _canonical_lines(lines):
    return sorted(set(lines), key=lambda line: (line.theta, line.rho))


def estimate_vp(lines, seed_region, cfg=None, image_diag=None, image_size=None):
    """Estimate a vanishing point by iterative filtering.

    Every estimate is the mean of the in-region pairwise intersections
    that agree with the best supported one (or the mean line direction at
    infinity when that gathers more support). Each iteration drops the
    lines farther than ``init_dist_frac * diag * decay ** (i - 1)`` from
    the current estimate and re-estimates from the survivors. When the
    survivors' intersections spread wider than ``parallel_spread_px`` the
    result is the mean line direction at infinity. Distances to a point at
    infinity are angular deviations scaled by the diagonal.

    :param lines: candidate lines; order does not matter.
    :param seed_region: one of ``BELOW``, ``LEFT``, ``RIGHT``,
        ``VERTICAL`` and ``UNCONSTRAINED``.
    :param image_size: ``(width, height)``; required by ``RIGHT``,
        ``BELOW`` and ``VERTICAL``.
    :rtype: VanishingPointEstimate
    """
    cfg = cfg or VPConfig()
    if seed_region not in SEED_REGIONS:
        raise errors.ConfigError('unknown seed region %r' % (seed_region,))
    if seed_region in (RIGHT, BELOW, VERTICAL) and image_size is None:
        raise errors.ConfigError('seed region %s needs the image size' % seed_region)
    if image_diag is None:
        if image_size is None:
            raise errors.ConfigError('image_diag or image_size is required')
        image_diag = math.hypot(*image_size)

    current = _canonical_lines(lines)
    if len(current) < cfg.min_support:
        raise errors.InsufficientSupportError(
            '%d lines, need %d' % (len(current), cfg.min_support))
    point = _consensus(current, seed_region, image_size, cfg, image_diag)

    threshold = cfg.init_dist_frac * image_diag
    for i in range(cfg.iterations):
        threshold = cfg.init_dist_frac * image_diag * cfg.decay ** i
        survivors = [line for line in current
                     if _line_distance(point, line, image_diag) <= threshold]
        logger.debug('vp %s: iteration %d keeps %d/%d lines (threshold %.2f)',
                     seed_region, i + 1, len(survivors), len(current), threshold)
        if len(survivors) < cfg.min_support:
            raise errors.InsufficientSupportError(
                '%d lines left after iteration %d, need %d' % (
                    len(survivors), i + 1, cfg.min_support))
        current = survivors
        point = _consensus(current, seed_region, image_size, cfg, image_diag)

    if (not point.is_infinite and
            _spread(current, seed_region, image_size, cfg, image_diag) >
            cfg.parallel_spread_px):
        point = _mean_direction(current)
    current = [line for line in current
               if _line_distance(point, line, image_diag) <= threshold]
    if len(current) < cfg.min_support:
        raise errors.InsufficientSupportError(
            '%d lines within the final threshold, need %d' % (
                len(current), cfg.min_support))
    residual = np.mean([_line_distance(point, line, image_diag) for line in current])
    return VanishingPointEstimate(point, current, residual, threshold)


def assign_horizontal_vps(horizontal, image_width, cfg=None, image_diag=None,
                          image_height=None):
    """Find the left and right vanishing points of the horizontal lines.

    Each line supports at most one of the two points: the one it is closer
    to relative to that point's final threshold, provided it lies within
    it.

    :type horizontal: list of PolarLine
    :rtype: tuple of (VanishingPointEstimate, VanishingPointEstimate)
    """
    cfg = cfg or VPConfig()
    image_size = (image_width, image_height or 0)
    if image_diag is None:
        image_diag = math.hypot(*image_size)
    lines = _canonical_lines(horizontal)
    if len(lines) < 2 * cfg.min_support:
        raise errors.OneSideNotVisibleError(
            '%d horizontal lines, need %d' % (len(lines), 2 * cfg.min_support))

    estimates = []
    for region in (LEFT, RIGHT):
        try:
            estimates.append(estimate_vp(lines, region, cfg, image_diag, image_size))
        except errors.InsufficientSupportError as e:
            raise errors.OneSideNotVisibleError(
                'no %s vanishing point: %s' % (region, e))
    if estimates[0].is_infinite and estimates[1].is_infinite:
        raise errors.OneSideNotVisibleError(
            'horizontal lines share a single vanishing direction')

    assigned = ([], [])
    for line in lines:
        ratios = [_line_distance(e.point, line, image_diag) / e.threshold
                  for e in estimates]
        side = 0 if ratios[0] <= ratios[1] else 1
        if ratios[side] <= 1.0:
            assigned[side].append(line)

    result = []
    for region, estimate, support in zip((LEFT, RIGHT), estimates, assigned):
        if len(support) < cfg.min_support:
            raise errors.OneSideNotVisibleError(
                '%s face has %d supporting lines, need %d' % (
                    region, len(support), cfg.min_support))
        residual = np.mean([_line_distance(estimate.point, line, image_diag)
                            for line in support])
        result.append(estimate._replace(
            supporting_lines=tuple(support),
            mean_residual=float(residual),
            segments=tuple(() for _ in support)))
    logger.debug('horizontal lines: %d left, %d right, %d unassigned',
                 len(assigned[0]), len(assigned[1]),
                 len(lines) - len(assigned[0]) - len(assigned[1]))
    return tuple(result)


def regress_boundary(endpoints, through):
    """The line through ``through`` closest to ``endpoints`` in the least
    squares sense.

    For a finite point the normal is the minor axis of the endpoint scatter
    about that point; for a point at infinity the direction is fixed and
    the offset is the mean offset of the endpoints.

    :type endpoints: list of Point2
    :type through: HomogeneousPoint
    :rtype: PolarLine
    """
    points = np.array([(p[0], p[1]) for p in endpoints], dtype=float).reshape(-1, 2)
    if len(points) == 0:
        raise errors.NoEndpointsError('no endpoints to regress a boundary from')
    if through.is_infinite:
        dx, dy = through.direction
        nx, ny = -dy, dx
        rho = float(np.mean(points[:, 0] * nx + points[:, 1] * ny))
        return PolarLine(rho, math.atan2(ny, nx))
    vx, vy = through.hx / through.hw, through.hy / through.hw
    offsets = points - (vx, vy)
    scatter = offsets.T.dot(offsets)
    if not np.any(scatter):
        raise errors.NoEndpointsError('all endpoints coincide with the vanishing point')
    _, vectors = np.linalg.eigh(scatter)
    nx, ny = vectors[:, 0]
    return PolarLine(nx * vx + ny * vy, math.atan2(ny, nx))


def _median_boundary(points, through):
    if through.is_infinite:
        dx, dy = through.direction
        nx, ny = -dy, dx
        return PolarLine(float(np.median(points[:, 0] * nx + points[:, 1] * ny)),
                         math.atan2(ny, nx))
    first = regress_boundary(points, through)
    ux, uy = first.direction
    vx, vy = through.hx / through.hw, through.hy / through.hw
    dx, dy = points[:, 0] - vx, points[:, 1] - vy
    angles = np.arctan2(ux * dy - uy * dx, ux * dx + uy * dy)
    angles = np.where(angles > 0.5 * math.pi, angles - math.pi, angles)
    angles = np.where(angles <= -0.5 * math.pi, angles + math.pi, angles)
    return PolarLine.from_point_angle(
        (vx, vy), math.atan2(uy, ux) + float(np.median(angles)))


def _fit_boundary(endpoints, through, trim_px):
    """Regress a boundary, dropping endpoints farther than ``trim_px`` from
    the median boundary first."""
    points = np.array([(p[0], p[1]) for p in endpoints], dtype=float).reshape(-1, 2)
    if len(points) == 0:
        raise errors.NoEndpointsError('no endpoints to regress a boundary from')
    reference = _median_boundary(points, through)
    distance = np.abs(reference.signed_distance(points[:, 0], points[:, 1]))
    kept = points[distance <= trim_px]
    if len(kept) == 0:
        kept = points
    return regress_boundary(kept, through)


class _Trace(collections.namedtuple('_Trace', ('line', 'segments'))):
    """A detected line with its segments."""

    __slots__ = ()

    def endpoints(self):
        return [p for segment in self.segments for p in segment]

    def extreme(self, key):
        return min(self.endpoints(), key=key)

    def x_range(self):
        xs = [p.x for p in self.endpoints()]
        return min(xs), max(xs)

    def midpoint(self):
        top = self.extreme(lambda p: p.y)
        bottom = self.extreme(lambda p: -p.y)
        return 0.5 * (top.x + bottom.x), 0.5 * (top.y + bottom.y)


def _detect(gray, region, orientation, cfg):
    edges = raster.edge_filter(gray, orientation, cfg.raster.kernel)
    bits = raster.binarize(edges, cfg.raster.threshold)
    bits = raster.restrict_to_mask(bits, region, cfg.raster.erosion_px)
    if orientation == raster.VERTICAL_EDGES:
        window = (0.0, cfg.segment.vertical_tol)
    else:
        window = (0.5 * math.pi, cfg.segment.horizontal_tol)

    traces = []
    found = hough.extract_lines(bits, cfg.hough, cfg.segment, window)
    for line, segments in found:
        vertical, horizontal = hough.split_by_orientation(
            segments, cfg.segment.vertical_tol, cfg.segment.horizontal_tol)
        wanted = vertical if orientation == raster.VERTICAL_EDGES else horizontal
        if wanted:
            traces.append(_Trace(line, tuple(wanted)))
    logger.debug('%s edges: %d lines, %d with segments',
                 orientation, len(found), len(traces))
    return traces


def _snap(boundary, traces, tol):
    """Replace ``boundary`` by the longest detected line lying along it.

    A trace lies along the boundary when all its segment endpoints are
    within ``tol`` of it.
    """
    best = None
    for trace in traces:
        points = np.array([(p.x, p.y) for p in trace.endpoints()])
        offsets = np.abs(boundary.signed_distance(points[:, 0], points[:, 1]))
        if offsets.max() > tol:
            continue
        length = sum(segment.length for segment in trace.segments)
        if best is None or length > best[0]:
            best = (length, trace.line)
    if best is None:
        return boundary
    return best[1]


def _crossing(a, b):
    lo = max(a.x_range()[0], b.x_range()[0])
    hi = min(a.x_range()[1], b.x_range()[1])
    if lo > hi:
        return None
    try:
        point = intersect_lines(a.line, b.line)
    except errors.IdenticalLinesError:
        return None
    if point.is_infinite or not lo <= point.hx <= hi:
        return None
    return point.hx, point.hy


def _inner_points(left, right):
    # Segments of the two faces overlap slightly around the shared edge;
    # where they do, their crossing is the corner point on that edge.
    points = []
    for own, other, key in ((left, right, lambda p: -p.x),
                            (right, left, lambda p: p.x)):
        for trace in own:
            raw = trace.extreme(key)
            crossings = [c for c in (_crossing(trace, o) for o in other) if c]
            if crossings:
                points.append(min(crossings, key=lambda c: math.hypot(
                    c[0] - raw.x, c[1] - raw.y)))
            else:
                points.append((raw.x, raw.y))
    return points


def _x_at(line, y):
    return (line.rho - y * math.sin(line.theta)) / math.cos(line.theta)


def _in_span(trace, left_boundary, right_boundary, tol_frac):
    x, y = trace.midpoint()
    lo = _x_at(left_boundary, y)
    hi = _x_at(right_boundary, y)
    tol = tol_frac * abs(hi - lo)
    return lo - tol <= x <= hi + tol


def _corner(a, b):
    point = intersect_lines(a, b)
    if point.is_infinite:
        raise errors.InvalidGeometryError('face boundaries do not meet')
    return point.hx, point.hy


def _clamp(point, mask, factor):
    r0, c0, r1, c1 = mask.bbox
    cx, cy = 0.5 * (c0 + c1), 0.5 * (r0 + r1)
    hw = (0.5 * (c1 - c0) + 0.5) * factor
    hh = (0.5 * (r1 - r0) + 0.5) * factor
    return (min(max(point[0], cx - hw), cx + hw),
            min(max(point[1], cy - hh), cy + hh))


def _merge_shared(a, b, tol):
    distance = math.hypot(a[0] - b[0], a[1] - b[1])
    if distance > tol:
        raise errors.SharedEdgeMismatchError(
            'shared edge corners differ by %.2f px (tolerance %.2f)' % (distance, tol))
    return 0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])


def segment_side_faces(gray, mask, cfg=None):
    """Locate the two visible side faces of one transport unit.

    Boundaries are first regressed through the vanishing points from the
    segment endpoints, then replaced by a detected line running along
    them where there is one.

    :type gray: palletscope.raster.GrayImage
    :type mask: palletscope.raster.InstanceMask
    :type cfg: PipelineConfig
    :rtype: SideFacePair
    """
    cfg = cfg or PipelineConfig()
    params = cfg.sideface
    if gray.shape != mask.shape:
        raise errors.DimensionMismatchError(
            'image is %dx%d but mask is %dx%d' % (
                gray.width, gray.height, mask.width, mask.height))
    if mask.count < params.min_mask_px:
        raise errors.MaskTooSmallError(
            'mask has %d pixels, need %d' % (mask.count, params.min_mask_px))
    size = (gray.width, gray.height)
    diag = math.hypot(*size)

    region = raster.grow_mask(mask, params.mask_margin_px)
    vertical = _detect(gray, region, raster.VERTICAL_EDGES, cfg)
    horizontal = _detect(gray, region, raster.HORIZONTAL_EDGES, cfg)
    by_line = dict((t.line, t) for t in vertical + horizontal)

    vertical_vp = estimate_vp([t.line for t in vertical], VERTICAL, cfg.vp,
                              diag, size)
    left_vp, right_vp = assign_horizontal_vps(
        [t.line for t in horizontal], gray.width, cfg.vp, diag, gray.height)
    segments = dict((line, trace.segments) for line, trace in by_line.items())
    vertical_vp = vertical_vp.with_segments(segments)
    left_vp = left_vp.with_segments(segments)
    right_vp = right_vp.with_segments(segments)
    logger.debug('vanishing points: vertical %s, left %s, right %s',
                 tuple(vertical_vp.point), tuple(left_vp.point),
                 tuple(right_vp.point))

    verticals = [by_line[line] for line in vertical_vp.supporting_lines]
    left_h = [by_line[line] for line in left_vp.supporting_lines]
    right_h = [by_line[line] for line in right_vp.supporting_lines]
    trim = params.boundary_trim_px
    snap = params.snap_tol_px

    def boundary(endpoints, through, traces):
        return _snap(_fit_boundary(endpoints, through, trim), traces, snap)

    outer_left = boundary([t.extreme(lambda p: p.x) for t in left_h],
                          vertical_vp.point, vertical)
    outer_right = boundary([t.extreme(lambda p: -p.x) for t in right_h],
                           vertical_vp.point, vertical)
    shared = boundary(_inner_points(left_h, right_h), vertical_vp.point, vertical)

    left_v = [t for t in verticals
              if _in_span(t, outer_left, shared, params.span_tol_frac)]
    right_v = [t for t in verticals
               if _in_span(t, shared, outer_right, params.span_tol_frac)]
    top_left = boundary([t.extreme(lambda p: p.y) for t in left_v],
                        left_vp.point, horizontal)
    bottom_left = boundary([t.extreme(lambda p: -p.y) for t in left_v],
                           left_vp.point, horizontal)
    top_right = boundary([t.extreme(lambda p: p.y) for t in right_v],
                         right_vp.point, horizontal)
    bottom_right = boundary([t.extreme(lambda p: -p.y) for t in right_v],
                            right_vp.point, horizontal)

    def corner(a, b):
        return _clamp(_corner(a, b), mask, params.clamp_factor)

    tol = params.shared_edge_tol_px
    top_shared = _merge_shared(corner(top_left, shared),
                               corner(top_right, shared), tol)
    bottom_shared = _merge_shared(corner(bottom_left, shared),
                                  corner(bottom_right, shared), tol)
    left = Quad([corner(top_left, outer_left), top_shared, bottom_shared,
                 corner(bottom_left, outer_left)])
    right = Quad([top_shared, corner(top_right, outer_right),
                  corner(bottom_right, outer_right), bottom_shared])
    return SideFacePair(left, right, LineSegment(top_shared, bottom_shared),
                        vertical_vp, left_vp, right_vp)


def validate_scene(vertical_vp, image_height, image_width=None, factor=3.0):
    """Check that vertical structures stay roughly parallel to the image
    sides.

    A finite vertical vanishing point closer than ``factor`` image heights
    to the image center signals a strongly tilted camera. Without
    ``image_width`` only the vertical offset is measured.

    :type vertical_vp: VanishingPointEstimate or HomogeneousPoint
    :rtype: SceneCheck
    """
    point = getattr(vertical_vp, 'point', vertical_vp)
    if point.is_infinite:
        return SceneCheck(SceneCheck.OK, '')
    x, y = point.hx / point.hw, point.hy / point.hw
    if image_width is None:
        distance = abs(y - 0.5 * image_height)
    else:
        distance = math.hypot(x - 0.5 * image_width, y - 0.5 * image_height)
    limit = factor * image_height
    if distance < limit:
        return SceneCheck(SceneCheck.WARNING,
                          'vertical vanishing point %.1f px from the image '
                          'center (limit %.1f px)' % (distance, limit))
    return SceneCheck(SceneCheck.OK, '')
