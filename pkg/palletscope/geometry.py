"""Exact 2D projective geometry primitives.

Pixel coordinates use the image convention: origin at the top-left corner,
``x`` to the right, ``y`` downward, and the center of pixel ``(row, col)``
at ``(col, row)``. Every value type here is an immutable tuple and safe to
share between threads.
"""
import collections
import logging
import math

import numpy as np

from . import errors


__all__ = [
    'Point2',
    'HomogeneousPoint',
    'PolarLine',
    'LineSegment',
    'Quad',
    'Homography',
    'intersect_lines',
    'point_line_distance',
    'polygon_area',
    'quad_iou',
    'homography_from_correspondences',
    'apply_homography',
    'points_in_polygon',
    'polygon_mask',
]


logger = logging.getLogger(__name__)


# |sin(theta_a - theta_b)| below this makes two lines parallel.
_PARALLEL_EPS = 1e-12

# |w| below this after mapping is a point at infinity.
_INFINITY_EPS = 1e-12

_DEFAULT_IOU_RESOLUTION = 1024


def _canonical_direction(dx, dy):
    norm = math.hypot(dx, dy)
    if norm == 0.0:
        raise errors.InvalidGeometryError('direction has zero length')
    dx, dy = dx / norm, dy / norm
    if dy < 0.0 or (dy == 0.0 and dx < 0.0):
        dx, dy = -dx, -dy
    return dx, dy


class Point2(collections.namedtuple('Point2', ('x', 'y'))):
    """A finite pixel coordinate."""

    __slots__ = ()

    def __new__(cls, x, y):
        x, y = float(x), float(y)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise errors.InvalidGeometryError(
                'point is not finite: (%r, %r)' % (x, y))
        return super(Point2, cls).__new__(cls, x, y)


class HomogeneousPoint(collections.namedtuple('HomogeneousPoint',
                                              ('hx', 'hy', 'hw'))):
    """A projective point. ``hw == 0`` encodes a direction at infinity.

    Points produced by this module are dehomogenized (``hw == 1``) when
    finite, and carry a unit direction with canonical sign when at infinity.
    """

    __slots__ = ()

    def __new__(cls, hx, hy, hw):
        hx, hy, hw = float(hx), float(hy), float(hw)
        if not all(math.isfinite(v) for v in (hx, hy, hw)):
            raise errors.InvalidGeometryError('homogeneous point is not finite')
        if hx == 0.0 and hy == 0.0 and hw == 0.0:
            raise errors.InvalidGeometryError('homogeneous point is all zero')
        return super(HomogeneousPoint, cls).__new__(cls, hx, hy, hw)

    @classmethod
    def from_point(cls, p):
        return cls(p[0], p[1], 1.0)

    @classmethod
    def at_infinity(cls, dx, dy):
        dx, dy = _canonical_direction(dx, dy)
        return cls(dx, dy, 0.0)

    @property
    def is_infinite(self):
        return self.hw == 0.0

    @property
    def direction(self):
        """Unit direction of a point at infinity.

        :rtype: tuple
        """
        if not self.is_infinite:
            raise errors.InvalidGeometryError('point is finite')
        return _canonical_direction(self.hx, self.hy)

    def to_point(self):
        """Dehomogenize into a :class:`Point2`.

        :rtype: Point2
        """
        if self.is_infinite:
            raise errors.InfinitePointError('point lies at infinity')
        return Point2(self.hx / self.hw, self.hy / self.hw)


class PolarLine(collections.namedtuple('PolarLine', ('rho', 'theta'))):
    """A line in Hough normal form ``x*cos(theta) + y*sin(theta) = rho``.

    ``theta`` is normalized into ``[0, pi)``; ``rho`` changes sign when the
    normal is flipped.
    """

    __slots__ = ()

    def __new__(cls, rho, theta):
        rho, theta = float(rho), float(theta)
        if not (math.isfinite(rho) and math.isfinite(theta)):
            raise errors.InvalidGeometryError('line is not finite')
        theta = math.fmod(theta, 2.0 * math.pi)
        if theta < 0.0:
            theta += 2.0 * math.pi
        if theta >= math.pi:
            theta -= math.pi
            rho = -rho
        if theta >= math.pi:
            theta = 0.0
            rho = -rho
        return super(PolarLine, cls).__new__(cls, rho, theta)

    @classmethod
    def through(cls, p, q):
        """The line through two distinct points.

        :rtype: PolarLine
        """
        dx, dy = q[0] - p[0], q[1] - p[1]
        norm = math.hypot(dx, dy)
        if norm == 0.0:
            raise errors.InvalidGeometryError('points coincide')
        nx, ny = -dy / norm, dx / norm
        return cls(nx * p[0] + ny * p[1], math.atan2(ny, nx))

    @classmethod
    def from_point_angle(cls, p, phi):
        """The line through ``p`` whose direction makes angle ``phi`` with
        the x axis.

        :rtype: PolarLine
        """
        nx, ny = -math.sin(phi), math.cos(phi)
        return cls(nx * p[0] + ny * p[1], math.atan2(ny, nx))

    @classmethod
    def from_coefficients(cls, a, b, c):
        """The line ``a*x + b*y + c = 0``.

        :rtype: PolarLine
        """
        norm = math.hypot(a, b)
        if norm == 0.0:
            raise errors.InvalidGeometryError('line coefficients are zero')
        return cls(-c / norm, math.atan2(b, a))

    @property
    def normal(self):
        return math.cos(self.theta), math.sin(self.theta)

    @property
    def direction(self):
        return _canonical_direction(-math.sin(self.theta), math.cos(self.theta))

    @property
    def direction_angle(self):
        """Angle of the line direction in ``[0, pi)``."""
        phi = self.theta + 0.5 * math.pi
        return phi - math.pi if phi >= math.pi else phi

    @property
    def coefficients(self):
        return math.cos(self.theta), math.sin(self.theta), -self.rho

    def signed_distance(self, x, y):
        """Signed distance of ``(x, y)``; accepts scalars or arrays."""
        return x * math.cos(self.theta) + y * math.sin(self.theta) - self.rho


class LineSegment(collections.namedtuple('LineSegment', ('p0', 'p1'))):
    """A segment between two distinct points."""

    __slots__ = ()

    def __new__(cls, p0, p1):
        p0 = p0 if isinstance(p0, Point2) else Point2(*p0)
        p1 = p1 if isinstance(p1, Point2) else Point2(*p1)
        if p0 == p1:
            raise errors.InvalidGeometryError('segment has zero length')
        return super(LineSegment, cls).__new__(cls, p0, p1)

    @property
    def length(self):
        return math.hypot(self.p1.x - self.p0.x, self.p1.y - self.p0.y)

    @property
    def midpoint(self):
        return Point2(0.5 * (self.p0.x + self.p1.x), 0.5 * (self.p0.y + self.p1.y))

    @property
    def line(self):
        return PolarLine.through(self.p0, self.p1)


def _signed_area(points):
    total = 0.0
    n = len(points)
    for i in range(n):
        x0, y0 = points[i]
        x1, y1 = points[(i + 1) % n]
        total += x0 * y1 - x1 * y0
    return 0.5 * total


def _orientation(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a, b, p):
    return (min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and
            min(a[1], b[1]) <= p[1] <= max(a[1], b[1]))


def _segments_intersect(a, b, c, d):
    o1 = _orientation(a, b, c)
    o2 = _orientation(a, b, d)
    o3 = _orientation(c, d, a)
    o4 = _orientation(c, d, b)
    if ((o1 > 0) != (o2 > 0) and o1 != 0 and o2 != 0 and
            (o3 > 0) != (o4 > 0) and o3 != 0 and o4 != 0):
        return True
    if o1 == 0 and _on_segment(a, b, c):
        return True
    if o2 == 0 and _on_segment(a, b, d):
        return True
    if o3 == 0 and _on_segment(c, d, a):
        return True
    if o4 == 0 and _on_segment(c, d, b):
        return True
    return False


def is_simple_quad(points):
    """Returns ``True`` if the cyclic 4-gon ``points`` does not
    self-intersect and has no repeated corners.

    :type points: sequence of (x, y)
    :rtype: bool
    """
    for i in range(4):
        for j in range(i + 1, 4):
            if points[i][0] == points[j][0] and points[i][1] == points[j][1]:
                return False
    if _segments_intersect(points[0], points[1], points[2], points[3]):
        return False
    if _segments_intersect(points[1], points[2], points[3], points[0]):
        return False
    return True


class Quad(collections.namedtuple('Quad', ('corners',))):
    """Four corners, clockwise on screen, starting at the top-left-most.

    The constructor accepts the corners in cyclic order with either
    winding and canonicalizes them: positive shoelace area (clockwise with
    ``y`` pointing down), starting at the corner with the smallest
    ``x + y`` (ties broken by the smaller ``y``).

    Basic usage::

        >>> from palletscope.geometry import Quad
        >>> Quad([(0, 1), (1, 1), (1, 0), (0, 0)]).corners[0]
        Point2(x=0.0, y=0.0)
    """

    __slots__ = ()

    def __new__(cls, corners):
        points = [p if isinstance(p, Point2) else Point2(*p) for p in corners]
        if len(points) != 4:
            raise errors.InvalidGeometryError(
                'quad needs 4 corners, got %d' % len(points))
        if not is_simple_quad(points):
            raise errors.InvalidGeometryError('quad is self-intersecting')
        area = _signed_area(points)
        if area == 0.0:
            raise errors.InvalidGeometryError('quad has zero area')
        if area < 0.0:
            points = [points[0], points[3], points[2], points[1]]
        start = min(range(4), key=lambda i: (points[i].x + points[i].y,
                                             points[i].y))
        points = points[start:] + points[:start]
        return super(Quad, cls).__new__(cls, tuple(points))

    @classmethod
    def from_points(cls, points):
        return cls(points)

    @classmethod
    def from_unordered(cls, points):
        """Build a quad from corners in arbitrary order (angular sort about
        the vertex mean).

        :rtype: Quad
        """
        points = [tuple(map(float, p)) for p in points]
        if len(points) != 4:
            raise errors.InvalidGeometryError(
                'quad needs 4 corners, got %d' % len(points))
        cx = sum(p[0] for p in points) / 4.0
        cy = sum(p[1] for p in points) / 4.0
        points.sort(key=lambda p: math.atan2(p[1] - cy, p[0] - cx))
        return cls(points)

    @property
    def area(self):
        return _signed_area(self.corners)

    @property
    def centroid(self):
        """Area centroid.

        :rtype: Point2
        """
        a = 0.0
        cx = 0.0
        cy = 0.0
        for i in range(4):
            x0, y0 = self.corners[i]
            x1, y1 = self.corners[(i + 1) % 4]
            cross = x0 * y1 - x1 * y0
            a += cross
            cx += (x0 + x1) * cross
            cy += (y0 + y1) * cross
        return Point2(cx / (3.0 * a), cy / (3.0 * a))

    @property
    def is_convex(self):
        for i in range(4):
            if _orientation(self.corners[i], self.corners[(i + 1) % 4],
                            self.corners[(i + 2) % 4]) < 0.0:
                return False
        return True

    def upright_corners(self):
        """Corners as ``(top_left, top_right, bottom_right, bottom_left)``.

        The top edge is the pair of consecutive corners with the smallest
        mean ``y``; it need not start at ``corners[0]`` once the quad is
        tilted.

        :rtype: tuple of Point2
        """
        top = min(range(4), key=lambda i: (
            self.corners[i].y + self.corners[(i + 1) % 4].y, i))
        return self.corners[top:] + self.corners[:top]

    def contains(self, x, y):
        return points_in_polygon(x, y, self.corners)

    def scaled(self, s):
        return Quad([(p.x * s, p.y * s) for p in self.corners])

    def translated(self, dx, dy):
        return Quad([(p.x + dx, p.y + dy) for p in self.corners])

    def as_array(self):
        return np.array(self.corners, dtype=float)

    def to_data(self):
        return [[p.x, p.y] for p in self.corners]


def intersect_lines(a, b):
    """Intersect two polar lines.

    Parallel lines meet at infinity in their shared direction.

    :type a: PolarLine
    :type b: PolarLine
    :rtype: HomogeneousPoint
    """
    a0, a1, a2 = a.coefficients
    b0, b1, b2 = b.coefficients
    hx = a1 * b2 - a2 * b1
    hy = a2 * b0 - a0 * b2
    hw = a0 * b1 - a1 * b0
    if abs(hw) <= _PARALLEL_EPS:
        scale = max(1.0, abs(a.rho), abs(b.rho))
        if math.hypot(hx, hy) <= 1e-9 * scale:
            raise errors.IdenticalLinesError(
                'lines %r and %r coincide' % (tuple(a), tuple(b)))
        dx, dy = a.direction
        return HomogeneousPoint.at_infinity(dx, dy)
    return HomogeneousPoint(hx / hw, hy / hw, 1.0)


def point_line_distance(p, line):
    """Euclidean distance between a finite point and a line.

    :type p: HomogeneousPoint
    :type line: PolarLine
    :rtype: float
    """
    if p.is_infinite:
        raise errors.InfinitePointError(
            'distance to a point at infinity is undefined')
    x, y = p.hx / p.hw, p.hy / p.hw
    return abs(line.signed_distance(x, y))


def polygon_area(q):
    """Shoelace area of a quad.

    :type q: Quad
    :rtype: float
    """
    return abs(_signed_area(q.corners))


def _clip_convex(subject, clip):
    # Sutherland-Hodgman; both polygons have positive orientation.
    output = list(subject)
    cp1 = clip[-1]
    for cp2 in clip:
        if not output:
            return []
        source = output
        output = []

        def inside(p):
            return ((cp2[0] - cp1[0]) * (p[1] - cp1[1]) -
                    (cp2[1] - cp1[1]) * (p[0] - cp1[0])) >= 0.0

        def crossing(s, e):
            dcx, dcy = cp1[0] - cp2[0], cp1[1] - cp2[1]
            dpx, dpy = s[0] - e[0], s[1] - e[1]
            n1 = cp1[0] * cp2[1] - cp1[1] * cp2[0]
            n2 = s[0] * e[1] - s[1] * e[0]
            n3 = 1.0 / (dcx * dpy - dcy * dpx)
            return ((n1 * dpx - n2 * dcx) * n3, (n1 * dpy - n2 * dcy) * n3)

        s = source[-1]
        for e in source:
            if inside(e):
                if not inside(s):
                    output.append(crossing(s, e))
                output.append(e)
            elif inside(s):
                output.append(crossing(s, e))
            s = e
        cp1 = cp2
    return output


def points_in_polygon(xs, ys, polygon):
    """Vectorized even-odd point-in-polygon test.

    :param xs: x coordinates (scalar or array).
    :param ys: y coordinates, broadcastable against ``xs``.
    :param polygon: sequence of (x, y) vertices.
    :rtype: numpy.ndarray of bool
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    inside = np.zeros(np.broadcast(xs, ys).shape, dtype=bool)
    n = len(polygon)
    for i in range(n):
        x0, y0 = polygon[i]
        x1, y1 = polygon[(i + 1) % n]
        if y0 == y1:
            continue
        crosses = (y0 > ys) != (y1 > ys)
        x_at = x0 + (ys - y0) * ((x1 - x0) / (y1 - y0))
        inside ^= crosses & (xs < x_at)
    return inside


def polygon_mask(shape, polygon):
    """Rasterize a polygon by pixel centers.

    :param shape: ``(height, width)`` of the output.
    :rtype: numpy.ndarray of bool
    """
    height, width = shape
    out = np.zeros((height, width), dtype=bool)
    xs = [p[0] for p in polygon]
    ys = [p[1] for p in polygon]
    c0 = max(0, int(math.floor(min(xs))))
    c1 = min(width - 1, int(math.ceil(max(xs))))
    r0 = max(0, int(math.floor(min(ys))))
    r1 = min(height - 1, int(math.ceil(max(ys))))
    if c0 > c1 or r0 > r1:
        return out
    rows, cols = np.mgrid[r0:r1 + 1, c0:c1 + 1]
    out[r0:r1 + 1, c0:c1 + 1] = points_in_polygon(cols, rows, polygon)
    return out


def _raster_iou(a, b, resolution):
    corners = a.corners + b.corners
    x0 = min(p.x for p in corners)
    x1 = max(p.x for p in corners)
    y0 = min(p.y for p in corners)
    y1 = max(p.y for p in corners)
    cell = max(x1 - x0, y1 - y0) / float(resolution)
    nx = max(1, int(math.ceil((x1 - x0) / cell)))
    ny = max(1, int(math.ceil((y1 - y0) / cell)))
    xs = x0 + (np.arange(nx) + 0.5) * cell
    ys = y0 + (np.arange(ny) + 0.5) * cell
    gx, gy = np.meshgrid(xs, ys)
    in_a = points_in_polygon(gx, gy, a.corners)
    in_b = points_in_polygon(gx, gy, b.corners)
    union = np.count_nonzero(in_a | in_b)
    if union == 0:
        return 0.0
    return np.count_nonzero(in_a & in_b) / float(union)


def quad_iou(a, b, resolution=None):
    """Intersection over union of two quads.

    Convex pairs are clipped exactly; otherwise both quads are rasterized
    on a common grid of ``resolution`` cells along the longer side of
    their joint bounding box.

    :type a: Quad
    :type b: Quad
    :type resolution: int or None
    :rtype: float
    """
    if a == b:
        return 1.0
    if b.corners < a.corners:
        a, b = b, a
    if not (a.is_convex and b.is_convex):
        return _raster_iou(a, b, resolution or _DEFAULT_IOU_RESOLUTION)
    clipped = _clip_convex(a.corners, b.corners)
    if len(clipped) < 3:
        return 0.0
    inter = abs(_signed_area(clipped))
    union = polygon_area(a) + polygon_area(b) - inter
    if union <= 0.0:
        return 0.0
    return min(1.0, max(0.0, inter / union))


class Homography(object):
    """An invertible 3x3 projective map in canonical form.

    The matrix is scaled to unit Frobenius norm and its largest-magnitude
    entry is made positive, so equal maps have bit-identical matrices.
    """

    __slots__ = ('_m',)

    def __init__(self, m):
        m = np.array(m, dtype=float).reshape(3, 3)
        if not np.all(np.isfinite(m)):
            raise errors.InvalidGeometryError('homography is not finite')
        norm = np.linalg.norm(m)
        if norm == 0.0:
            raise errors.InvalidGeometryError('homography is zero')
        m = m / norm
        if abs(np.linalg.det(m)) < 1e-15:
            raise errors.InvalidGeometryError('homography is singular')
        if m.flat[int(np.argmax(np.abs(m)))] < 0.0:
            m = -m
        m.setflags(write=False)
        self._m = m

    @classmethod
    def identity(cls):
        return cls(np.eye(3))

    @property
    def matrix(self):
        return self._m.copy()

    def __eq__(self, other):
        return isinstance(other, Homography) and np.array_equal(self._m, other._m)

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return hash(self._m.tobytes())

    def __repr__(self):
        return '<Homography %s>' % np.array2string(self._m, precision=6)

    def inverse(self):
        return Homography(np.linalg.inv(self._m))

    def apply(self, p):
        return apply_homography(self, p)

    def apply_many(self, points):
        """Map an ``(N, 2)`` array of points.

        :rtype: numpy.ndarray
        """
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        hom = np.hstack([points, np.ones((len(points), 1))]).dot(self._m.T)
        if np.any(np.abs(hom[:, 2]) < _INFINITY_EPS):
            raise errors.MapsToInfinityError('a point maps to infinity')
        return hom[:, :2] / hom[:, 2:3]


def apply_homography(h, p):
    """Map a point through a homography.

    :type h: Homography
    :type p: Point2
    :rtype: Point2
    """
    m = h._m
    x, y = p[0], p[1]
    hx = m[0, 0] * x + m[0, 1] * y + m[0, 2]
    hy = m[1, 0] * x + m[1, 1] * y + m[1, 2]
    hw = m[2, 0] * x + m[2, 1] * y + m[2, 2]
    if abs(hw) < _INFINITY_EPS:
        raise errors.MapsToInfinityError('point %r maps to infinity' % (tuple(p),))
    return Point2(hx / hw, hy / hw)


def _normalizing_transform(points):
    centroid = points.mean(axis=0)
    mean_dist = np.mean(np.linalg.norm(points - centroid, axis=1))
    scale = math.sqrt(2.0) / mean_dist
    return np.array([[scale, 0.0, -scale * centroid[0]],
                     [0.0, scale, -scale * centroid[1]],
                     [0.0, 0.0, 1.0]])


def _check_no_three_collinear(points, label):
    extent = max(np.ptp(points[:, 0]), np.ptp(points[:, 1]), 1e-300)
    for i in range(4):
        for j in range(i + 1, 4):
            for k in range(j + 1, 4):
                if abs(_orientation(points[i], points[j], points[k])) <= \
                        1e-9 * extent * extent:
                    raise errors.DegenerateCorrespondenceError(
                        '%s points %d, %d, %d are collinear' % (label, i, j, k))


def homography_from_correspondences(src, dst):
    """Direct linear transform from four point correspondences.

    Coordinates are normalized before solving so the eight equations stay
    well conditioned.

    :type src: sequence of 4 points
    :type dst: sequence of 4 points
    :rtype: Homography
    """
    src = np.array([tuple(p) for p in src], dtype=float)
    dst = np.array([tuple(p) for p in dst], dtype=float)
    if src.shape != (4, 2) or dst.shape != (4, 2):
        raise errors.DegenerateCorrespondenceError('need exactly 4 correspondences')
    _check_no_three_collinear(src, 'source')
    _check_no_three_collinear(dst, 'target')

    t_src = _normalizing_transform(src)
    t_dst = _normalizing_transform(dst)
    s = np.hstack([src, np.ones((4, 1))]).dot(t_src.T)
    d = np.hstack([dst, np.ones((4, 1))]).dot(t_dst.T)

    rows = []
    for (x, y, _), (u, v, _) in zip(s, d):
        rows.append([-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u])
        rows.append([0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v])
    _, _, vt = np.linalg.svd(np.array(rows))
    h_norm = vt[-1].reshape(3, 3)
    m = np.linalg.inv(t_dst).dot(h_norm).dot(t_src)
    return Homography(m)
