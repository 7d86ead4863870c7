"""Synthetic transport units rendered through a pinhole camera.

World coordinates are meters with ``z`` pointing up. Packages of size
``(w, d, h)`` form a regular block of ``n_a x n_b`` packages per layer
occupying ``[0, n_a*w] x [0, n_b*d]`` on top of a base pallet centered
beneath it. The camera looks at the ``x = 0`` face (``n_b`` columns, seen on
the left) and the ``y = 0`` face (``n_a`` columns, seen on the right).

Images are drawn as bright package edges on flat face shades. The ground
truth is computed from the exact projection, before any noise.
"""
import collections
import logging
import math
import os

import numpy as np
from PIL import Image, ImageDraw

from . import errors
from . import store
from .geometry import HomogeneousPoint, Quad
from .raster import GrayImage
from .structure import KLT, PACKAGE_CLASSES


__all__ = [
    'DEFAULT_RANGES',
    'SceneSpec',
    'Camera',
    'UnitTruth',
    'SceneGroundTruth',
    'project_scene',
    'sample_spec',
    'generate_suite',
]


logger = logging.getLogger(__name__)


BACKGROUND_SHADE = 0.1
PALLET_SHADE = 0.3
LEFT_SHADE = 0.5
RIGHT_SHADE = 0.6
EDGE_SHADE = 1.0

MAX_PITCH = math.radians(15.0)
MAX_ROLL = math.radians(5.0)
MIN_FACE_ANGLE = math.radians(15.0)

# Dropout removes edge pieces of about this length.
_DROPOUT_CHUNK_PX = 8.0

_MAX_ATTEMPTS = 100

DEFAULT_RANGES = {
    'n_a': (1, 3),
    'n_b': (1, 3),
    'layers': (2, 5),
    'stack_count': (1, 1),
    'distance': (4.5, 6.0),
    'azimuth': (math.pi / 4 - 0.26, math.pi / 4 + 0.26),
    'camera_height_frac': (0.35, 0.65),
    'roll': (-0.035, 0.035),
    'focal_px': (700.0, 900.0),
    'dropout': (0.0, 0.0),
    'jitter_px': (0.0, 0.0),
    'image_size': (640, 480),
    'package_dims': (0.6, 0.4, 0.28),
    'pallet_dims': (1.2, 0.8, 0.144),
}

_COUNT_RANGES = ('n_a', 'n_b', 'layers', 'stack_count')
_REAL_RANGES = ('distance', 'azimuth', 'camera_height_frac', 'roll', 'focal_px',
                'dropout', 'jitter_px')


def _positive_count(name, value):
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise errors.ConfigError('%s must be a positive integer, got %r' % (name, value))
    return int(value)


def _positive_dims(name, value):
    value = tuple(float(v) for v in value)
    if len(value) != 3 or not all(v > 0 for v in value):
        raise errors.ConfigError('%s must be three positive lengths' % name)
    return value


class SceneSpec(collections.namedtuple('SceneSpec', (
        'n_a', 'n_b', 'layers', 'package_dims', 'pallet_dims',
        'camera_position', 'yaw', 'pitch', 'roll', 'focal_px',
        'principal_point', 'image_size', 'dropout', 'jitter_px', 'seed',
        'stack_count', 'package_class', 'pallet'))):
    """Everything needed to render one scene.

    ``yaw`` is the compass direction of the optical axis from the ``x``
    axis, ``pitch`` tilts it downward and ``roll`` turns the image about
    it. ``camera_position`` of ``None`` places the camera 5 m from the
    stack center along ``yaw`` at half the stack height.
    """

    __slots__ = ()

    def __new__(cls, n_a=2, n_b=2, layers=5, package_dims=(0.6, 0.4, 0.28),
                pallet_dims=(1.2, 0.8, 0.144), camera_position=None,
                yaw=math.pi / 4, pitch=0.0, roll=0.0, focal_px=800.0,
                principal_point=None, image_size=(640, 480), dropout=0.0,
                jitter_px=0.0, seed=0, stack_count=1, package_class=KLT,
                pallet='EPAL'):
        n_a = _positive_count('n_a', n_a)
        n_b = _positive_count('n_b', n_b)
        layers = _positive_count('layers', layers)
        stack_count = _positive_count('stack_count', stack_count)
        package_dims = _positive_dims('package_dims', package_dims)
        pallet_dims = _positive_dims('pallet_dims', pallet_dims)
        width, height = (_positive_count('image_size', v) for v in image_size)
        if principal_point is None:
            principal_point = (0.5 * width, 0.5 * height)
        principal_point = tuple(float(v) for v in principal_point)
        if float(focal_px) <= 0.0:
            raise errors.ConfigError('focal_px must be positive')
        if abs(pitch) > MAX_PITCH:
            raise errors.ConfigError(
                'pitch %.4f rad exceeds %.4f rad' % (pitch, MAX_PITCH))
        if abs(roll) > MAX_ROLL:
            raise errors.ConfigError(
                'roll %.4f rad exceeds %.4f rad' % (roll, MAX_ROLL))
        if not 0.0 <= dropout <= 1.0:
            raise errors.ConfigError('dropout %r outside [0, 1]' % (dropout,))
        if jitter_px < 0.0:
            raise errors.ConfigError('jitter_px must be >= 0')
        if package_class not in PACKAGE_CLASSES:
            raise errors.ConfigError('unknown package class %r' % (package_class,))

        unit_height = pallet_dims[2] + layers * package_dims[2]
        if camera_position is None:
            cx = 0.5 * n_a * package_dims[0]
            cy = 0.5 * n_b * package_dims[1]
            camera_position = (cx - 5.0 * math.cos(yaw), cy - 5.0 * math.sin(yaw),
                               0.5 * stack_count * unit_height)
        camera_position = tuple(float(v) for v in camera_position)
        if len(camera_position) != 3:
            raise errors.ConfigError('camera_position needs three coordinates')

        self = super(SceneSpec, cls).__new__(
            cls, n_a, n_b, layers, package_dims, pallet_dims, camera_position,
            float(yaw), float(pitch), float(roll), float(focal_px),
            principal_point, (width, height), float(dropout), float(jitter_px),
            int(seed), stack_count, package_class, pallet)
        self._check_viewpoint()
        return self

    @property
    def unit_height(self):
        return self.pallet_dims[2] + self.layers * self.package_dims[2]

    @property
    def footprint(self):
        return self.n_a * self.package_dims[0], self.n_b * self.package_dims[1]

    def _check_viewpoint(self):
        x, y, z = self.camera_position
        if z >= self.stack_count * self.unit_height:
            raise errors.ConfigError(
                'camera at %.3f m must be below the stack top at %.3f m' % (
                    z, self.stack_count * self.unit_height))
        sx, sy = self.footprint
        zc = 0.5 * self.stack_count * self.unit_height
        for name, center, normal in (('left', (0.0, 0.5 * sy, zc), (-1.0, 0.0)),
                                     ('right', (0.5 * sx, 0.0, zc), (0.0, -1.0))):
            ray = np.array([x, y, z]) - center
            angle = math.asin(max(-1.0, min(1.0, (
                normal[0] * ray[0] + normal[1] * ray[1]) / np.linalg.norm(ray))))
            if angle < MIN_FACE_ANGLE:
                raise errors.ConfigError(
                    '%s face seen at %.1f degrees, need %.1f' % (
                        name, math.degrees(angle), math.degrees(MIN_FACE_ANGLE)))

    @classmethod
    def from_data(cls, data):
        try:
            return cls(**data)
        except TypeError as e:
            raise errors.ConfigError('invalid scene: %s' % e)

    def to_data(self):
        data = {}
        for key, value in zip(self._fields, self):
            data[key] = list(value) if isinstance(value, tuple) else value
        return data


class Camera(object):
    """A pinhole camera without lens distortion."""

    def __init__(self, position, yaw, pitch, roll, focal_px, principal_point):
        self.position = np.array(position, dtype=float)
        forward = np.array([math.cos(pitch) * math.cos(yaw),
                            math.cos(pitch) * math.sin(yaw),
                            -math.sin(pitch)])
        right = np.array([math.sin(yaw), -math.cos(yaw), 0.0])
        down = np.cross(forward, right)
        rolled_right = math.cos(roll) * right + math.sin(roll) * down
        rolled_down = -math.sin(roll) * right + math.cos(roll) * down
        self.rotation = np.vstack([rolled_right, rolled_down, forward])
        self.intrinsics = np.array([[focal_px, 0.0, principal_point[0]],
                                    [0.0, focal_px, principal_point[1]],
                                    [0.0, 0.0, 1.0]])

    @classmethod
    def from_spec(cls, spec):
        return cls(spec.camera_position, spec.yaw, spec.pitch, spec.roll,
                   spec.focal_px, spec.principal_point)

    def project(self, points):
        """Project ``(N, 3)`` world points to ``(N, 2)`` pixels."""
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        cam = (points - self.position).dot(self.rotation.T)
        if np.any(cam[:, 2] <= 1e-9):
            raise errors.SceneOutOfFrameError('scene point behind the camera')
        hom = cam.dot(self.intrinsics.T)
        return hom[:, :2] / hom[:, 2:3]

    def vanishing_point(self, direction):
        """Image of the world direction ``direction``.

        :rtype: HomogeneousPoint
        """
        h = self.intrinsics.dot(self.rotation.dot(np.asarray(direction, dtype=float)))
        if abs(h[2]) < 1e-12:
            return HomogeneousPoint.at_infinity(h[0], h[1])
        return HomogeneousPoint(h[0] / h[2], h[1] / h[2], 1.0)


class UnitTruth(collections.namedtuple('UnitTruth', (
        'left', 'right', 'left_packages', 'right_packages', 'structure',
        'pallet', 'package_class'))):
    """Ground truth of one transport unit; the instance mask is the union
    of the two face quads."""

    __slots__ = ()

    def to_data(self):
        packages = [{'quad': q.to_data(), 'class': self.package_class, 'score': 1.0}
                    for q in self.left_packages + self.right_packages]
        return {
            'mask': [self.left.to_data(), self.right.to_data()],
            'faces': [self.left.to_data(), self.right.to_data()],
            'packages': packages,
            'pallet': self.pallet,
            'structure': dict(self.structure),
        }


class SceneGroundTruth(collections.namedtuple('SceneGroundTruth', (
        'units', 'vertical_vp', 'left_vp', 'right_vp', 'camera'))):

    __slots__ = ()

    def to_annotation(self, image_path, spec=None):
        """The annotation record of the scene.

        :rtype: dict
        """
        data = {
            'object': 'annotation',
            'image_path': image_path,
            'units': [unit.to_data() for unit in self.units],
        }
        if spec is not None:
            data['scene'] = spec.to_data()
        return data


def _face_lattice(spec, base_z):
    """3D lattice vertices of the two visible faces of one unit.

    ``left[i][j]`` is the vertex at layer boundary ``i`` and column boundary
    ``j`` counted from screen left; the same holds for ``right``.
    """
    w, d, h = spec.package_dims
    z0 = base_z + spec.pallet_dims[2]
    left = [[(0.0, (spec.n_b - j) * d, z0 + (spec.layers - i) * h)
             for j in range(spec.n_b + 1)] for i in range(spec.layers + 1)]
    right = [[(j * w, 0.0, z0 + (spec.layers - i) * h)
              for j in range(spec.n_a + 1)] for i in range(spec.layers + 1)]
    return left, right


def _pallet_faces(spec, base_z):
    sx, sy = spec.footprint
    pw, pd, ph = spec.pallet_dims
    x0, x1 = 0.5 * (sx - pw), 0.5 * (sx + pw)
    y0, y1 = 0.5 * (sy - pd), 0.5 * (sy + pd)
    z0, z1 = base_z, base_z + ph
    left = [(x0, y1, z1), (x0, y0, z1), (x0, y0, z0), (x0, y1, z0)]
    right = [(x0, y0, z1), (x1, y0, z1), (x1, y0, z0), (x0, y0, z0)]
    return left, right


def _corners(lattice):
    return [lattice[0][0], lattice[0][-1], lattice[-1][-1], lattice[-1][0]]


def _cells(lattice):
    rows = len(lattice) - 1
    cols = len(lattice[0]) - 1
    return [[lattice[i][j], lattice[i][j + 1], lattice[i + 1][j + 1], lattice[i + 1][j]]
            for i in range(rows) for j in range(cols)]


def _lattice_edges(lattice):
    edges = []
    for i, row in enumerate(lattice):
        for j, vertex in enumerate(row):
            if j + 1 < len(row):
                edges.append((vertex, row[j + 1]))
            if i + 1 < len(lattice):
                edges.append((vertex, lattice[i + 1][j]))
    return edges


def _quad(camera, points):
    return Quad([tuple(p) for p in camera.project(points)])


def _check_frame(spec, camera, boxes):
    width, height = spec.image_size
    projected = camera.project(np.array(boxes).reshape(-1, 3))
    if (projected[:, 0].min() < 0.0 or projected[:, 1].min() < 0.0 or
            projected[:, 0].max() > width - 1 or projected[:, 1].max() > height - 1):
        raise errors.SceneOutOfFrameError(
            'scene spans x [%.1f, %.1f], y [%.1f, %.1f] outside %dx%d' % (
                projected[:, 0].min(), projected[:, 0].max(),
                projected[:, 1].min(), projected[:, 1].max(), width, height))


def _level(shade):
    return int(round(shade * 255.0))


def project_scene(spec):
    """Render ``spec`` and compute its ground truth.

    :type spec: SceneSpec
    :rtype: tuple of (GrayImage, SceneGroundTruth)
    """
    camera = Camera.from_spec(spec)
    width, height = spec.image_size
    sx, sy = spec.footprint
    pw, pd, _ = spec.pallet_dims

    boxes = []
    units = []
    faces = []
    for k in range(spec.stack_count):
        base_z = k * spec.unit_height
        top = (k + 1) * spec.unit_height
        for x in (0.0, sx, 0.5 * (sx - pw), 0.5 * (sx + pw)):
            for y in (0.0, sy, 0.5 * (sy - pd), 0.5 * (sy + pd)):
                boxes.extend([(x, y, base_z), (x, y, top)])
        faces.append((_face_lattice(spec, base_z), _pallet_faces(spec, base_z)))
    _check_frame(spec, camera, boxes)

    for (left, right), _ in faces:
        structure = {
            'rows_l': spec.layers,
            'cols_l': spec.n_b,
            'rows_r': spec.layers,
            'cols_r': spec.n_a,
            'total': spec.layers * spec.n_a * spec.n_b,
        }
        units.append(UnitTruth(
            _quad(camera, _corners(left)),
            _quad(camera, _corners(right)),
            [_quad(camera, cell) for cell in _cells(left)],
            [_quad(camera, cell) for cell in _cells(right)],
            structure, spec.pallet, spec.package_class))

    truth = SceneGroundTruth(
        units,
        camera.vanishing_point((0.0, 0.0, 1.0)),
        camera.vanishing_point((0.0, 1.0, 0.0)),
        camera.vanishing_point((1.0, 0.0, 0.0)),
        camera)
    image = _render(spec, camera, faces)
    logger.debug('rendered %d unit(s) of %dx%dx%d packages',
                 spec.stack_count, spec.n_a, spec.n_b, spec.layers)
    return image, truth


def _render(spec, camera, faces):
    rng = np.random.default_rng(spec.seed)
    size = tuple(spec.image_size)
    canvas = Image.new('L', size, _level(BACKGROUND_SHADE))
    draw = ImageDraw.Draw(canvas)
    ink = Image.new('L', size, 0)
    pen = ImageDraw.Draw(ink)

    def polygon(points):
        return [tuple(p) for p in camera.project(points)]

    for (left, right), (pallet_left, pallet_right) in faces:
        draw.polygon(polygon(pallet_left), fill=_level(PALLET_SHADE))
        draw.polygon(polygon(pallet_right), fill=_level(PALLET_SHADE))
        draw.polygon(polygon(_corners(left)), fill=_level(LEFT_SHADE))
        draw.polygon(polygon(_corners(right)), fill=_level(RIGHT_SHADE))

    jitter = {}

    def image_point(vertex):
        if vertex not in jitter:
            offset = (rng.normal(0.0, spec.jitter_px, 2) if spec.jitter_px > 0.0
                      else np.zeros(2))
            jitter[vertex] = camera.project(vertex)[0] + offset
        return jitter[vertex]

    for (left, right), _ in faces:
        for a, b in _lattice_edges(left) + _lattice_edges(right):
            p, q = image_point(a), image_point(b)
            pieces = max(1, int(math.ceil(np.linalg.norm(q - p) / _DROPOUT_CHUNK_PX)))
            for c in range(pieces):
                if spec.dropout > 0.0 and rng.random() < spec.dropout:
                    continue
                # Pillow truncates float coordinates
                start = np.rint(p + (q - p) * c / pieces)
                end = np.rint(p + (q - p) * (c + 1) / pieces)
                pen.line([tuple(start), tuple(end)], fill=_level(EDGE_SHADE), width=1)

    pixels = np.asarray(canvas, dtype=float) / 255.0
    pixels = np.where(np.asarray(ink) > 0, EDGE_SHADE, pixels)
    return GrayImage(pixels)


def _range(ranges, key):
    value = ranges[key]
    try:
        lo, hi = value
    except (TypeError, ValueError):
        raise errors.ConfigError('range %s must be a [low, high] pair' % key)
    if lo > hi:
        raise errors.ConfigError('range %s is empty: %r > %r' % (key, lo, hi))
    return lo, hi


def _merged_ranges(ranges):
    merged = dict(DEFAULT_RANGES)
    if ranges:
        unknown = sorted(set(ranges) - set(DEFAULT_RANGES))
        if unknown:
            raise errors.ConfigError('unknown ranges %s' % ', '.join(unknown))
        merged.update(ranges)
    return merged


def sample_spec(rng, ranges=None):
    """Draw a scene from ``ranges``; the camera aims at the stack center.

    The returned spec satisfies every viewpoint rule, but the stack may
    still leave the frame; :func:`project_scene` reports that.

    :type rng: numpy.random.Generator
    :rtype: SceneSpec
    """
    ranges = _merged_ranges(ranges)
    counts = {}
    for key in _COUNT_RANGES:
        lo, hi = _range(ranges, key)
        counts[key] = int(rng.integers(lo, hi + 1))
    reals = {}
    for key in _REAL_RANGES:
        lo, hi = _range(ranges, key)
        reals[key] = float(rng.uniform(lo, hi))

    package_dims = tuple(ranges['package_dims'])
    pallet_dims = tuple(ranges['pallet_dims'])
    sx = counts['n_a'] * package_dims[0]
    sy = counts['n_b'] * package_dims[1]
    tower = counts['stack_count'] * (pallet_dims[2] + counts['layers'] * package_dims[2])
    yaw = reals['azimuth']
    distance = reals['distance']
    z = reals['camera_height_frac'] * tower
    pitch = math.atan2(z - 0.5 * tower, distance)
    return SceneSpec(
        n_a=counts['n_a'], n_b=counts['n_b'], layers=counts['layers'],
        package_dims=package_dims, pallet_dims=pallet_dims,
        camera_position=(0.5 * sx - distance * math.cos(yaw),
                         0.5 * sy - distance * math.sin(yaw), z),
        yaw=yaw, pitch=pitch, roll=reals['roll'], focal_px=reals['focal_px'],
        image_size=tuple(ranges['image_size']), dropout=reals['dropout'],
        jitter_px=reals['jitter_px'], seed=int(rng.integers(2 ** 31)),
        stack_count=counts['stack_count'])


def generate_suite(count, seed, ranges=None, out_dir='.'):
    """Write ``count`` reproducible scenes to ``out_dir``.

    Scene ``i`` is drawn from a generator seeded with ``[seed, i]``; each
    gets ``scene_<i>.png`` and ``scene_<i>.json``, and ``manifest.json``
    lists the pairs.

    :returns: list of ``(image_path, annotation_path)``.
    """
    if count < 0:
        raise errors.ConfigError('count must be >= 0')
    ranges = _merged_ranges(ranges)
    entries = []
    pairs = []
    for i in range(count):
        rng = np.random.default_rng([seed, i])
        failure = None
        for _ in range(_MAX_ATTEMPTS):
            try:
                spec = sample_spec(rng, ranges)
                image, truth = project_scene(spec)
                break
            except (errors.ConfigError, errors.SceneOutOfFrameError) as e:
                failure = e
        else:
            raise errors.ConfigError(
                'no valid scene within the ranges after %d attempts: %s' % (
                    _MAX_ATTEMPTS, failure))
        name = 'scene_%04d' % i
        image_path = os.path.join(out_dir, name + '.png')
        annotation_path = os.path.join(out_dir, name + '.json')
        image.save_png(image_path)
        store.write_document(annotation_path, {
            'object': 'list',
            'data': [truth.to_annotation(name + '.png', spec)],
        })
        entries.append({'image': name + '.png', 'annotation': name + '.json'})
        pairs.append((image_path, annotation_path))
        logger.info('scene %d/%d: %dx%dx%d packages', i + 1, count,
                    spec.n_a, spec.n_b, spec.layers)
    store.write_document(os.path.join(out_dir, 'manifest.json'), {
        'object': 'list',
        'seed': seed,
        'data': entries,
    })
    return pairs
