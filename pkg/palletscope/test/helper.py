try:
    import mock
except ImportError:
    from unittest import mock

import json
import math
import os
import shutil
import tempfile

import numpy as np


def pencil(vp, angles):
    """Polar lines through ``vp`` at the given direction angles."""
    from ..geometry import PolarLine
    return [PolarLine.from_point_angle(vp, phi) for phi in angles]


def box_bits(height, width, rows, cols):
    """A ``(height, width)`` bit array with ``rows x cols`` set."""
    bits = np.zeros((height, width), dtype=bool)
    bits[rows[0]:rows[1], cols[0]:cols[1]] = True
    return bits


def grid_image(height, width, xs, ys, background=0.5, ink=1.0):
    """Gray pixels with one-pixel lines at columns ``xs`` and rows ``ys``."""
    pixels = np.full((height, width), background)
    for x in xs:
        pixels[:, x] = ink
    for y in ys:
        pixels[y, :] = ink
    return pixels


def rectangle(x0, y0, x1, y1):
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]


class _TempDirMixin(object):

    def setUp(self):
        super(_TempDirMixin, self).setUp()
        self.tmpdir = tempfile.mkdtemp(prefix='palletscope-test-')

    def tearDown(self):
        shutil.rmtree(self.tmpdir, ignore_errors=True)
        super(_TempDirMixin, self).tearDown()

    def path(self, *parts):
        return os.path.join(self.tmpdir, *parts)

    def writeDocument(self, name, data):
        path = self.path(name)
        with open(path, 'w') as f:
            json.dump(data, f)
        return path

    def readDocument(self, name):
        with open(self.path(name)) as f:
            return json.load(f)


class _RecordMixin(object):

    def _getTargetClass(self):
        from ..records import Base
        return Base

    def test_from_data(self):
        class_ = self._getTargetClass()
        instance = class_.from_data({'image_path': 'a.png', 'units': []})
        self.assertEqual(instance.image_path, 'a.png')
        self.assertEqual(instance.get('missing', 'x'), 'x')

    def test_repr(self):
        class_ = self._getTargetClass()
        instance = class_.from_data({'image_path': 'a.png'})
        self.assertEqual(
            repr(instance),
            "<%s image='%s' at %s>" % (
                class_.__name__,
                'a.png',
                hex(id(instance)),
            )
        )

    def test_repr_without_image(self):
        class_ = self._getTargetClass()
        instance = class_.from_data({})
        self.assertEqual(
            repr(instance),
            "<%s at %s>" % (
                class_.__name__,
                hex(id(instance)),
            )
        )

    def test_missing_attribute(self):
        class_ = self._getTargetClass()
        instance = class_.from_data({})
        self.assertRaises(AttributeError, getattr, instance, 'image_path')


class _AngleAssertable(object):

    def assertAngleAlmostEqual(self, a, b, places=7):
        d = (a - b) % math.pi
        self.assertAlmostEqual(min(d, math.pi - d), 0.0, places=places)
