import math
import os
import unittest

import numpy as np

from .helper import _TempDirMixin


class SceneSpecTest(unittest.TestCase):

    def _getTargetClass(self):
        from ..synth import SceneSpec
        return SceneSpec

    def _makeOne(self, **kwargs):
        return self._getTargetClass()(**kwargs)

    def test_defaults(self):
        spec = self._makeOne()
        self.assertAlmostEqual(spec.unit_height, 0.144 + 5 * 0.28)
        self.assertEqual(spec.footprint, (1.2, 0.8))
        self.assertEqual(spec.principal_point, (320.0, 240.0))
        self.assertAlmostEqual(spec.camera_position[2], 0.5 * spec.unit_height)

    def test_invalid(self):
        from ..errors import ConfigError
        for kwargs in ({'pitch': 0.5}, {'roll': 0.1}, {'dropout': 2.0},
                       {'jitter_px': -1.0}, {'n_a': 0}, {'layers': 2.5},
                       {'package_class': 'Crate'}, {'focal_px': 0.0},
                       {'package_dims': (0.6, 0.4)}):
            self.assertRaises(ConfigError, self._makeOne, **kwargs)

    def test_camera_above_stack(self):
        from ..errors import ConfigError
        self.assertRaises(ConfigError, self._makeOne,
                          camera_position=(-3.0, -3.0, 2.0))

    def test_face_seen_edge_on(self):
        from ..errors import ConfigError
        self.assertRaises(ConfigError, self._makeOne, yaw=0.05)

    def test_data(self):
        class_ = self._getTargetClass()
        spec = self._makeOne(n_a=3, seed=5)
        self.assertEqual(class_.from_data(spec.to_data()), spec)

    def test_from_data_unknown_key(self):
        from ..errors import ConfigError
        self.assertRaises(ConfigError, self._getTargetClass().from_data,
                          {'shelves': 3})


class CameraTest(unittest.TestCase):

    def _makeOne(self, **kwargs):
        from ..synth import Camera, SceneSpec
        return Camera.from_spec(SceneSpec(**kwargs))

    def test_optical_axis_hits_principal_point(self):
        camera = self._makeOne()
        forward = camera.rotation[2]
        point = camera.position + 5.0 * forward
        np.testing.assert_allclose(camera.project(point), [[320.0, 240.0]])

    def test_look_at(self):
        # point 1 m right of the optical axis, 4 m ahead
        camera = self._makeOne()
        yaw = math.pi / 4
        ahead = np.array([math.cos(yaw), math.sin(yaw), 0.0])
        right = np.array([math.sin(yaw), -math.cos(yaw), 0.0])
        point = camera.position + 4.0 * ahead + 1.0 * right
        np.testing.assert_allclose(camera.project(point), [[320.0 + 200.0, 240.0]])

    def test_behind(self):
        from ..errors import SceneOutOfFrameError
        camera = self._makeOne()
        self.assertRaises(SceneOutOfFrameError, camera.project,
                          camera.position - camera.rotation[2])

    def test_vanishing_points(self):
        camera = self._makeOne()
        self.assertTrue(camera.vanishing_point((0.0, 0.0, 1.0)).is_infinite)
        left = camera.vanishing_point((0.0, 1.0, 0.0)).to_point()
        right = camera.vanishing_point((1.0, 0.0, 0.0)).to_point()
        self.assertAlmostEqual(left.x, -480.0)
        self.assertAlmostEqual(left.y, 240.0)
        self.assertAlmostEqual(right.x, 1120.0)
        self.assertAlmostEqual(right.y, 240.0)


class ProjectSceneTest(unittest.TestCase):

    def _callFUT(self, **kwargs):
        from ..synth import SceneSpec, project_scene
        return project_scene(SceneSpec(**kwargs))

    def test_ground_truth(self):
        image, truth = self._callFUT()
        self.assertEqual(image.shape, (480, 640))
        self.assertEqual(len(truth.units), 1)
        unit = truth.units[0]
        self.assertEqual(unit.structure, {
            'rows_l': 5, 'cols_l': 2, 'rows_r': 5, 'cols_r': 2, 'total': 20})
        self.assertEqual(len(unit.left_packages), 10)
        self.assertEqual(len(unit.right_packages), 10)
        # the faces share the near vertical edge
        self.assertEqual(unit.left.corners[1], unit.right.corners[0])
        self.assertEqual(unit.left.corners[2], unit.right.corners[3])

    def test_vanishing_point_of_parallel_edges(self):
        from ..geometry import PolarLine, intersect_lines
        _, truth = self._callFUT()
        camera = truth.camera
        a = camera.project([(0.0, 0.0, 0.5), (0.0, 1.0, 0.5)])
        b = camera.project([(0.0, 0.0, 1.2), (0.0, 1.0, 1.2)])
        vp = intersect_lines(PolarLine.through(*a), PolarLine.through(*b)).to_point()
        expected = truth.left_vp.to_point()
        self.assertAlmostEqual(vp.x, expected.x, places=4)
        self.assertAlmostEqual(vp.y, expected.y, places=4)

    def test_package_edges_are_drawn(self):
        from ..synth import EDGE_SHADE
        image, truth = self._callFUT()
        x, y = truth.units[0].left.corners[1]
        patch = image.pixels[int(y) + 20:int(y) + 40, int(round(x)) - 1:int(round(x)) + 2]
        self.assertTrue((patch == EDGE_SHADE).any(axis=1).all())

    def test_dropout_is_seeded(self):
        first, _ = self._callFUT(dropout=0.5, seed=3)
        second, _ = self._callFUT(dropout=0.5, seed=3)
        other, _ = self._callFUT(dropout=0.5, seed=4)
        self.assertEqual(first, second)
        self.assertNotEqual(first, other)

    def test_jitter_keeps_ground_truth(self):
        _, exact = self._callFUT()
        _, jittered = self._callFUT(jitter_px=1.0, seed=1)
        self.assertEqual(exact.units[0].left, jittered.units[0].left)

    def test_stacked_units(self):
        _, truth = self._callFUT(layers=2, stack_count=2)
        self.assertEqual(len(truth.units), 2)
        lower, upper = truth.units
        self.assertLess(upper.left.centroid.y, lower.left.centroid.y)

    def test_out_of_frame(self):
        from ..errors import SceneOutOfFrameError
        self.assertRaises(SceneOutOfFrameError, self._callFUT, focal_px=3000.0)

    def test_annotation(self):
        from ..synth import SceneSpec
        _, truth = self._callFUT()
        data = truth.to_annotation('scene.png', SceneSpec())
        self.assertEqual(data['object'], 'annotation')
        self.assertEqual(data['image_path'], 'scene.png')
        self.assertEqual(data['scene']['n_a'], 2)
        unit = data['units'][0]
        self.assertEqual(unit['mask'], unit['faces'])
        self.assertEqual(len(unit['packages']), 20)
        self.assertEqual(unit['pallet'], 'EPAL')


class SampleSpecTest(unittest.TestCase):

    def test_reproducible(self):
        from ..synth import sample_spec
        first = sample_spec(np.random.default_rng([1, 2]))
        second = sample_spec(np.random.default_rng([1, 2]))
        self.assertEqual(first, second)

    def test_fixed_counts(self):
        from ..synth import sample_spec
        spec = sample_spec(np.random.default_rng(0),
                           {'n_a': (3, 3), 'n_b': (1, 1), 'layers': (4, 4)})
        self.assertEqual((spec.n_a, spec.n_b, spec.layers), (3, 1, 4))

    def test_bad_ranges(self):
        from ..errors import ConfigError
        from ..synth import sample_spec
        rng = np.random.default_rng(0)
        self.assertRaises(ConfigError, sample_spec, rng, {'floors': (1, 2)})
        self.assertRaises(ConfigError, sample_spec, rng, {'layers': (5, 2)})
        self.assertRaises(ConfigError, sample_spec, rng, {'layers': 5})


class GenerateSuiteTest(_TempDirMixin, unittest.TestCase):

    def _callFUT(self, out_dir, count=2, seed=7):
        from ..synth import generate_suite
        os.makedirs(out_dir)
        return generate_suite(count, seed, None, out_dir)

    def _read(self, path):
        with open(path, 'rb') as f:
            return f.read()

    def test_writes_scenes(self):
        pairs = self._callFUT(self.path('a'))
        self.assertEqual(pairs, [
            (self.path('a', 'scene_0000.png'), self.path('a', 'scene_0000.json')),
            (self.path('a', 'scene_0001.png'), self.path('a', 'scene_0001.json')),
        ])
        manifest = self.readDocument(os.path.join('a', 'manifest.json'))
        self.assertEqual(manifest['seed'], 7)
        self.assertEqual(manifest['data'][1],
                         {'image': 'scene_0001.png', 'annotation': 'scene_0001.json'})
        document = self.readDocument(os.path.join('a', 'scene_0000.json'))
        self.assertEqual(document['schema_version'], 1)
        annotation = document['data'][0]
        self.assertEqual(annotation['image_path'], 'scene_0000.png')
        structure = annotation['units'][0]['structure']
        self.assertEqual(structure['total'],
                         structure['rows_l'] * structure['cols_l'] * structure['cols_r'])

    def test_deterministic(self):
        first = self._callFUT(self.path('a'))
        second = self._callFUT(self.path('b'))
        for (png_a, json_a), (png_b, json_b) in zip(first, second):
            self.assertEqual(self._read(png_a), self._read(png_b))
            self.assertEqual(self._read(json_a), self._read(json_b))

    def test_negative_count(self):
        from ..errors import ConfigError
        from ..synth import generate_suite
        self.assertRaises(ConfigError, generate_suite, -1, 0, None, self.tmpdir)
