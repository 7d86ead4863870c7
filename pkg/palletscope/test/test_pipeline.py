import os
import unittest

from .helper import _TempDirMixin, mock, rectangle


STRUCTURE = {'rows_l': 5, 'cols_l': 2, 'rows_r': 5, 'cols_r': 2, 'total': 20,
             'pallet': 'EPAL'}


class _SceneMixin(_TempDirMixin):
    """Renders the default synthetic scene next to its annotation."""

    def setUp(self):
        super(_SceneMixin, self).setUp()
        from ..synth import SceneSpec, project_scene
        image, truth = project_scene(SceneSpec())
        image.save_png(self.path('scene.png'))
        self.annotation = truth.to_annotation('scene.png')

    def writeAnnotations(self, *annotations, **kwargs):
        name = kwargs.get('name', 'truth.json')
        return self.writeDocument(name, {
            'object': 'list',
            'data': list(annotations) or [self.annotation],
            'schema_version': 1,
        })

    def loadAnnotations(self, *annotations):
        from ..records import load_annotations
        return load_annotations(self.writeAnnotations(*annotations))


class LoadPackagesTest(_TempDirMixin, unittest.TestCase):

    def _callFUT(self, data):
        from ..pipeline import load_packages
        return load_packages(self.writeDocument('packages.json', data))

    def test_load(self):
        packages = self._callFUT({'object': 'list', 'schema_version': 1, 'data': [
            {'image_path': 'a.png', 'packages': [
                {'quad': rectangle(0, 0, 10, 10), 'class': 'Tray', 'score': 0.7}]},
            {'image_path': 'b.png', 'packages': []},
        ]})
        self.assertEqual(sorted(packages), ['a.png', 'b.png'])
        self.assertEqual(packages['a.png'][0].package_class, 'Tray')
        self.assertEqual(packages['a.png'][0].score, 0.7)

    def test_bad_package(self):
        from ..errors import SchemaError
        with self.assertRaises(SchemaError) as ctx:
            self._callFUT({'object': 'list', 'schema_version': 1, 'data': [
                {'image_path': 'a.png', 'packages': [{'class': 'KLT'}]}]})
        self.assertEqual(ctx.exception.path, 'data[0].packages[0]')


class AnalyzeImageTest(_SceneMixin, unittest.TestCase):

    def _callFUT(self, annotation, **kwargs):
        from ..pipeline import analyze_image
        return analyze_image(annotation, **kwargs)

    def test_annotated_faces(self):
        annotation = self.loadAnnotations()[0]
        result = self._callFUT(annotation, faces='annotations')
        self.assertEqual(result.image_path, 'scene.png')
        unit = result.units[0]
        self.assertTrue(unit.ok)
        self.assertEqual(unit.structure, STRUCTURE)
        self.assertEqual(unit.faces, self.annotation['units'][0]['faces'])
        self.assertEqual([f['rows'] for f in unit.face_structures], [5, 5])
        self.assertIsNone(unit.scene)

    def test_line_pipeline(self):
        annotation = self.loadAnnotations()[0]
        unit = self._callFUT(annotation).units[0]
        self.assertTrue(unit.ok, unit.get('reason'))
        self.assertEqual(unit.structure, STRUCTURE)
        self.assertEqual(unit.scene['status'], 'ok')

    def test_frequency_mode(self):
        from ..structure import FaceStructure
        annotation = self.loadAnnotations()[0]
        with mock.patch('palletscope.pipeline.count_face_by_frequency',
                        return_value=FaceStructure(5, 2)) as count:
            unit = self._callFUT(annotation, faces='annotations',
                                 count_mode='frequency').units[0]
        self.assertEqual(count.call_count, 2)
        self.assertEqual(unit.structure['total'], 20)

    def test_failing_unit_keeps_siblings(self):
        broken = dict(self.annotation['units'][0], packages=[])
        annotation = self.loadAnnotations(
            dict(self.annotation, units=[self.annotation['units'][0], broken]))[0]
        first, second = self._callFUT(annotation, faces='annotations').units
        self.assertTrue(first.ok)
        self.assertEqual(second.status, 'no_packages_on_face')
        self.assertEqual(second.index, 1)
        self.assertEqual(len(second.faces), 2)
        self.assertIsNone(second.structure)

    def test_unit_without_faces(self):
        unit = dict(self.annotation['units'][0])
        del unit['faces']
        annotation = self.loadAnnotations(dict(self.annotation, units=[unit]))[0]
        result = self._callFUT(annotation, faces='annotations').units[0]
        self.assertEqual(result.status, 'schema_error')

    def test_external_packages(self):
        annotation = self.loadAnnotations()[0]
        unit = self._callFUT(annotation, faces='annotations', packages=[]).units[0]
        self.assertEqual(unit.status, 'no_packages_on_face')

    def test_decode_failure(self):
        with open(self.path('broken.png'), 'wb') as f:
            f.write(b'not a png')
        annotation = self.loadAnnotations(dict(self.annotation,
                                               image_path='broken.png'))[0]
        result = self._callFUT(annotation, overlay_dir=self.tmpdir)
        self.assertEqual([u.status for u in result.units], ['decode_error'])
        self.assertFalse(os.path.exists(self.path('broken_overlay.png')))

    def test_overlay(self):
        from PIL import Image
        annotation = self.loadAnnotations()[0]
        self._callFUT(annotation, faces='annotations', overlay_dir=self.tmpdir)
        overlay = Image.open(self.path('scene_overlay.png'))
        self.assertEqual(overlay.mode, 'RGB')
        self.assertEqual(overlay.size, (640, 480))

    def test_unknown_options(self):
        from ..errors import ConfigError
        annotation = self.loadAnnotations()[0]
        self.assertRaises(ConfigError, self._callFUT, annotation, faces='magic')
        self.assertRaises(ConfigError, self._callFUT, annotation, count_mode='guess')


class AnalyzeTest(_SceneMixin, unittest.TestCase):

    def test_keeps_order_across_workers(self):
        from ..pipeline import analyze
        from ..records import Annotation
        second = dict(self.annotation, image_path='missing.png')
        annotations = []
        for data in (self.annotation, second, self.annotation):
            annotation = Annotation.from_data(data)
            annotation._base_dir = self.tmpdir
            annotations.append(annotation)
        results = analyze(annotations, faces='annotations', workers=3)
        self.assertEqual([r.image_path for r in results],
                         ['scene.png', 'missing.png', 'scene.png'])
        self.assertEqual([r.units[0].status for r in results],
                         ['ok', 'decode_error', 'ok'])

    def test_packages_by_image(self):
        from ..pipeline import analyze
        results = analyze(self.loadAnnotations(), faces='annotations',
                          packages={'other.png': []})
        self.assertEqual(results[0].units[0].status, 'no_packages_on_face')

    def test_workers(self):
        from ..errors import ConfigError
        from ..pipeline import analyze
        self.assertRaises(ConfigError, analyze, [], workers=0)


class EvaluateTest(_SceneMixin, unittest.TestCase):

    def _callFUT(self, results):
        from ..pipeline import evaluate
        from ..records import save_results
        save_results(self.path('results.json'), results)
        return evaluate(self.path('results.json'), self.writeAnnotations())

    def _analyzed(self):
        from ..pipeline import analyze
        return analyze(self.loadAnnotations(), faces='annotations')

    def test_perfect(self):
        report = self._callFUT(self._analyzed())
        self.assertEqual(report['object'], 'report')
        self.assertAlmostEqual(report['avg_iou'], 1.0)
        self.assertAlmostEqual(report['accuracy_at_0_8'], 1.0)
        self.assertAlmostEqual(report['map_coco_50_95'], 1.0)
        self.assertAlmostEqual(report['end_to_end_ratio'], 1.0)
        self.assertEqual(report['per_image'], [{
            'image_path': 'scene.png',
            'faces_total': 2,
            'faces_matched': 2,
            'units_total': 1,
            'units_correct': 1,
        }])

    def test_wrong_count(self):
        results = [r.to_data() for r in self._analyzed()]
        results[0]['units'][0]['structure']['cols_r'] = 3
        report = self._callFUT(results)
        self.assertAlmostEqual(report['avg_iou'], 1.0)
        self.assertEqual(report['end_to_end_ratio'], 0.0)

    def test_missing_results_are_misses(self):
        report = self._callFUT([])
        self.assertEqual(report['avg_iou'], 0.0)
        self.assertEqual(report['accuracy_at_0_8'], 0.0)
        self.assertEqual(report['map_coco_50_95'], 0.0)
        self.assertEqual(report['end_to_end_ratio'], 0.0)

    def test_unknown_image(self):
        from ..errors import DatasetMismatchError
        results = [{'object': 'result', 'image_path': 'other.png', 'units': []}]
        self.assertRaises(DatasetMismatchError, self._callFUT, results)

    def test_no_annotated_faces(self):
        from ..errors import EmptyGroundTruthError
        from ..pipeline import evaluate
        from ..records import save_results
        unit = dict(self.annotation['units'][0])
        del unit['faces']
        truth = self.writeAnnotations(dict(self.annotation, units=[unit]))
        save_results(self.path('results.json'), [])
        self.assertRaises(EmptyGroundTruthError, evaluate,
                          self.path('results.json'), truth)


class NoisySuiteTest(_TempDirMixin, unittest.TestCase):
    """Line pipeline over rendered scenes with edge dropout and jitter."""

    def test_generate_analyze_evaluate(self):
        from ..pipeline import analyze, evaluate
        from ..records import load_annotations, save_results
        from ..store import read_document
        from ..synth import generate_suite
        pairs = generate_suite(20, 5, {'dropout': (0.1, 0.1), 'jitter_px': (1.0, 1.0)},
                               self.tmpdir)
        data = [record for _, path in pairs for record in read_document(path)['data']]
        truth = self.writeDocument('truth.json', {'object': 'list', 'data': data,
                                                  'schema_version': 1})
        save_results(self.path('results.json'),
                     analyze(load_annotations(truth), workers=4))
        report = evaluate(self.path('results.json'), truth)
        self.assertGreaterEqual(report['accuracy_at_0_8'], 0.9)
        self.assertGreaterEqual(report['end_to_end_ratio'], 0.85)
