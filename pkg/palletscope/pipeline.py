"""The analysis pipeline and its evaluation.

For every transport unit of an annotated image the side faces are located
(from the line pipeline or taken from the annotation), rows and columns
are counted per face and the two faces are consolidated. A failing unit
records its error code and message; it never stops its siblings.
"""
import collections
import concurrent.futures
import logging
import os

from . import errors
from . import metrics
from . import raster
from . import records
from . import store
from .config import PipelineConfig
from .overlay import save_overlay
from .sideface import segment_side_faces, validate_scene
from .structure import (
    PackageDetection,
    assign_packages_to_face,
    consolidate,
    count_face_by_frequency,
    count_grid,
)


__all__ = [
    'FACES_HOUGH',
    'FACES_ANNOTATIONS',
    'PACKAGES_ANNOTATIONS',
    'COUNT_GRID',
    'COUNT_FREQUENCY',
    'load_packages',
    'analyze_unit',
    'analyze_image',
    'analyze',
    'evaluate',
]


logger = logging.getLogger(__name__)


FACES_HOUGH = 'hough'
FACES_ANNOTATIONS = 'annotations'
FACE_SOURCES = (FACES_HOUGH, FACES_ANNOTATIONS)

PACKAGES_ANNOTATIONS = 'annotations'

COUNT_GRID = 'grid'
COUNT_FREQUENCY = 'frequency'
COUNT_MODES = (COUNT_GRID, COUNT_FREQUENCY)

STATUS_OK = 'ok'


def load_packages(path):
    """Read external package detections.

    The document lists ``{"image_path": ..., "packages": [...]}`` items;
    the packages use the annotation package layout.

    :rtype: dict of image path to list of PackageDetection
    """
    data = store.read_document(path)
    if data.get('object') != 'list' or not isinstance(data.get('data'), list):
        raise errors.SchemaError('expected a list document', 'object')
    packages = {}
    for k, item in enumerate(data['data']):
        where = 'data[%d]' % k
        if not isinstance(item, dict) or not isinstance(item.get('image_path'), str):
            raise errors.SchemaError('expected an item with image_path', where)
        detections = []
        for j, package in enumerate(item.get('packages') or []):
            try:
                detections.append(PackageDetection.from_data(package))
            except (KeyError, TypeError, errors.BaseError) as e:
                raise errors.SchemaError(
                    'invalid package: %s' % e, '%s.packages[%d]' % (where, j))
        packages[item['image_path']] = detections
    logger.info('loaded packages for %d image(s) from %s', len(packages), path)
    return packages


def _face_data(face):
    return {
        'rows': face.rows,
        'cols': face.cols,
        'class': face.package_class,
        'mean_w': face.mean_w,
        'mean_h': face.mean_h,
        'low_confidence': face.low_confidence,
    }


def analyze_unit(gray, unit, config=None, faces=FACES_HOUGH, packages=None,
                 count_mode=COUNT_GRID, index=0):
    """Analyze one transport unit.

    Returns the unit result record together with the face quads and face
    structures found before any failure, for overlays.

    :type gray: palletscope.raster.GrayImage
    :type unit: palletscope.records.Unit
    :param packages: candidate detections; the unit's own annotated
        packages when ``None``.
    :rtype: tuple of (dict, tuple, tuple)
    """
    config = config or PipelineConfig()
    s = config.structure
    result = {
        'object': 'unit_result',
        'index': index,
        'status': STATUS_OK,
        'reason': '',
        'faces': None,
        'face_structures': None,
        'structure': None,
        'scene': None,
    }
    quads = None
    structures = None
    try:
        if faces == FACES_ANNOTATIONS:
            quads = unit.face_quads()
            if quads is None:
                raise errors.SchemaError('unit has no annotated faces', 'faces')
        else:
            mask = unit.instance_mask(gray.width, gray.height)
            pair = segment_side_faces(gray, mask, config)
            quads = (pair.left, pair.right)
            check = validate_scene(pair.vertical_vp, gray.height, gray.width,
                                   config.sideface.scene_vp_factor)
            result['scene'] = {'status': check.status, 'reason': check.reason}
            if not check.ok:
                logger.warning('unit %d: %s', index, check.reason)
        result['faces'] = [q.to_data() for q in quads]

        if count_mode == COUNT_FREQUENCY:
            structures = tuple(count_face_by_frequency(gray, q, config) for q in quads)
        else:
            if packages is None:
                packages = unit.package_detections()
            structures = tuple(
                count_grid(q, assign_packages_to_face(packages, q), s.target_h,
                           s.low_confidence_residual)
                for q in quads)
        result['face_structures'] = [_face_data(f) for f in structures]
        result['structure'] = consolidate(
            structures[0], structures[1], unit.get('pallet')).to_data()
    except errors.BaseError as e:
        result['status'] = e.code
        result['reason'] = str(e)
        logger.info('unit %d failed: %s: %s', index, e.code, e)
    else:
        logger.info('unit %d: %s', index, result['structure'])
    return result, quads, structures


def analyze_image(annotation, config=None, faces=FACES_HOUGH, packages=None,
                  count_mode=COUNT_GRID, overlay_dir=None):
    """Analyze every transport unit of one annotated image.

    :type annotation: palletscope.records.Annotation
    :param packages: external detections for this image, or ``None`` to
        use the annotated packages.
    :rtype: palletscope.records.Result
    """
    config = config or PipelineConfig()
    if faces not in FACE_SOURCES:
        raise errors.ConfigError('unknown face source %r' % (faces,))
    if count_mode not in COUNT_MODES:
        raise errors.ConfigError('unknown count mode %r' % (count_mode,))
    units = annotation.units
    logger.info('analyzing %s (%d unit(s))', annotation.image_path, len(units))

    results = []
    drawn = []
    try:
        gray = raster.load_gray(annotation.image)
    except errors.BaseError as e:
        for i in range(len(units)):
            results.append({'object': 'unit_result', 'index': i, 'status': e.code,
                            'reason': str(e), 'faces': None,
                            'face_structures': None, 'structure': None,
                            'scene': None})
        gray = None
    else:
        for i, unit in enumerate(units):
            result, quads, structures = analyze_unit(
                gray, unit, config, faces, packages, count_mode, i)
            results.append(result)
            drawn.append((quads, structures))

    if overlay_dir is not None and gray is not None:
        name = os.path.splitext(os.path.basename(annotation.image_path))[0]
        save_overlay(os.path.join(overlay_dir, name + '_overlay.png'), gray,
                     drawn, config.structure.target_h)
    return records.Result.from_data({
        'object': 'result',
        'image_path': annotation.image_path,
        'units': results,
    })


def analyze(annotations, config=None, faces=FACES_HOUGH, packages=None,
            count_mode=COUNT_GRID, overlay_dir=None, workers=1):
    """Analyze a collection of annotated images.

    Images are processed by up to ``workers`` threads; results keep the
    input order.

    :param packages: dict of image path to detections from
        :func:`load_packages`, or ``None`` for annotated packages.
    :rtype: list of palletscope.records.Result
    """
    config = config or PipelineConfig()
    if workers < 1:
        raise errors.ConfigError('workers must be >= 1')
    annotations = list(annotations)

    def run(annotation):
        image_packages = None
        if packages is not None:
            image_packages = packages.get(annotation.image_path, [])
        return analyze_image(annotation, config, faces, image_packages,
                             count_mode, overlay_dir)

    if workers == 1:
        return [run(a) for a in annotations]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(run, annotations))


def _unit_view(faces, structure):
    return {'faces': faces, 'structure': structure}


def evaluate(results_path, truth_path, resolution=None):
    """Score a result document against annotated ground truth.

    Images missing from the results count as complete misses; result
    images absent from the ground truth are an error. Units are paired by
    their index within the image.

    :rtype: dict
    """
    results = records.load_results(results_path)
    truth = records.load_annotations(truth_path, check_files=False)
    truth_by_image = collections.OrderedDict((a.image_path, a) for a in truth)
    result_by_image = dict((r.image_path, r) for r in results)
    extra = sorted(set(result_by_image) - set(truth_by_image))
    if extra:
        raise errors.DatasetMismatchError(
            'results for images missing from the ground truth: %s' % ', '.join(extra))

    gts_per_image = []
    dets_per_image = []
    per_image = []
    iou_sum = 0.0
    hits = 0
    for image_path, annotation in truth_by_image.items():
        gt_units = annotation.units
        result = result_by_image.get(image_path)
        pred_units = dict((u.get('index', k), u)
                          for k, u in enumerate(result.units if result else []))

        gts = [q for u in gt_units for q in (u.face_quads() or ())]
        dets = [(q, u.get('score', 1.0)) for _, u in sorted(pred_units.items())
                for q in (u.face_quads() or ())]
        matches = metrics.match_greedy(gts, dets, resolution=resolution)
        if gts:
            avg_iou, accuracy = metrics.avg_iou_and_accuracy(matches, len(gts))
            iou_sum += avg_iou * len(gts)
            hits += int(round(accuracy * len(gts)))

        correct = 0
        for k, gt_unit in enumerate(gt_units):
            pred = pred_units.get(k)
            if pred is None:
                continue
            if metrics.unit_is_correct(
                    _unit_view(pred.face_quads(), pred.structure),
                    _unit_view(gt_unit.face_quads(), gt_unit.structure),
                    resolution=resolution):
                correct += 1

        gts_per_image.append(gts)
        dets_per_image.append(dets)
        per_image.append({
            'image_path': image_path,
            'faces_total': len(gts),
            'faces_matched': len(matches.pairs),
            'units_total': len(gt_units),
            'units_correct': correct,
        })

    total_gts = sum(len(gts) for gts in gts_per_image)
    if total_gts == 0:
        raise errors.EmptyGroundTruthError('ground truth has no annotated faces')
    report = {
        'object': 'report',
        'avg_iou': iou_sum / total_gts,
        'accuracy_at_0_8': hits / float(total_gts),
        'map_coco_50_95': metrics.map_coco(gts_per_image, dets_per_image, resolution),
        'end_to_end_ratio': metrics.end_to_end_ratio(
            [(p['units_total'], p['units_correct'])
             for p in per_image if p['units_total'] > 0]),
        'per_image': per_image,
    }
    logger.info('evaluated %d image(s): %s', len(per_image),
                metrics.format_table_row('result', report['avg_iou'],
                                         report['accuracy_at_0_8']))
    return report
