"""Detection and end-to-end evaluation metrics.

Side-face detections are scored with the average IoU over all ground
truths, accuracy at IoU 0.8 and a COCO-style mAP over the IoU thresholds
0.50 to 0.95. The end-to-end ratio averages, per image, the fraction of
transport units whose faces and packaging structure are both right.
"""
import collections
import logging

import numpy as np

from . import errors
from .geometry import quad_iou


__all__ = [
    'COCO_THRESHOLDS',
    'STRUCTURE_KEYS',
    'MatchResult',
    'iou_matrix',
    'match_greedy',
    'avg_iou_and_accuracy',
    'map_coco',
    'end_to_end_ratio',
    'unit_is_correct',
    'format_table_row',
]


logger = logging.getLogger(__name__)


COCO_THRESHOLDS = tuple(round(0.5 + 0.05 * k, 2) for k in range(10))

STRUCTURE_KEYS = ('rows_l', 'cols_l', 'rows_r', 'cols_r', 'total')

# IoUs are floating point; a threshold counts as met within this slack.
_EPS = 1e-9

_RECALL_POINTS = np.arange(101) / 100.0


class MatchResult(collections.namedtuple(
        'MatchResult', ('pairs', 'unmatched_gts', 'unmatched_dets'))):
    """``pairs`` holds ``(gt_index, det_index, iou)`` in matching order."""

    __slots__ = ()

    def iou_for(self, gt_index):
        for gt, _, iou in self.pairs:
            if gt == gt_index:
                return iou
        return 0.0


def iou_matrix(gts, dets, resolution=None):
    """``(len(gts), len(dets))`` array of quad IoUs.

    :type gts: list of Quad
    :param dets: list of ``(Quad, score)``.
    """
    matrix = np.zeros((len(gts), len(dets)))
    for i, gt in enumerate(gts):
        for j, (quad, _) in enumerate(dets):
            matrix[i, j] = quad_iou(gt, quad, resolution)
    return matrix


def _score_order(dets):
    return sorted(range(len(dets)), key=lambda j: -dets[j][1])


def match_greedy(gts, dets, min_iou=None, resolution=None, ious=None):
    """Match detections to ground truths in descending score order.

    Each detection claims the still unmatched ground truth it overlaps
    most; ties go to the lower ground-truth index. Only IoUs above 0, and
    at least ``min_iou`` when given, qualify.

    :type gts: list of Quad
    :param dets: list of ``(Quad, score)``.
    :param ious: precomputed :func:`iou_matrix`, reused across thresholds.
    :rtype: MatchResult
    """
    if ious is None:
        ious = iou_matrix(gts, dets, resolution)
    matched = set()
    pairs = []
    unmatched_dets = []
    for j in _score_order(dets):
        best = None
        for i in range(len(gts)):
            if i in matched:
                continue
            iou = ious[i, j]
            if iou <= 0.0 or (min_iou is not None and iou < min_iou - _EPS):
                continue
            if best is None or iou > ious[best, j]:
                best = i
        if best is None:
            unmatched_dets.append(j)
        else:
            matched.add(best)
            pairs.append((best, j, float(ious[best, j])))
    unmatched_gts = [i for i in range(len(gts)) if i not in matched]
    return MatchResult(tuple(pairs), tuple(unmatched_gts), tuple(unmatched_dets))


def avg_iou_and_accuracy(matches, gt_count, iou_thresh=0.8):
    """Average IoU over all ground truths, unmatched ones counting 0, and
    the fraction of ground truths matched with IoU of at least
    ``iou_thresh``.

    :type matches: MatchResult
    :rtype: tuple of (float, float)
    """
    if gt_count < 1:
        raise errors.EmptyGroundTruthError('no ground truth to evaluate against')
    ious = [iou for _, _, iou in matches.pairs]
    avg_iou = sum(ious) / float(gt_count)
    accuracy = sum(1 for iou in ious if iou >= iou_thresh - _EPS) / float(gt_count)
    return avg_iou, accuracy


def _average_precision(hits, total_gts):
    if not hits:
        return 0.0
    hits = np.array(hits, dtype=float)
    tp = np.cumsum(hits)
    fp = np.cumsum(1.0 - hits)
    recall = tp / total_gts
    precision = tp / (tp + fp)
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, _RECALL_POINTS, side='left')
    sampled = np.where(idx < len(envelope),
                       envelope[np.minimum(idx, len(envelope) - 1)], 0.0)
    return float(sampled.mean())


def map_coco(gts_per_image, dets_per_image, resolution=None):
    """COCO-style mean average precision over IoU thresholds 0.50:0.95.

    Per threshold, detections are matched greedily within each image, then
    ranked by score across all images; AP is the 101-point interpolated
    area under the precision-recall curve.

    :param gts_per_image: list (per image) of lists of Quad.
    :param dets_per_image: list (per image) of lists of ``(Quad, score)``.
    :rtype: float
    """
    if len(gts_per_image) != len(dets_per_image):
        raise errors.DatasetMismatchError(
            '%d ground-truth images but %d detection images' % (
                len(gts_per_image), len(dets_per_image)))
    total_gts = sum(len(gts) for gts in gts_per_image)
    if total_gts == 0:
        raise errors.EmptyGroundTruthError('no ground truth to evaluate against')

    matrices = [iou_matrix(gts, dets, resolution)
                for gts, dets in zip(gts_per_image, dets_per_image)]
    ranked = sorted(
        ((image, j) for image, dets in enumerate(dets_per_image)
         for j in range(len(dets))),
        key=lambda key: -dets_per_image[key[0]][key[1]][1])

    aps = []
    for threshold in COCO_THRESHOLDS:
        true_positive = set()
        for image, (gts, dets) in enumerate(zip(gts_per_image, dets_per_image)):
            result = match_greedy(gts, dets, threshold, ious=matrices[image])
            true_positive.update((image, j) for _, j, _ in result.pairs)
        hits = [key in true_positive for key in ranked]
        aps.append(_average_precision(hits, total_gts))
    logger.debug('AP per threshold: %s', ', '.join('%.4f' % ap for ap in aps))
    return float(np.mean(aps))


def end_to_end_ratio(per_image):
    """Mean over images of the fraction of correctly analyzed units.

    :param per_image: list of ``(units_total, units_correct)``.
    :rtype: float
    """
    if not per_image:
        raise errors.EmptyGroundTruthError('no images to evaluate')
    ratios = []
    for total, correct in per_image:
        if total <= 0:
            raise errors.EmptyGroundTruthError('an image has no transport units')
        ratios.append(correct / float(total))
    return sum(ratios) / len(ratios)


def unit_is_correct(pred_unit, gt_unit, iou_thresh=0.8, resolution=None):
    """Whether a transport unit was recognized and analyzed correctly.

    Both side faces must reach ``iou_thresh`` against their ground truth
    and every structure count must match exactly.

    :param pred_unit: dict with ``faces`` (left and right Quad, or None)
        and ``structure`` (dict of counts, or None).
    :param gt_unit: same layout as ``pred_unit``.
    :rtype: bool
    """
    pred_faces = pred_unit.get('faces')
    gt_faces = gt_unit.get('faces')
    if not pred_faces or not gt_faces:
        return False
    for pred, gt in zip(pred_faces, gt_faces):
        if quad_iou(pred, gt, resolution) < iou_thresh - _EPS:
            return False
    pred_structure = pred_unit.get('structure') or {}
    gt_structure = gt_unit.get('structure') or {}
    return all(key in gt_structure and pred_structure.get(key) == gt_structure[key]
               for key in STRUCTURE_KEYS)


def format_table_row(name, avg_iou, accuracy):
    """A report row such as ``"CNN 0.8962 0.9029"``."""
    return '%s %.4f %.4f' % (name, avg_iou, accuracy)
