"""Hough transform over binary edge images and recovery of line segments.

Lines use the normal form ``x*cos(theta) + y*sin(theta) = rho`` with
``theta`` in ``[0, pi)`` and ``rho`` in ``[-D, D]`` where ``D`` is the image
diagonal.
"""
import logging
import math

import numpy as np
from scipy import ndimage

from . import errors
from .config import HoughParams, SegmentParams
from .geometry import LineSegment, PolarLine
from .raster import BinaryImage


__all__ = [
    'hough_accumulator',
    'hough_lines',
    'is_suppressed',
    'extract_lines',
    'refine_line',
    'extract_segments',
    'split_by_orientation',
]


logger = logging.getLogger(__name__)


# Pixels voted per chunk; bounds the temporary (pixels x thetas) array.
_CHUNK = 4096


def _diagonal(img):
    return math.hypot(img.width, img.height)


def hough_accumulator(img, p=None):
    """Vote every on-pixel into the ``(rho, theta)`` accumulator.

    :type img: palletscope.raster.BinaryImage
    :type p: HoughParams
    :returns: ``(votes, rhos, thetas)`` where ``votes[i, j]`` counts the
        pixels on the line ``(rhos[i], thetas[j])``.
    """
    p = p or HoughParams()
    rows, cols = np.nonzero(img.bits)
    xs = cols.astype(float)
    ys = rows.astype(float)

    n_theta = int(math.ceil(math.pi / p.theta_res - 1e-9))
    thetas = np.arange(n_theta) * p.theta_res
    offset = int(math.ceil(_diagonal(img) / p.rho_res))
    n_rho = 2 * offset + 1
    rhos = (np.arange(n_rho) - offset) * p.rho_res

    votes = _votes(xs, ys, thetas, offset, n_rho, p.rho_res)
    return votes.reshape(n_rho, n_theta), rhos, thetas


def _votes(xs, ys, thetas, offset, n_rho, rho_res):
    cos_t = np.cos(thetas)
    sin_t = np.sin(thetas)
    n_theta = len(thetas)
    columns = np.arange(n_theta)
    votes = np.zeros(n_rho * n_theta, dtype=np.int64)
    for start in range(0, len(xs), _CHUNK):
        x = xs[start:start + _CHUNK, None]
        y = ys[start:start + _CHUNK, None]
        idx = np.rint((x * cos_t + y * sin_t) / rho_res).astype(np.int64) + offset
        flat = (idx * n_theta + columns).ravel()
        votes += np.bincount(flat, minlength=n_rho * n_theta)
    return votes


def is_suppressed(rho, theta, kept, p):
    """Whether ``(rho, theta)`` falls in the ``(nms_rho, nms_theta)`` window
    of any of the ``kept`` pairs.

    :type p: HoughParams
    :rtype: bool
    """
    for k_rho, k_theta in kept:
        d_theta = abs(theta - k_theta)
        if d_theta <= p.nms_theta and abs(rho - k_rho) <= p.nms_rho:
            return True
        # theta wraps at pi with rho changing sign
        if math.pi - d_theta <= p.nms_theta and abs(rho + k_rho) <= p.nms_rho:
            return True
    return False


def hough_lines(img, p=None):
    """Detect lines as accumulator peaks.

    Peaks are local maxima with at least ``peak_threshold_frac`` of the top
    score, thinned by greedy non-maximum suppression in
    ``(nms_rho, nms_theta)`` windows. Ties are broken by ``theta`` then
    ``rho``.

    :type img: palletscope.raster.BinaryImage
    :type p: HoughParams
    :returns: lines in descending score order.
    :rtype: list of PolarLine
    """
    p = p or HoughParams()
    if img.count < 2:
        raise errors.NotEnoughEvidenceError(
            'edge image has %d on-pixels' % img.count)
    votes, rhos, thetas = hough_accumulator(img, p)
    top = votes.max()
    threshold = p.peak_threshold_frac * top
    local_max = votes == ndimage.maximum_filter(votes, size=3, mode='constant')
    ri, ti = np.nonzero(local_max & (votes >= threshold) & (votes > 0))
    scores = votes[ri, ti]
    order = np.lexsort((ri, ti, -scores))

    kept = []
    lines = []
    for k in order:
        rho, theta = rhos[ri[k]], thetas[ti[k]]
        if is_suppressed(rho, theta, kept, p):
            continue
        kept.append((rho, theta))
        lines.append(PolarLine(rho, theta))
        if len(lines) >= p.max_lines:
            break
    logger.debug('hough: %d candidates, %d lines (top score %d)',
                 len(order), len(lines), top)
    return lines


def _band_pixels(line, img, band_px):
    rows, cols = np.nonzero(img.bits)
    xs = cols.astype(float)
    ys = rows.astype(float)
    near = np.abs(line.signed_distance(xs, ys)) <= band_px
    return xs[near], ys[near]


def refine_line(line, img, band_px):
    """Total-least-squares refit of ``line`` to the on-pixels near it.

    Two passes; the second uses half the band around the first fit. A line
    with fewer than two supporting pixels is returned unchanged.

    :type line: PolarLine
    :type img: palletscope.raster.BinaryImage
    :rtype: PolarLine
    """
    for band in (band_px, 0.5 * band_px):
        xs, ys = _band_pixels(line, img, band)
        if len(xs) < 2:
            return line
        cx, cy = xs.mean(), ys.mean()
        scatter = np.cov(np.vstack([xs - cx, ys - cy]), bias=True)
        _, vectors = np.linalg.eigh(scatter)
        nx, ny = vectors[:, 0]
        line = PolarLine(nx * cx + ny * cy, math.atan2(ny, nx))
    return line


def extract_segments(line, img, p=None):
    """Recover the segments of ``line`` that are backed by on-pixels.

    On-pixels within ``on_band_px`` of the line are ordered along it; a
    run breaks where more than ``max_gap_px`` pixels are missing. Runs
    shorter than ``min_length_frac`` of the image diagonal are dropped.
    Endpoints are the extreme pixel centers of each run.

    :type line: PolarLine
    :type img: palletscope.raster.BinaryImage
    :type p: SegmentParams
    :rtype: list of LineSegment
    """
    p = p or SegmentParams()
    xs, ys = _band_pixels(line, img, p.on_band_px)
    if len(xs) < 2:
        return []
    t = -xs * math.sin(line.theta) + ys * math.cos(line.theta)
    order = np.argsort(t, kind='stable')
    xs, ys, t = xs[order], ys[order], t[order]
    breaks = np.flatnonzero(np.diff(t) > p.max_gap_px + 1.0) + 1
    min_length = p.min_length_frac * _diagonal(img)

    segments = []
    for run in np.split(np.arange(len(t)), breaks):
        first, last = run[0], run[-1]
        if t[last] - t[first] < min_length or t[last] == t[first]:
            continue
        p0 = (xs[first], ys[first])
        p1 = (xs[last], ys[last])
        if p0 == p1:
            continue
        segments.append(LineSegment(p0, p1))
    return segments


def _theta_window(thetas, center, half_width):
    offset = np.mod(thetas - center + 0.5 * math.pi, math.pi) - 0.5 * math.pi
    return np.abs(offset) <= half_width


def extract_lines(img, p=None, sp=None, window=None):
    """Detect lines one at a time, each from the evidence its predecessors
    left over.

    The strongest accumulator cell gives a line (ties go to the smaller
    ``rho``, then the smaller ``theta``), refined against the remaining
    on-pixels when ``p.refine`` is set. The pixels within
    ``refine_band_px`` of the line then leave the image and their votes
    leave the accumulator, so both flanks of a drawn line end up in one
    line and faint lines need not compete with the strongest one.
    Extraction stops after ``max_lines`` lines or once the best cell holds
    fewer votes than half of ``min_length_frac`` of the image diagonal.

    :type img: palletscope.raster.BinaryImage
    :type p: HoughParams
    :type sp: SegmentParams
    :param window: optional ``(theta, half_width)``; only normal angles
        within ``half_width`` of ``theta`` (modulo pi) are searched.
    :returns: ``(line, segments)`` pairs in extraction order; lines without
        segments are skipped.
    :rtype: list of tuple
    """
    p = p or HoughParams()
    sp = sp or SegmentParams()
    if img.count < 2:
        raise errors.NotEnoughEvidenceError(
            'edge image has %d on-pixels' % img.count)
    votes, rhos, thetas = hough_accumulator(img, p)
    if window is not None:
        votes[:, ~_theta_window(thetas, window[0], window[1])] = 0
    offset = (len(rhos) - 1) // 2
    min_votes = max(2.0, 0.5 * sp.min_length_frac * _diagonal(img))
    remaining = img.bits.copy()
    release = max(p.refine_band_px, 0.5 * p.rho_res)

    kept = []
    found = []
    while len(found) < p.max_lines:
        ri, ti = np.unravel_index(int(np.argmax(votes)), votes.shape)
        if votes[ri, ti] < min_votes:
            break
        raw = PolarLine(rhos[ri], thetas[ti])
        line = raw
        if p.refine:
            line = refine_line(raw, BinaryImage(remaining), p.refine_band_px)

        rows, cols = np.nonzero(remaining)
        xs = cols.astype(float)
        ys = rows.astype(float)
        # the raw line's own voters always go, so the peak cannot return
        taken = ((np.abs(line.signed_distance(xs, ys)) <= p.refine_band_px) |
                 (np.abs(raw.signed_distance(xs, ys)) <= release))
        remaining[rows[taken], cols[taken]] = False
        votes -= _votes(xs[taken], ys[taken], thetas, offset, len(rhos),
                        p.rho_res).reshape(votes.shape)

        if is_suppressed(line.rho, line.theta, kept, p):
            continue
        segments = extract_segments(line, img, sp)
        if segments:
            kept.append((line.rho, line.theta))
            found.append((line, segments))
    logger.debug('extracted %d lines, %d on-pixels left', len(found),
                 int(np.count_nonzero(remaining)))
    return found


def split_by_orientation(segments, vertical_tol=math.pi / 9, horizontal_tol=None):
    """Partition segments into near-vertical and near-horizontal ones.

    A segment is vertical when its direction lies within ``vertical_tol`` of
    the image y axis, otherwise horizontal when within ``horizontal_tol`` of
    the x axis (``vertical_tol`` when not given); anything else is
    discarded.

    :type segments: list of LineSegment
    :rtype: tuple of (list, list)
    """
    if horizontal_tol is None:
        horizontal_tol = vertical_tol
    vertical = []
    horizontal = []
    for segment in segments:
        phi = math.atan2(segment.p1.y - segment.p0.y, segment.p1.x - segment.p0.x)
        phi %= math.pi
        if abs(phi - 0.5 * math.pi) <= vertical_tol:
            vertical.append(segment)
        elif min(phi, math.pi - phi) <= horizontal_tol:
            horizontal.append(segment)
    return vertical, horizontal
