import math
import unittest

import numpy as np

from .helper import _AngleAssertable


def _bits(height, width, rows=(), cols=()):
    from ..raster import BinaryImage
    bits = np.zeros((height, width), dtype=bool)
    for row in rows:
        bits[row, :] = True
    for col in cols:
        bits[:, col] = True
    return BinaryImage(bits)


class HoughAccumulatorTest(unittest.TestCase):

    def test_votes(self):
        from ..hough import hough_accumulator
        votes, rhos, thetas = hough_accumulator(_bits(100, 100, rows=[30]))
        self.assertEqual(len(thetas), 360)
        self.assertEqual(len(rhos), 2 * 142 + 1)
        self.assertEqual(votes.max(), 100)
        i, j = np.unravel_index(np.argmax(votes), votes.shape)
        self.assertEqual(rhos[i], 30.0)
        self.assertAlmostEqual(thetas[j], 0.5 * math.pi)
        self.assertEqual(votes[:, 0].sum(), 100)


class HoughLinesTest(_AngleAssertable, unittest.TestCase):

    def _callFUT(self, img, p=None):
        from ..hough import hough_lines
        return hough_lines(img, p)

    def test_single_line(self):
        lines = self._callFUT(_bits(100, 100, rows=[30]))
        self.assertEqual(len(lines), 1)
        self.assertAlmostEqual(lines[0].rho, 30.0)
        self.assertAngleAlmostEqual(lines[0].theta, 0.5 * math.pi)

    def test_two_lines_in_theta_order(self):
        lines = self._callFUT(_bits(100, 100, rows=[30], cols=[70]))
        self.assertEqual(len(lines), 2)
        self.assertEqual((lines[0].rho, lines[0].theta), (70.0, 0.0))
        self.assertAlmostEqual(lines[1].rho, 30.0)

    def test_max_lines(self):
        from ..config import HoughParams
        lines = self._callFUT(_bits(100, 100, rows=[30], cols=[70]),
                              HoughParams(max_lines=1))
        self.assertEqual(len(lines), 1)

    def test_not_enough_evidence(self):
        from ..errors import NotEnoughEvidenceError
        self.assertRaises(NotEnoughEvidenceError, self._callFUT, _bits(10, 10))


class RefineLineTest(_AngleAssertable, unittest.TestCase):

    def _callFUT(self, line, img, band_px=3.0):
        from ..hough import refine_line
        return refine_line(line, img, band_px)

    def test_centers_on_thick_line(self):
        from ..geometry import PolarLine
        line = self._callFUT(PolarLine(30.0, 0.5 * math.pi),
                             _bits(100, 100, rows=[30, 31]))
        self.assertAlmostEqual(line.rho, 30.5)
        self.assertAngleAlmostEqual(line.theta, 0.5 * math.pi)

    def test_without_support(self):
        from ..geometry import PolarLine
        line = PolarLine(80.0, 0.5 * math.pi)
        self.assertEqual(self._callFUT(line, _bits(100, 100, rows=[30])), line)


class ExtractSegmentsTest(unittest.TestCase):

    def _callFUT(self, bits):
        from ..geometry import PolarLine
        from ..hough import extract_segments
        from ..raster import BinaryImage
        return extract_segments(PolarLine(30.0, 0.5 * math.pi), BinaryImage(bits))

    def _ends(self, segments):
        return sorted(tuple(sorted([tuple(s.p0), tuple(s.p1)])) for s in segments)

    def test_gap_splits(self):
        bits = np.zeros((100, 100), dtype=bool)
        bits[30, 0:40] = True
        bits[30, 60:100] = True
        self.assertEqual(self._ends(self._callFUT(bits)), [
            ((0.0, 30.0), (39.0, 30.0)),
            ((60.0, 30.0), (99.0, 30.0)),
        ])

    def test_small_gap_bridged(self):
        bits = np.zeros((100, 100), dtype=bool)
        bits[30, :] = True
        bits[30, 40:42] = False
        self.assertEqual(self._ends(self._callFUT(bits)),
                         [((0.0, 30.0), (99.0, 30.0))])

    def test_short_run_dropped(self):
        bits = np.zeros((100, 100), dtype=bool)
        bits[30, 0:3] = True
        self.assertEqual(self._callFUT(bits), [])


class IsSuppressedTest(unittest.TestCase):

    def _callFUT(self, rho, theta, kept):
        from ..config import HoughParams
        from ..hough import is_suppressed
        return is_suppressed(rho, theta, kept, HoughParams())

    def test_window(self):
        self.assertTrue(self._callFUT(32.0, 0.52 * math.pi, [(30.0, 0.5 * math.pi)]))
        self.assertFalse(self._callFUT(40.0, 0.5 * math.pi, [(30.0, 0.5 * math.pi)]))

    def test_wraps_at_pi(self):
        self.assertTrue(self._callFUT(-70.0, math.pi - 0.01, [(70.0, 0.0)]))


class ExtractLinesTest(_AngleAssertable, unittest.TestCase):

    def _callFUT(self, img, window=None):
        from ..config import SegmentParams
        from ..hough import extract_lines
        return extract_lines(img, None, SegmentParams(min_length_frac=0.1), window)

    def test_faint_line_survives_strong_one(self):
        from ..raster import BinaryImage
        bits = np.zeros((100, 100), dtype=bool)
        bits[30, :] = True
        bits[40:65, 70] = True
        found = self._callFUT(BinaryImage(bits))
        self.assertEqual(len(found), 2)
        (first, first_segments), (second, second_segments) = found
        self.assertAlmostEqual(first.rho, 30.0)
        self.assertAngleAlmostEqual(first.theta, 0.5 * math.pi)
        self.assertAlmostEqual(second.rho, 70.0)
        self.assertAngleAlmostEqual(second.theta, 0.0)
        self.assertEqual(len(second_segments), 1)
        self.assertEqual(sorted([second_segments[0].p0.y, second_segments[0].p1.y]),
                         [40.0, 64.0])

    def test_global_threshold_drops_the_faint_line(self):
        from ..hough import hough_lines
        from ..raster import BinaryImage
        bits = np.zeros((100, 100), dtype=bool)
        bits[30, :] = True
        bits[40:65, 70] = True
        lines = hough_lines(BinaryImage(bits))
        self.assertEqual(len(lines), 1)

    def test_flanks_make_one_line(self):
        found = self._callFUT(_bits(100, 100, rows=[29, 31]))
        self.assertEqual(len(found), 1)
        self.assertAlmostEqual(found[0][0].rho, 30.0)

    def test_window(self):
        found = self._callFUT(_bits(100, 100, rows=[30], cols=[70]),
                              (0.0, math.pi / 9))
        self.assertEqual(len(found), 1)
        self.assertAlmostEqual(found[0][0].rho, 70.0)
        self.assertAngleAlmostEqual(found[0][0].theta, 0.0)

    def test_max_lines(self):
        from ..config import HoughParams
        from ..hough import extract_lines
        found = extract_lines(_bits(100, 100, rows=[30], cols=[70]),
                              HoughParams(max_lines=1))
        self.assertEqual(len(found), 1)

    def test_not_enough_evidence(self):
        from ..errors import NotEnoughEvidenceError
        self.assertRaises(NotEnoughEvidenceError, self._callFUT, _bits(10, 10))


class SplitByOrientationTest(unittest.TestCase):

    def _segments(self):
        from ..geometry import LineSegment
        return [LineSegment((0, 0), (1, 10)),
                LineSegment((0, 0), (10, 2)),
                LineSegment((0, 0), (10, 10))]

    def test_default_tolerance(self):
        from ..hough import split_by_orientation
        segments = self._segments()
        vertical, horizontal = split_by_orientation(segments)
        self.assertEqual(vertical, [segments[0]])
        self.assertEqual(horizontal, [segments[1]])

    def test_wide_horizontal_band(self):
        from ..hough import split_by_orientation
        segments = self._segments()
        vertical, horizontal = split_by_orientation(segments, math.pi / 9,
                                                    math.pi / 3)
        self.assertEqual(vertical, [segments[0]])
        self.assertEqual(horizontal, segments[1:])
