"""Pipeline parameters.

Every tunable of the pipeline lives in one immutable parameter group per
stage. :class:`PipelineConfig` bundles the groups and maps them to and from
the JSON configuration document::

    {"schema_version": 1, "raster": {"threshold": 0.3}, "vp": {...}}

Sections and keys that are left out keep their defaults; unknown ones are
rejected.
"""
import collections
import logging
import math
import os

from . import errors
from . import store


__all__ = [
    'RasterParams',
    'HoughParams',
    'SegmentParams',
    'VPConfig',
    'SideFaceParams',
    'QuadFitConfig',
    'StructureParams',
    'GeometryParams',
    'PipelineConfig',
    'load_config',
]


logger = logging.getLogger(__name__)


CONFIG_ENV = 'PALLETSCOPE_CONFIG'

KERNELS = ('sobel', 'prewitt', 'scharr')


def _number(section, key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise errors.ConfigError(
            '%s.%s must be a number, got %r' % (section, key, value))
    value = float(value)
    if not math.isfinite(value):
        raise errors.ConfigError('%s.%s must be finite' % (section, key))
    return value


def _integer(section, key, value):
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    if isinstance(value, bool) or not isinstance(value, int):
        raise errors.ConfigError(
            '%s.%s must be an integer, got %r' % (section, key, value))
    return value


def _check(condition, section, key, value, rule):
    if not condition:
        raise errors.ConfigError('%s.%s = %r: %s' % (section, key, value, rule))


class _Params(object):
    """Shared behaviour of the parameter groups."""

    __slots__ = ()
    section = None

    @classmethod
    def from_data(cls, data):
        """Build the group from its JSON section.

        :type data: dict or None
        """
        if data is None:
            return cls()
        if not isinstance(data, dict):
            raise errors.ConfigError('%s: expected an object' % cls.section)
        unknown = sorted(set(data) - set(cls._fields))
        if unknown:
            raise errors.ConfigError(
                '%s: unknown keys %s' % (cls.section, ', '.join(unknown)))
        return cls(**data)

    def to_data(self):
        data = {}
        for key, value in zip(self._fields, self):
            data[key] = list(value) if isinstance(value, tuple) else value
        return data


class RasterParams(_Params, collections.namedtuple(
        'RasterParams', ('kernel', 'threshold', 'erosion_px'))):
    """Edge filtering, binarization and mask restriction.

    ``threshold`` is a fraction in ``(0, 1]`` or ``"auto"`` for Otsu's
    method.
    """

    __slots__ = ()
    section = 'raster'

    def __new__(cls, kernel='sobel', threshold=0.25, erosion_px=0):
        s = cls.section
        _check(kernel in KERNELS, s, 'kernel', kernel,
               'expected one of %s' % ', '.join(KERNELS))
        if threshold != 'auto':
            threshold = _number(s, 'threshold', threshold)
            _check(0.0 < threshold <= 1.0, s, 'threshold', threshold,
                   'expected a value in (0, 1] or "auto"')
        erosion_px = _integer(s, 'erosion_px', erosion_px)
        _check(erosion_px >= 0, s, 'erosion_px', erosion_px, 'must be >= 0')
        return super(RasterParams, cls).__new__(cls, kernel, threshold, erosion_px)


class HoughParams(_Params, collections.namedtuple(
        'HoughParams', ('rho_res', 'theta_res', 'peak_threshold_frac', 'nms_rho',
                        'nms_theta', 'max_lines', 'refine', 'refine_band_px'))):
    __slots__ = ()
    section = 'hough'

    def __new__(cls, rho_res=1.0, theta_res=math.pi / 360, peak_threshold_frac=0.4,
                nms_rho=5.0, nms_theta=math.pi / 36, max_lines=64, refine=True,
                refine_band_px=3.0):
        s = cls.section
        rho_res = _number(s, 'rho_res', rho_res)
        theta_res = _number(s, 'theta_res', theta_res)
        peak_threshold_frac = _number(s, 'peak_threshold_frac', peak_threshold_frac)
        nms_rho = _number(s, 'nms_rho', nms_rho)
        nms_theta = _number(s, 'nms_theta', nms_theta)
        max_lines = _integer(s, 'max_lines', max_lines)
        refine_band_px = _number(s, 'refine_band_px', refine_band_px)
        for key, value in (('rho_res', rho_res), ('nms_rho', nms_rho),
                           ('nms_theta', nms_theta), ('max_lines', max_lines),
                           ('refine_band_px', refine_band_px)):
            _check(value > 0, s, key, value, 'must be positive')
        _check(0.0 < theta_res < math.pi, s, 'theta_res', theta_res,
               'expected a value in (0, pi)')
        _check(0.0 < peak_threshold_frac <= 1.0, s, 'peak_threshold_frac',
               peak_threshold_frac, 'expected a value in (0, 1]')
        _check(isinstance(refine, bool), s, 'refine', refine, 'must be a boolean')
        return super(HoughParams, cls).__new__(
            cls, rho_res, theta_res, peak_threshold_frac, nms_rho, nms_theta,
            max_lines, refine, refine_band_px)


class SegmentParams(_Params, collections.namedtuple(
        'SegmentParams', ('min_length_frac', 'max_gap_px', 'on_band_px',
                          'vertical_tol', 'horizontal_tol'))):
    """Segment recovery along Hough lines and the orientation split."""

    __slots__ = ()
    section = 'segment'

    def __new__(cls, min_length_frac=0.02, max_gap_px=3.0, on_band_px=1.5,
                vertical_tol=math.pi / 9, horizontal_tol=math.pi / 3):
        s = cls.section
        min_length_frac = _number(s, 'min_length_frac', min_length_frac)
        max_gap_px = _number(s, 'max_gap_px', max_gap_px)
        on_band_px = _number(s, 'on_band_px', on_band_px)
        vertical_tol = _number(s, 'vertical_tol', vertical_tol)
        horizontal_tol = _number(s, 'horizontal_tol', horizontal_tol)
        for key, value in (('min_length_frac', min_length_frac),
                           ('max_gap_px', max_gap_px),
                           ('on_band_px', on_band_px),
                           ('vertical_tol', vertical_tol),
                           ('horizontal_tol', horizontal_tol)):
            _check(value > 0, s, key, value, 'must be positive')
        _check(vertical_tol + horizontal_tol < 0.5 * math.pi, s, 'horizontal_tol',
               horizontal_tol, 'vertical and horizontal bands overlap')
        return super(SegmentParams, cls).__new__(
            cls, min_length_frac, max_gap_px, on_band_px, vertical_tol,
            horizontal_tol)


class VPConfig(_Params, collections.namedtuple(
        'VPConfig', ('iterations', 'init_dist_frac', 'decay', 'min_support',
                     'parallel_spread_px', 'far_factor'))):
    """Iterative vanishing point filter.

    The distance threshold of iteration ``i`` (1-based) is
    ``init_dist_frac * diag * decay ** (i - 1)``. Line intersections farther
    than ``far_factor * diag`` from the image center count as points at
    infinity.
    """

    __slots__ = ()
    section = 'vp'

    def __new__(cls, iterations=4, init_dist_frac=0.25, decay=0.5, min_support=3,
                parallel_spread_px=1e5, far_factor=10.0):
        s = cls.section
        iterations = _integer(s, 'iterations', iterations)
        init_dist_frac = _number(s, 'init_dist_frac', init_dist_frac)
        decay = _number(s, 'decay', decay)
        min_support = _integer(s, 'min_support', min_support)
        parallel_spread_px = _number(s, 'parallel_spread_px', parallel_spread_px)
        far_factor = _number(s, 'far_factor', far_factor)
        _check(iterations >= 1, s, 'iterations', iterations, 'must be >= 1')
        _check(init_dist_frac > 0, s, 'init_dist_frac', init_dist_frac,
               'must be positive')
        _check(0.0 < decay < 1.0, s, 'decay', decay, 'expected a value in (0, 1)')
        _check(min_support >= 2, s, 'min_support', min_support, 'must be >= 2')
        _check(parallel_spread_px > 0, s, 'parallel_spread_px',
               parallel_spread_px, 'must be positive')
        _check(far_factor > 0, s, 'far_factor', far_factor, 'must be positive')
        return super(VPConfig, cls).__new__(
            cls, iterations, init_dist_frac, decay, min_support,
            parallel_spread_px, far_factor)


class SideFaceParams(_Params, collections.namedtuple(
        'SideFaceParams', ('min_mask_px', 'shared_edge_tol_px', 'clamp_factor',
                           'boundary_trim_px', 'span_tol_frac',
                           'scene_vp_factor', 'mask_margin_px', 'snap_tol_px'))):
    __slots__ = ()
    section = 'sideface'

    def __new__(cls, min_mask_px=1000, shared_edge_tol_px=5.0, clamp_factor=1.1,
                boundary_trim_px=4.0, span_tol_frac=0.05, scene_vp_factor=3.0,
                mask_margin_px=2, snap_tol_px=6.0):
        s = cls.section
        min_mask_px = _integer(s, 'min_mask_px', min_mask_px)
        shared_edge_tol_px = _number(s, 'shared_edge_tol_px', shared_edge_tol_px)
        clamp_factor = _number(s, 'clamp_factor', clamp_factor)
        boundary_trim_px = _number(s, 'boundary_trim_px', boundary_trim_px)
        span_tol_frac = _number(s, 'span_tol_frac', span_tol_frac)
        scene_vp_factor = _number(s, 'scene_vp_factor', scene_vp_factor)
        mask_margin_px = _integer(s, 'mask_margin_px', mask_margin_px)
        snap_tol_px = _number(s, 'snap_tol_px', snap_tol_px)
        _check(min_mask_px >= 1, s, 'min_mask_px', min_mask_px, 'must be >= 1')
        _check(shared_edge_tol_px > 0, s, 'shared_edge_tol_px',
               shared_edge_tol_px, 'must be positive')
        _check(clamp_factor >= 1.0, s, 'clamp_factor', clamp_factor,
               'must be >= 1')
        _check(boundary_trim_px > 0, s, 'boundary_trim_px', boundary_trim_px,
               'must be positive')
        _check(span_tol_frac >= 0, s, 'span_tol_frac', span_tol_frac,
               'must be >= 0')
        _check(scene_vp_factor > 0, s, 'scene_vp_factor', scene_vp_factor,
               'must be positive')
        _check(mask_margin_px >= 0, s, 'mask_margin_px', mask_margin_px,
               'must be >= 0')
        _check(snap_tol_px >= 0, s, 'snap_tol_px', snap_tol_px, 'must be >= 0')
        return super(SideFaceParams, cls).__new__(
            cls, min_mask_px, shared_edge_tol_px, clamp_factor,
            boundary_trim_px, span_tol_frac, scene_vp_factor, mask_margin_px,
            snap_tol_px)


class QuadFitConfig(_Params, collections.namedtuple(
        'QuadFitConfig', ('step_schedule', 'max_sweeps_per_step',
                          'iou_resolution'))):
    """Corner search for :func:`palletscope.quadfit.fit_quad_to_mask`.

    ``iou_resolution`` of ``None`` evaluates the objective on every mask
    pixel.
    """

    __slots__ = ()
    section = 'quadfit'

    def __new__(cls, step_schedule=(16, 8, 4, 2, 1), max_sweeps_per_step=20,
                iou_resolution=None):
        s = cls.section
        if not isinstance(step_schedule, (list, tuple)) or not step_schedule:
            raise errors.ConfigError('%s.step_schedule must be a non-empty list' % s)
        steps = tuple(_number(s, 'step_schedule', v) for v in step_schedule)
        steps = tuple(int(v) if v.is_integer() else v for v in steps)
        _check(all(v > 0 for v in steps), s, 'step_schedule', list(steps),
               'steps must be positive')
        _check(all(a > b for a, b in zip(steps, steps[1:])), s, 'step_schedule',
               list(steps), 'steps must be strictly decreasing')
        max_sweeps_per_step = _integer(s, 'max_sweeps_per_step', max_sweeps_per_step)
        _check(max_sweeps_per_step >= 1, s, 'max_sweeps_per_step',
               max_sweeps_per_step, 'must be >= 1')
        if iou_resolution is not None:
            iou_resolution = _integer(s, 'iou_resolution', iou_resolution)
            _check(iou_resolution >= 1, s, 'iou_resolution', iou_resolution,
                   'must be >= 1')
        return super(QuadFitConfig, cls).__new__(
            cls, steps, max_sweeps_per_step, iou_resolution)


class StructureParams(_Params, collections.namedtuple(
        'StructureParams', ('target_h', 'prominence_frac', 'border_frac',
                            'max_count', 'low_confidence_residual'))):
    __slots__ = ()
    section = 'structure'

    def __new__(cls, target_h=400.0, prominence_frac=0.3, border_frac=0.02,
                max_count=12, low_confidence_residual=0.35):
        s = cls.section
        target_h = _number(s, 'target_h', target_h)
        prominence_frac = _number(s, 'prominence_frac', prominence_frac)
        border_frac = _number(s, 'border_frac', border_frac)
        max_count = _integer(s, 'max_count', max_count)
        low_confidence_residual = _number(s, 'low_confidence_residual',
                                          low_confidence_residual)
        _check(target_h >= 10, s, 'target_h', target_h, 'must be >= 10')
        _check(0.0 < prominence_frac <= 1.0, s, 'prominence_frac',
               prominence_frac, 'expected a value in (0, 1]')
        _check(0.0 <= border_frac < 0.5, s, 'border_frac', border_frac,
               'expected a value in [0, 0.5)')
        _check(max_count >= 1, s, 'max_count', max_count, 'must be >= 1')
        _check(0.0 < low_confidence_residual <= 0.5, s,
               'low_confidence_residual', low_confidence_residual,
               'expected a value in (0, 0.5]')
        return super(StructureParams, cls).__new__(
            cls, target_h, prominence_frac, border_frac, max_count,
            low_confidence_residual)


class GeometryParams(_Params, collections.namedtuple(
        'GeometryParams', ('iou_resolution',))):
    __slots__ = ()
    section = 'geometry'

    def __new__(cls, iou_resolution=1024):
        iou_resolution = _integer(cls.section, 'iou_resolution', iou_resolution)
        _check(iou_resolution >= 16, cls.section, 'iou_resolution',
               iou_resolution, 'must be >= 16')
        return super(GeometryParams, cls).__new__(cls, iou_resolution)


_SECTIONS = (
    ('raster', RasterParams),
    ('hough', HoughParams),
    ('segment', SegmentParams),
    ('vp', VPConfig),
    ('sideface', SideFaceParams),
    ('quadfit', QuadFitConfig),
    ('structure', StructureParams),
    ('geometry', GeometryParams),
)


class PipelineConfig(collections.namedtuple(
        'PipelineConfig', tuple(name for name, _ in _SECTIONS))):
    """The effective configuration of a run.

    Basic usage::

        >>> from palletscope.config import PipelineConfig, VPConfig
        >>> cfg = PipelineConfig(vp=VPConfig(iterations=6))
        >>> cfg.vp.iterations, cfg.hough.max_lines
        (6, 64)
    """

    __slots__ = ()

    def __new__(cls, raster=None, hough=None, segment=None, vp=None,
                sideface=None, quadfit=None, structure=None, geometry=None):
        given = (raster, hough, segment, vp, sideface, quadfit, structure,
                 geometry)
        values = []
        for (name, class_), value in zip(_SECTIONS, given):
            if value is None:
                value = class_()
            elif not isinstance(value, class_):
                raise errors.ConfigError(
                    '%s must be a %s' % (name, class_.__name__))
            values.append(value)
        return super(PipelineConfig, cls).__new__(cls, *values)

    @classmethod
    def from_data(cls, data):
        """Build a configuration from a parsed JSON document.

        :type data: dict
        :rtype: PipelineConfig
        """
        if not isinstance(data, dict):
            raise errors.ConfigError('configuration must be a JSON object')
        version = data.get('schema_version', store.SCHEMA_VERSION)
        if version != store.SCHEMA_VERSION:
            raise errors.SchemaError(
                'unsupported schema version %r' % (version,), 'schema_version')
        known = dict(_SECTIONS)
        unknown = sorted(set(data) - set(known) - {'schema_version'})
        if unknown:
            raise errors.ConfigError('unknown sections %s' % ', '.join(unknown))
        return cls(**dict((name, known[name].from_data(data[name]))
                          for name in known if name in data))

    def to_data(self):
        data = {'schema_version': store.SCHEMA_VERSION}
        for (name, _), group in zip(_SECTIONS, self):
            data[name] = group.to_data()
        return data

    def save(self, path):
        store.write_document(path, self.to_data())


def load_config(path=None):
    """Load the effective configuration.

    Falls back to the file named by ``PALLETSCOPE_CONFIG`` and then to the
    defaults when ``path`` is not given.

    :type path: str or None
    :rtype: PipelineConfig
    """
    if path is None:
        path = os.environ.get(CONFIG_ENV) or None
    if path is None:
        logger.debug('using the default configuration')
        return PipelineConfig()
    logger.info('loading configuration from %s', path)
    return PipelineConfig.from_data(store.read_document(path))
