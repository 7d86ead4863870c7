"""Packaging structure recognition for logistics transport units.

Basic usage::

    >>> import palletscope
    >>> annotations = palletscope.load_annotations('scenes/scene_0000.json')
    >>> results = palletscope.analyze(annotations)
    >>> results[0].units[0].structure
    {'cols_l': 2, 'cols_r': 2, 'pallet': 'EPAL', 'rows_l': 5, 'rows_r': 5, 'total': 20}
"""
from .config import PipelineConfig, load_config
from .geometry import (
    HomogeneousPoint,
    Homography,
    LineSegment,
    Point2,
    PolarLine,
    Quad,
    quad_iou,
)
from .pipeline import analyze, analyze_image, evaluate
from .records import load_annotations, load_results, save_annotations, save_results
from .version import __VERSION__


__all__ = [
    'HomogeneousPoint',
    'Homography',
    'LineSegment',
    'PipelineConfig',
    'Point2',
    'PolarLine',
    'Quad',
    'analyze',
    'analyze_image',
    'evaluate',
    'load_annotations',
    'load_config',
    'load_results',
    'quad_iou',
    'save_annotations',
    'save_results',
    '__VERSION__',
]
