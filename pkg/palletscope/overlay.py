"""Result overlays: side faces in red, package rows and columns in yellow."""
import io
import logging

import numpy as np
from PIL import Image, ImageDraw

from . import store
from .structure import grid_lines


__all__ = [
    'FACE_COLOR',
    'GRID_COLOR',
    'render_overlay',
    'save_overlay',
]


logger = logging.getLogger(__name__)


FACE_COLOR = (255, 0, 0)
GRID_COLOR = (255, 255, 0)


def render_overlay(gray, units, target_h=400.0):
    """Draw analyzed units over the image.

    :type gray: palletscope.raster.GrayImage
    :param units: list of ``(faces, face_structures)``; ``faces`` is the
        ``(left, right)`` pair of Quad or None, ``face_structures`` the
        matching FaceStructure pair or None.
    :rtype: PIL.Image.Image
    """
    data = np.rint(gray.pixels * 255.0).astype(np.uint8)
    image = Image.fromarray(data).convert('RGB')
    draw = ImageDraw.Draw(image)
    for faces, structures in units:
        if not faces:
            continue
        if structures:
            for face, structure in zip(faces, structures):
                for segment in grid_lines(face, structure, target_h):
                    draw.line([tuple(segment.p0), tuple(segment.p1)],
                              fill=GRID_COLOR, width=1)
        for face in faces:
            corners = [tuple(p) for p in face.corners]
            draw.line(corners + corners[:1], fill=FACE_COLOR, width=2)
    return image


def save_overlay(path, gray, units, target_h=400.0):
    """Render an overlay and write it atomically as PNG."""
    buf = io.BytesIO()
    render_overlay(gray, units, target_h).save(buf, format='PNG')
    store.write_bytes(path, buf.getvalue())
    logger.info('wrote overlay %s', path)
    return path
