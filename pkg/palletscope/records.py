"""Dict-backed records for annotation and result documents.

Every document on disk is a list document::

    {"object": "list", "data": [...], "schema_version": 1}

whose items carry an ``object`` type (``annotation`` or ``result``).
Records keep the parsed JSON as is and expose its keys as attributes, so
a document loaded and saved again is byte-identical.
"""
import copy
import logging
import numbers
import os

from . import errors
from . import store
from .geometry import Quad
from .raster import InstanceMask
from .structure import PACKAGE_CLASSES, PackageDetection


__all__ = [
    'Base',
    'Collection',
    'Annotation',
    'Unit',
    'Result',
    'UnitResult',
    'load_annotations',
    'save_annotations',
    'load_results',
    'save_results',
]


logger = logging.getLogger(__name__)


STRUCTURE_KEYS = ('rows_l', 'cols_l', 'rows_r', 'cols_r', 'total')


def _get_class_for(type):
    """Returns a :type:`class` corresponding to :param:`type`.

    Used for getting a record class from the ``object`` key of a
    document item, in the form of
    ``_get_class_for(data['object']).from_data(data)``.

    :type type: str
    :rtype: class
    """
    return {
        'annotation': Annotation,
        'list': Collection,
        'result': Result,
        'unit_result': UnitResult,
    }.get(type)


def _as_object(data):
    """Returns a record for parsed JSON ``data``.

    :type data: dict | list
    :rtype: T <= Base
    """
    if isinstance(data, list):
        return [_as_object(i) for i in data]
    elif isinstance(data, dict):
        class_ = _get_class_for(data.get('object'))
        if not class_:
            class_ = Base
        return class_.from_data(data)
    return data


class Base(object):
    """Provides a base class for all records.

    The instance proxies attribute access to the underlying :type:`dict`.

    Basic usage::

        >>> from palletscope import records
        >>> obj = records.Base.from_data({'image_path': 'a.png'})
        <Base image='a.png' at 0x7f0d931cf740>
        >>> obj.image_path
        'a.png'
    """

    def __init__(self):
        super(Base, self).__init__()
        self._attributes = dict()

    def __getattr__(self, key):
        if key[0] == '_':
            raise AttributeError(key)
        try:
            value = self._attributes[key]
            if isinstance(value, dict):
                return _as_object(value)
            return value
        except KeyError as e:
            raise AttributeError(*e.args)

    def __repr__(self):
        image = self._attributes.get('image_path')
        return '<%s%s at %s>' % (
            type(self).__name__,
            ' image=%s' % repr(str(image)) if image else '',
            hex(id(self)))

    @classmethod
    def from_data(cls, data):
        """Instantiate the class with the given data.

        :type data: dict
        """
        instance = cls()
        instance._reload_data(data)
        return instance

    def _reload_data(self, data):
        self._attributes = dict(data)
        return self

    def get(self, key, default=None):
        return self._attributes.get(key, default)

    def to_data(self):
        return copy.deepcopy(self._attributes)


class Collection(Base):
    """Proxy class representing a list document."""

    _base_dir = None

    def __len__(self):
        return len(self._attributes['data'])

    def __iter__(self):
        for obj in self._attributes['data']:
            yield self._wrap(obj)

    def __getitem__(self, item):
        return self._wrap(self._attributes['data'][item])

    def _wrap(self, obj):
        record = _as_object(obj)
        if self._base_dir is not None and isinstance(record, Base):
            record._base_dir = self._base_dir
        return record

    def retrieve(self, image_path=None):
        """Retrieve the record of :param:`image_path`.

        If no :param:`image_path` is given, a list of all records is returned
        instead. This is equivalent of calling ``list(collection)``.

        :type image_path: str
        :rtype: T <= Base
        """
        if image_path is None:
            return list(self)
        for obj in self:
            if obj.get('image_path') == image_path:
                return obj


class _Located(Base):
    """A record whose relative paths resolve against its document."""

    _base_dir = ''

    def resolve(self, path):
        return os.path.join(self._base_dir or '', path)


class Annotation(_Located):
    """Annotated image: transport units with masks and optionally faces,
    packages, pallet label and structure."""

    @property
    def units(self):
        units = []
        for data in self._attributes.get('units', []):
            unit = Unit.from_data(data)
            unit._base_dir = self._base_dir
            units.append(unit)
        return units

    @property
    def image(self):
        return self.resolve(self._attributes['image_path'])


class Unit(_Located):

    @property
    def structure(self):
        value = self._attributes.get('structure')
        return dict(value) if value is not None else None

    def face_quads(self):
        """``(left, right)`` quads, or ``None`` when not annotated."""
        faces = self._attributes.get('faces')
        if not faces:
            return None
        return tuple(Quad(face) for face in faces)

    def package_detections(self):
        return [PackageDetection.from_data(p)
                for p in self._attributes.get('packages') or []]

    def instance_mask(self, width, height):
        """Rasterize the polygons of the mask, or load its PNG.

        :rtype: palletscope.raster.InstanceMask
        """
        mask = self._attributes['mask']
        if isinstance(mask, str):
            instance = InstanceMask.from_png(self.resolve(mask))
            if instance.shape != (height, width):
                raise errors.DimensionMismatchError(
                    'mask %s is %dx%d, image is %dx%d' % (
                        mask, instance.width, instance.height, width, height))
            return instance
        return InstanceMask.from_polygons(mask, width, height)


class Result(_Located):
    """Analysis of one image."""

    @property
    def units(self):
        return [UnitResult.from_data(u) for u in self._attributes.get('units', [])]


class UnitResult(Base):
    """Outcome of one transport unit: ``status`` is ``"ok"`` or an error
    code, with the failure message in ``reason``."""

    @property
    def ok(self):
        return self._attributes.get('status') == 'ok'

    @property
    def structure(self):
        value = self._attributes.get('structure')
        return dict(value) if value is not None else None

    def face_quads(self):
        faces = self._attributes.get('faces')
        if not faces:
            return None
        return tuple(Quad(face) for face in faces)

    def error(self):
        """The recorded failure as an exception instance, or ``None``."""
        if self.ok:
            return None
        try:
            errors._raise_from_data({'code': self._attributes.get('status'),
                                     'message': self._attributes.get('reason', '')})
        except errors.BaseError as e:
            return e


def _is_number(value):
    return isinstance(value, numbers.Real) and not isinstance(value, bool)


def _is_count(value):
    return isinstance(value, int) and not isinstance(value, bool) and value >= 1


def _check_quad(value, path):
    if (not isinstance(value, list) or len(value) != 4 or
            not all(isinstance(p, list) and len(p) == 2 and all(map(_is_number, p))
                    for p in value)):
        raise errors.SchemaError('expected 4 points of [x, y]', path)
    try:
        Quad(value)
    except errors.InvalidGeometryError as e:
        raise errors.SchemaError(str(e), path)


def _check_polygon(value, path):
    if (not isinstance(value, list) or len(value) < 3 or
            not all(isinstance(p, list) and len(p) == 2 and all(map(_is_number, p))
                    for p in value)):
        raise errors.SchemaError('expected a polygon of at least 3 [x, y] points', path)


def _check_file(base_dir, name, path):
    if not os.path.isfile(os.path.join(base_dir, name)):
        raise errors.SchemaError('file %s does not exist' % name, path)


def _check_unit(unit, path, base_dir, check_files):
    if not isinstance(unit, dict):
        raise errors.SchemaError('expected an object', path)
    if 'mask' not in unit:
        raise errors.SchemaError('missing mask', path)
    mask = unit['mask']
    if isinstance(mask, str):
        if check_files:
            _check_file(base_dir, mask, '%s.mask' % path)
    elif isinstance(mask, list) and mask:
        for k, polygon in enumerate(mask):
            _check_polygon(polygon, '%s.mask[%d]' % (path, k))
    else:
        raise errors.SchemaError('expected a polygon list or PNG path', '%s.mask' % path)

    faces = unit.get('faces')
    if faces is not None:
        if not isinstance(faces, list) or len(faces) != 2:
            raise errors.SchemaError('expected left and right faces', '%s.faces' % path)
        for k, face in enumerate(faces):
            _check_quad(face, '%s.faces[%d]' % (path, k))

    packages = unit.get('packages')
    if packages is not None:
        if not isinstance(packages, list):
            raise errors.SchemaError('expected a list', '%s.packages' % path)
        for k, package in enumerate(packages):
            where = '%s.packages[%d]' % (path, k)
            if not isinstance(package, dict):
                raise errors.SchemaError('expected an object', where)
            _check_quad(package.get('quad'), '%s.quad' % where)
            if package.get('class') not in PACKAGE_CLASSES:
                raise errors.SchemaError(
                    'class must be one of %s' % ', '.join(PACKAGE_CLASSES),
                    '%s.class' % where)
            score = package.get('score', 1.0)
            if not _is_number(score) or not 0.0 <= score <= 1.0:
                raise errors.SchemaError('score must lie in [0, 1]', '%s.score' % where)

    pallet = unit.get('pallet')
    if pallet is not None and not isinstance(pallet, str):
        raise errors.SchemaError('expected a string', '%s.pallet' % path)

    structure = unit.get('structure')
    if structure is not None:
        if not isinstance(structure, dict):
            raise errors.SchemaError('expected an object', '%s.structure' % path)
        for key in STRUCTURE_KEYS:
            if not _is_count(structure.get(key)):
                raise errors.SchemaError(
                    'expected a positive count', '%s.structure.%s' % (path, key))


def _check_annotation(record, path, base_dir, check_files):
    if not isinstance(record, dict):
        raise errors.SchemaError('expected an object', path)
    if not isinstance(record.get('image_path'), str):
        raise errors.SchemaError('missing image_path', '%s.image_path' % path)
    if check_files:
        _check_file(base_dir, record['image_path'], '%s.image_path' % path)
    units = record.get('units')
    if not isinstance(units, list):
        raise errors.SchemaError('expected a list', '%s.units' % path)
    for k, unit in enumerate(units):
        _check_unit(unit, '%s.units[%d]' % (path, k), base_dir, check_files)


def _check_list(data):
    if data.get('object') != 'list' or not isinstance(data.get('data'), list):
        raise errors.SchemaError('expected a list document', 'object')


def _collection(data, base_dir):
    collection = Collection.from_data(data)
    collection._base_dir = base_dir
    return collection


def load_annotations(path, check_files=True):
    """Load and validate an annotation document.

    Relative image and mask paths resolve against the document's
    directory.

    :type path: str
    :rtype: Collection of Annotation
    """
    data = store.read_document(path)
    _check_list(data)
    base_dir = os.path.dirname(os.path.abspath(path))
    for k, record in enumerate(data['data']):
        _check_annotation(record, 'data[%d]' % k, base_dir, check_files)
        record.setdefault('object', 'annotation')
    logger.info('loaded %d annotated image(s) from %s', len(data['data']), path)
    return _collection(data, base_dir)


def _document(records):
    if isinstance(records, Collection):
        return records.to_data()
    return {'object': 'list',
            'data': [r.to_data() if isinstance(r, Base) else r for r in records]}


def save_annotations(path, records):
    """Write annotation records as a list document.

    :type records: Collection | list
    """
    store.write_document(path, _document(records))


def _check_result(record, path):
    if not isinstance(record, dict) or not isinstance(record.get('image_path'), str):
        raise errors.SchemaError('expected a result with image_path', path)
    units = record.get('units')
    if not isinstance(units, list):
        raise errors.SchemaError('expected a list', '%s.units' % path)
    for k, unit in enumerate(units):
        where = '%s.units[%d]' % (path, k)
        if not isinstance(unit, dict) or not isinstance(unit.get('status'), str):
            raise errors.SchemaError('expected a unit result with status', where)
        faces = unit.get('faces')
        if faces is not None:
            if not isinstance(faces, list) or len(faces) != 2:
                raise errors.SchemaError('expected left and right faces',
                                         '%s.faces' % where)
            for j, face in enumerate(faces):
                _check_quad(face, '%s.faces[%d]' % (where, j))


def load_results(path):
    """Load and validate a result document.

    :rtype: Collection of Result
    """
    data = store.read_document(path)
    _check_list(data)
    for k, record in enumerate(data['data']):
        _check_result(record, 'data[%d]' % k)
    logger.info('loaded results for %d image(s) from %s', len(data['data']), path)
    return _collection(data, os.path.dirname(os.path.abspath(path)))


def save_results(path, results):
    """Write result records as a list document.

    :type results: list of Result | dict
    """
    store.write_document(path, _document(results))
