__all__ = [
    'BaseError',
    'InvalidGeometryError',
    'IdenticalLinesError',
    'InfinitePointError',
    'DegenerateCorrespondenceError',
    'MapsToInfinityError',
    'DecodeError',
    'ImageTooSmallError',
    'DimensionMismatchError',
    'ConfigError',
    'NotEnoughEvidenceError',
    'InsufficientSupportError',
    'OneSideNotVisibleError',
    'NoEndpointsError',
    'SharedEdgeMismatchError',
    'MaskTooSmallError',
    'DegenerateMaskError',
    'NoPackagesOnFaceError',
    'FrequencyInconclusiveError',
    'LayerMismatchError',
    'ClassMismatchError',
    'SceneOutOfFrameError',
    'EmptyGroundTruthError',
    'SchemaError',
    'DatasetMismatchError',
]


def _get_error_for(code):
    """Returns a :type:`class` corresponding to :param:`code`.

    Used for getting an error from the status code stored in a result
    record.

    :type code: str
    :rtype: class
    """
    return dict(
        (class_.code, class_) for class_ in _ALL_ERRORS
    ).get(code)


def _raise_from_data(data):
    """Raise an error from a serialized failure.

    :type data: dict
    :rtype: None
    """
    if isinstance(data, dict):
        error = _get_error_for(data.get('code'))
        if not error:
            error = BaseError
        raise error(data.get('message', ''))
    raise BaseError('unknown error')


class BaseError(Exception):
    code = 'error'


class InvalidGeometryError(BaseError):
    code = 'invalid_geometry'


class IdenticalLinesError(BaseError):
    code = 'identical_lines'


class InfinitePointError(BaseError):
    code = 'infinite_point'


class DegenerateCorrespondenceError(BaseError):
    code = 'degenerate_correspondence'


class MapsToInfinityError(BaseError):
    code = 'maps_to_infinity'


class DecodeError(BaseError):
    code = 'decode_error'


class ImageTooSmallError(BaseError):
    code = 'image_too_small'


class DimensionMismatchError(BaseError):
    code = 'dimension_mismatch'


class ConfigError(BaseError):
    code = 'config_error'


class NotEnoughEvidenceError(BaseError):
    code = 'not_enough_evidence'


class InsufficientSupportError(BaseError):
    code = 'insufficient_support'


class OneSideNotVisibleError(BaseError):
    code = 'one_side_not_visible'


class NoEndpointsError(BaseError):
    code = 'no_endpoints'


class SharedEdgeMismatchError(BaseError):
    code = 'shared_edge_mismatch'


class MaskTooSmallError(BaseError):
    code = 'mask_too_small'


class DegenerateMaskError(BaseError):
    code = 'degenerate_mask'


class NoPackagesOnFaceError(BaseError):
    code = 'no_packages_on_face'


class FrequencyInconclusiveError(BaseError):
    code = 'frequency_inconclusive'


class LayerMismatchError(BaseError):
    code = 'layer_mismatch'


class ClassMismatchError(BaseError):
    code = 'class_mismatch'


class SceneOutOfFrameError(BaseError):
    code = 'scene_out_of_frame'


class EmptyGroundTruthError(BaseError):
    code = 'empty_ground_truth'


class SchemaError(BaseError):
    code = 'schema_error'

    def __init__(self, message, path=''):
        super(SchemaError, self).__init__(
            '%s: %s' % (path, message) if path else message)
        self.path = path


class DatasetMismatchError(BaseError):
    code = 'dataset_mismatch'


_ALL_ERRORS = (
    BaseError,
    InvalidGeometryError,
    IdenticalLinesError,
    InfinitePointError,
    DegenerateCorrespondenceError,
    MapsToInfinityError,
    DecodeError,
    ImageTooSmallError,
    DimensionMismatchError,
    ConfigError,
    NotEnoughEvidenceError,
    InsufficientSupportError,
    OneSideNotVisibleError,
    NoEndpointsError,
    SharedEdgeMismatchError,
    MaskTooSmallError,
    DegenerateMaskError,
    NoPackagesOnFaceError,
    FrequencyInconclusiveError,
    LayerMismatchError,
    ClassMismatchError,
    SceneOutOfFrameError,
    EmptyGroundTruthError,
    SchemaError,
    DatasetMismatchError,
)
