import json
import logging
import os
import tempfile

from . import errors


__all__ = [
    'SCHEMA_VERSION',
    'dumps',
    'read_document',
    'write_document',
    'write_bytes',
]


logger = logging.getLogger(__name__)


SCHEMA_VERSION = 1


def dumps(data):
    """Serialize ``data`` the way every document on disk is written: keys
    sorted, 2-space indent, trailing newline.

    :type data: dict | list
    :rtype: str
    """
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + '\n'


def write_bytes(path, payload):
    """Write ``payload`` to ``path`` atomically.

    The content goes to a temporary file in the target directory first and
    replaces ``path`` in one step, so readers never see a partial file.

    :type path: str
    :type payload: bytes
    """
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(directory):
        os.makedirs(directory)
    fd, tmp_path = tempfile.mkstemp(
        dir=directory, prefix='.%s.' % os.path.basename(path), suffix='.tmp')
    try:
        with os.fdopen(fd, 'wb') as f:
            f.write(payload)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    logger.debug('wrote %d bytes to %s', len(payload), path)


def write_document(path, data):
    """Write a JSON document atomically, stamping its schema version.

    :type path: str
    :type data: dict
    """
    if 'schema_version' not in data:
        data = dict(data, schema_version=SCHEMA_VERSION)
    write_bytes(path, dumps(data).encode('utf-8'))
    logger.info('wrote %s', path)


def read_document(path):
    """Read a JSON document and check its schema version.

    :type path: str
    :rtype: dict
    """
    logger.info('reading %s', path)
    try:
        with open(path, 'rb') as f:
            data = json.loads(f.read().decode('utf-8'))
    except (IOError, OSError) as e:
        raise errors.SchemaError('cannot read %s: %s' % (path, e))
    except ValueError as e:
        raise errors.SchemaError('%s is not valid JSON: %s' % (path, e))
    if not isinstance(data, dict):
        raise errors.SchemaError('top level must be an object')
    version = data.get('schema_version')
    if version != SCHEMA_VERSION:
        raise errors.SchemaError(
            'unsupported schema version %r' % (version,), 'schema_version')
    return data
