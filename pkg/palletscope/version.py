try:
    from importlib.metadata import version as _dist_version, PackageNotFoundError
except ImportError:  # Python < 3.8
    from importlib_metadata import version as _dist_version, PackageNotFoundError

try:
    __VERSION__ = _dist_version('palletscope')
except PackageNotFoundError:
    __VERSION__ = '0.0.0.dev0'
