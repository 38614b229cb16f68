"""Kernel backend selection, fixed at import time.

The compiled extension (dafs.nn._fastcore) is used when importable; otherwise
the pure-numpy kernels.  Set DAFS_BACKEND=python to force the fallback, or
DAFS_BACKEND=compiled to make a missing extension a hard error.
"""

import contextlib
import os

from . import kernels_py

_requested = os.environ.get("DAFS_BACKEND", "").lower()
_active = kernels_py
if _requested not in ("python", "numpy"):
    try:
        from . import _fastcore

        _active = _fastcore
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "DAFS_BACKEND=compiled but dafs.nn._fastcore is not built; "
                "reinstall with a C toolchain available"
            )
_default = _active


def active():
    return _active


def active_name():
    return _active.NAME


def available():
    """Names of all importable backends."""
    names = [kernels_py.NAME]
    try:
        from . import _fastcore

        names.append(_fastcore.NAME)
    except ImportError:
        pass
    return names


def _module_for(name):
    if name == kernels_py.NAME:
        return kernels_py
    if name == "compiled":
        from . import _fastcore

        return _fastcore
    raise ValueError(f"unknown backend {name!r}; choose from {available()}")


@contextlib.contextmanager
def use(name):
    """Temporarily switch backends (tests and benchmarks only)."""
    global _active
    prev = _active
    _active = _module_for(name)
    try:
        yield _active
    finally:
        _active = prev
