"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback
keeps the package fully functional without a compiler. Set
``ARTEXPLORE_KERNELS=numpy`` to force the fallback or ``=native`` to
require the extension (ImportError if it is missing).
"""

import os

from artexplore.metrics import _numpy_backend


def _select():
    requested = os.environ.get("ARTEXPLORE_KERNELS", "auto").lower()
    if requested == "numpy":
        return _numpy_backend
    if requested == "native":
        from artexplore.metrics import _native

        return _native
    try:
        from artexplore.metrics import _native
    except ImportError:
        return _numpy_backend
    return _native


kernels = _select()
