"""Selects the compiled kernels when available, else the numpy fallback.

Set ``ROOMCURVE_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
image_source_rir = _pykernels.image_source_rir

if os.environ.get("ROOMCURVE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        _ckernels = None
    else:
        BACKEND = "cython"
        image_source_rir = _ckernels.image_source_rir
