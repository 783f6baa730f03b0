"""Backend selection for the simulation kernels.

The compiled extension is used when it was built; otherwise the numpy
implementation.  Set ``BRWRE_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from brwre import _pykernels

#: Stayer populations above this are treated as surviving forever.
DEFAULT_SURVIVAL_BOUND = 2**40

python_backend = _pykernels
compiled_backend = None

if not os.environ.get("BRWRE_PURE_PYTHON"):
    try:
        from brwre import _kernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

_active = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if _active is compiled_backend else "python"

stayer_gw = _active.stayer_gw
run_counts = _active.run_counts
