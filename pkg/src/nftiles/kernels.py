"""Cell kernel selection: compiled extension when built, Python otherwise."""

import os

from . import _kernels_py

if os.environ.get("NFT_PURE_PYTHON"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
morse_quadratic_cell = (_compiled or _kernels_py).morse_quadratic_cell
morse_quadratic_cell_py = _kernels_py.morse_quadratic_cell
