"""Kernel backend selection.

The compiled extension is used when it imports; set ``ROUGH_EM_BACKEND=python``
to force the numpy fallback.  Both produce identical floating-point results.
"""

import os

from . import _kernels_py

BACKEND = "python"
kernels = _kernels_py

if os.environ.get("ROUGH_EM_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        kernels = _compiled
        BACKEND = "compiled"


def available_backends():
    out = {"python": _kernels_py}
    try:
        from . import _kernels as _compiled
    except ImportError:
        return out
    out["compiled"] = _compiled
    return out
