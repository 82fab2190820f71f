"""Selects the likelihood/score kernel implementation at import time.

The compiled extension is preferred when present; setting the environment
variable ``GARNN_PURE_PYTHON`` to a non-empty value other than "0" forces
the numpy fallback.  ``BACKEND`` records which one is active.
"""

import os

from . import _reference

if os.environ.get("GARNN_PURE_PYTHON", "0") not in ("", "0"):
    _impl = _reference
    BACKEND = "python"
else:
    try:
        from . import _core as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _reference
        BACKEND = "python"

loglik_score = _impl.loglik_score
