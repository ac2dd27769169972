"""Hot numeric kernels with a compiled core and a pure-numpy fallback.

The Cython extension is selected at import when present; set
ELDERAUG_PURE_PYTHON=1 to force the fallback. `BACKEND` names the active
implementation so tests and benchmarks can report it.
"""

from __future__ import annotations

import os

from elderaug.kernels import _pykernels

if os.environ.get("ELDERAUG_PURE_PYTHON") == "1":
    _impl = _pykernels
    BACKEND = "pure-python"
else:
    try:
        from elderaug.kernels import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _pykernels
        BACKEND = "pure-python"

levenshtein_matrix = _impl.levenshtein_matrix
polyphase_fir = _impl.polyphase_fir

__all__ = ["BACKEND", "levenshtein_matrix", "polyphase_fir"]
