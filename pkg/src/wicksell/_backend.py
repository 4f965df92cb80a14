"""Select the compiled kernels when available, otherwise the numpy fallback.

Set ``WICKSELL_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pycore

COMPILED = False
if os.environ.get("WICKSELL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _core as _impl

        COMPILED = True
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _pycore
else:
    _impl = _pycore

tail_sqrt_sums = _impl.tail_sqrt_sums
upper_hull = _impl.upper_hull

__all__ = ["COMPILED", "tail_sqrt_sums", "upper_hull"]
