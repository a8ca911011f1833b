"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback. Set ``SECMUX_PURE_PYTHON=1`` to force the fallback.
"""

import os

from secmux import _fallback

if os.environ.get("SECMUX_PURE_PYTHON"):
    _impl = _fallback
else:
    try:
        from secmux import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _fallback

BACKEND = "fallback" if _impl is _fallback else "compiled"

invertible_mask = _impl.invertible_mask
pair_collision_counts = _impl.pair_collision_counts
scan_information = _impl.scan_information


def available_backends():
    """Return the kernel modules importable in this environment, by name."""
    found = {"fallback": _fallback}
    try:
        from secmux import _kernels
    except ImportError:
        pass
    else:
        found["compiled"] = _kernels
    return found
