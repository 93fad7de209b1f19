"""Propagation kernel with compiled and pure-Python implementations.

The compiled Cython extension is preferred when present; the pure-Python
fallback produces the same numbers (to rounding) at roughly two orders of
magnitude lower speed. Set ``PHONODOT_KERNEL=python`` or
``PHONODOT_KERNEL=compiled`` to force a backend; forcing ``compiled`` when
the extension is missing raises ImportError.
"""

import os

from . import _fallback

_requested = os.environ.get("PHONODOT_KERNEL", "").strip().lower()

if _requested == "python":
    _impl = _fallback
elif _requested == "compiled":
    from . import _core as _impl
elif _requested in ("", "auto"):
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _fallback
else:
    raise ImportError(f"unknown PHONODOT_KERNEL value {_requested!r}; "
                      "use 'compiled', 'python', or 'auto'")

propagate_kernel = _impl.propagate_kernel
BACKEND = _impl.BACKEND


def available_backends():
    """Names of importable kernel backends."""
    names = ["python"]
    try:
        from . import _core  # noqa: F401
        names.insert(0, "compiled")
    except ImportError:
        pass
    return names


def get_kernel(name):
    """Return the ``propagate_kernel`` of a specific backend."""
    if name == "python":
        return _fallback.propagate_kernel
    if name == "compiled":
        from . import _core
        return _core.propagate_kernel
    raise ValueError(f"unknown backend {name!r}")
