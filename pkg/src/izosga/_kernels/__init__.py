"""Numerical kernel backends.

The compiled Cython backend (_core) is preferred when the extension was
built; otherwise the pure-numpy fallback is used.  Set IZOSGA_BACKEND=pure
or IZOSGA_BACKEND=compiled to force one; forcing "compiled" raises when the
extension is missing instead of silently degrading.
"""
import os

from . import pure as _pure

_requested = os.environ.get("IZOSGA_BACKEND", "auto").strip().lower()
if _requested not in ("auto", "", "pure", "compiled"):
    raise ImportError(
        "IZOSGA_BACKEND must be 'auto', 'pure' or 'compiled', got %r" % _requested
    )

_impl = _pure
BACKEND = "pure"
if _requested in ("auto", "", "compiled"):
    try:
        from . import _core as _compiled
    except ImportError:
        if _requested == "compiled":
            raise
    else:
        _impl = _compiled
        BACKEND = "compiled"

sumrate_and_sinr = _impl.sumrate_and_sinr
cogradient = _impl.cogradient
wmmse_sweeps = _impl.wmmse_sweeps


def backend_name() -> str:
    """Active kernel implementation, "pure" or "compiled"."""
    return BACKEND
