"""Kernel backend selection.

The compiled extension is used when importable; the pure-Python twin
otherwise.  ``CIRSQRT_KERNELS=python`` forces the fallback (used by the
benchmark and the backend-equivalence tests); ``=cython`` demands the
extension and fails loudly when it is missing.
"""
from __future__ import annotations

import os

from . import _ref

_choice = os.environ.get("CIRSQRT_KERNELS", "auto").lower()

if _choice == "python":
    _impl = _ref
    BACKEND = "python"
elif _choice == "cython":
    from . import _fast as _impl  # noqa: F401

    BACKEND = "cython"
else:
    try:
        from . import _fast as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _ref
        BACKEND = "python"

euler_full_truncation = _impl.euler_full_truncation
skorokhod_rou = _impl.skorokhod_rou

__all__ = ["BACKEND", "euler_full_truncation", "skorokhod_rou"]
