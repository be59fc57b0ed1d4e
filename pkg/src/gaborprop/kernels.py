"""Backend selection for the lattice reductions.

The compiled extension is used when it imports; setting
``GABORPROP_PURE_PYTHON=1`` forces the numpy implementation.
"""
import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("GABORPROP_PURE_PYTHON") != "1":
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

cone_shell_reduce = _impl.cone_shell_reduce
binned_max_sum = _impl.binned_max_sum

__all__ = ["BACKEND", "binned_max_sum", "cone_shell_reduce"]
