"""Kernel backend selection.

The compiled extension is preferred; the pure-Python kernels are the
fallback when the extension is missing (source checkout, unsupported
platform) or when ``DSIG_PURE_PYTHON=1`` is set. Both expose the same
functions and produce identical bytes.
"""

from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("DSIG_PURE_PYTHON"):
    kernels = _pykernels
else:
    try:
        from . import _ckernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _pykernels

pykernels = _pykernels


def kernel_name() -> str:
    return "compiled" if kernels.IS_COMPILED else "pure-python"
