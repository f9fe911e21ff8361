"""Hot-loop kernels with a compiled fast path and a NumPy fallback.

The compiled extension is preferred when importable; set the environment
variable ``ROUGHPATHS_BACKEND=numpy`` (or ``c``) to force a backend.  Both
implement identical contracts, documented in ``_ref``.
"""

import os

from . import _ref

_requested = os.environ.get("ROUGHPATHS_BACKEND", "").lower()

_impl = None
if _requested in ("", "c"):
    try:
        from . import _fast as _impl  # noqa: F401
    except ImportError:
        _impl = None
        if _requested == "c":
            raise ImportError(
                "ROUGHPATHS_BACKEND=c requested but the compiled kernels are "
                "not available; build them with `python setup.py build_ext --inplace`"
            )
if _impl is None:
    _impl = _ref

BACKEND = _impl.BACKEND

pair_holder_max = _impl.pair_holder_max
level2_pair_max = _impl.level2_pair_max
level2_diff_pair_max = _impl.level2_diff_pair_max
remainder_pair_max = _impl.remainder_pair_max
chen_defect_max_rp = _impl.chen_defect_max_rp
chen_defect_max_raw = _impl.chen_defect_max_raw


def backend_name():
    """Name of the active kernel backend: 'c' or 'numpy'."""
    return BACKEND


def available_backends():
    names = ["numpy"]
    try:
        from . import _fast  # noqa: F401

        names.insert(0, "c")
    except ImportError:
        pass
    return names
