"""Hot loops, compiled when available.

The Cython extension ``_ckernels`` is used when it was built; otherwise,
or when ``HLWNET_PURE_PYTHON=1`` is set, the pure-Python ``_pykernels``
twin is used.  Both expose the same functions.
"""

import importlib
import os

MODE_EQUAL = 0
MODE_CAPPED = 1


def load_backend(name):
    """Return the kernel module for ``"cython"`` or ``"python"``."""
    if name == "python":
        return importlib.import_module("._pykernels", __name__)
    if name == "cython":
        return importlib.import_module("._ckernels", __name__)
    raise ValueError(f"unknown kernel backend {name!r}")


def available_backends():
    out = ["python"]
    try:
        load_backend("cython")
    except ImportError:
        pass
    else:
        out.insert(0, "cython")
    return out


if os.environ.get("HLWNET_PURE_PYTHON", "") not in ("", "0"):
    _impl = load_backend("python")
else:
    try:
        _impl = load_backend("cython")
    except ImportError:
        _impl = load_backend("python")

BACKEND = _impl.BACKEND
fuzzy_score = _impl.fuzzy_score
flopt = _impl.flopt
fl = _impl.fl
gt = _impl.gt
exhaustive = _impl.exhaustive
pf_value = _impl.pf_value
