"""Kernel backend selection.

Two interchangeable kernel sets exist: the numpy reference implementation in
`kernels_py` and the compiled Cython overrides in `_kernels_cy` (built by
setup.py, optional). The compiled set only covers the hot primitives; anything
it does not define falls through to numpy.

Selection happens once at import: compiled if available, else numpy. The
QVTAD_KERNELS environment variable ("py" or "cy") forces a choice, and
`select_backend` switches at runtime (used by the parity tests and the
benchmark to compare both in one process).
"""

import os
import types

from . import kernels_py

try:
    from . import _kernels_cy
except ImportError:
    _kernels_cy = None

_PUBLIC = [name for name in dir(kernels_py) if not name.startswith("_") and callable(getattr(kernels_py, name))]

# Live namespace the tensor layer calls through; mutated by select_backend.
K = types.SimpleNamespace()
_current = None


def available_backends():
    names = ["py"]
    if _kernels_cy is not None:
        names.append("cy")
    return names


def backend_name():
    return _current


def select_backend(name):
    """Point the live kernel namespace at the numpy or compiled set."""
    global _current
    if name not in ("py", "cy"):
        raise ValueError(f"unknown kernel backend {name!r}")
    if name == "cy" and _kernels_cy is None:
        raise RuntimeError("compiled kernels requested but _kernels_cy is not built")
    for fname in _PUBLIC:
        fn = getattr(kernels_py, fname)
        if name == "cy" and hasattr(_kernels_cy, fname):
            fn = getattr(_kernels_cy, fname)
        setattr(K, fname, fn)
    _current = name
    return K


_forced = os.environ.get("QVTAD_KERNELS")
if _forced:
    select_backend(_forced)
else:
    select_backend("cy" if _kernels_cy is not None else "py")
