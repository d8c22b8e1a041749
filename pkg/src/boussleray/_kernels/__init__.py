"""Element kernels, compiled when available.

Set ``BOUSSLERAY_KERNELS=numpy`` to force the pure-Python fallback, or
``cython`` to fail loudly if the extension is missing.
"""

import os

from . import _reference

_choice = os.environ.get("BOUSSLERAY_KERNELS", "auto").lower()

if _choice == "numpy":
    _impl = _reference
else:
    try:
        from . import _fast as _impl
    except ImportError:
        if _choice == "cython":
            raise
        _impl = _reference

BACKEND = _impl.BACKEND
element_mass = _impl.element_mass
element_stiffness = _impl.element_stiffness
element_convection = _impl.element_convection
element_mixed = _impl.element_mixed
element_load = _impl.element_load
scatter_add = _impl.scatter_add
evaluate_local = _impl.evaluate_local


def get_backend(name: str):
    """Return the kernel module ``name`` ('numpy' or 'cython')."""
    if name == "numpy":
        return _reference
    if name == "cython":
        from . import _fast

        return _fast
    raise ValueError(name)
