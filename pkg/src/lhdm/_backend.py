"""Select the kernel implementation at import time.

The compiled extension is used when it was built; ``LHDM_BACKEND=python``
forces the NumPy fallback (``compiled`` makes a missing build an error).
"""
import os

from . import _kernels as python_kernels

try:
    from . import _ckernels as compiled_kernels
except ImportError:  # extension not built
    compiled_kernels = None

_choice = os.environ.get("LHDM_BACKEND", "auto").lower()
if _choice == "python":
    kernels = python_kernels
elif _choice == "compiled":
    if compiled_kernels is None:
        raise ImportError("LHDM_BACKEND=compiled but lhdm._ckernels is not built")
    kernels = compiled_kernels
else:
    kernels = compiled_kernels if compiled_kernels is not None else python_kernels


def available():
    """Names of the kernel backends importable in this environment."""
    names = ["python"]
    if compiled_kernels is not None:
        names.append("compiled")
    return names


def get(name=None):
    if name is None:
        return kernels
    if name == "python":
        return python_kernels
    if name == "compiled":
        if compiled_kernels is None:
            raise ImportError("compiled kernels are not built")
        return compiled_kernels
    raise ValueError(f"unknown backend {name!r}")
