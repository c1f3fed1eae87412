"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the NumPy
fallback is used.  Setting ``RGWALK_PURE_PYTHON=1`` forces the fallback.
Both backends expose ``evolve_modes``, ``jet_means`` and ``step_density``
with identical contracts and C-contiguous complex128 arguments.
"""

import os

from . import _fallback

try:
    if os.environ.get("RGWALK_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("fallback forced by RGWALK_PURE_PYTHON")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKEND = "cython" if _compiled is not None else "numpy"
_impl = _compiled if _compiled is not None else _fallback


def available_backends():
    names = ["numpy"]
    if _compiled is not None:
        names.append("cython")
    return names


def get_backend(name=None):
    """Return the kernel module for ``name`` (default: the active one)."""
    if name is None:
        return _impl
    if name == "numpy":
        return _fallback
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def evolve_modes(R, v, steps, backend=None):
    return get_backend(backend).evolve_modes(R, v, int(steps))


def jet_means(D, v, steps, backend=None):
    return get_backend(backend).jet_means(D, v, int(steps))


def step_density(rho, Q, out, backend=None):
    return get_backend(backend).step_density(rho, Q, out)
