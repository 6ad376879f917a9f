"""Backend selection for the trajectory kernel.

The compiled Cython extension is used when it was built; otherwise the numpy
fallback is used.  Both expose ``propagate`` with the same signature.
"""

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _fallback.propagate}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled.propagate

BACKEND = "compiled" if _compiled is not None else "python"


def get_propagate(backend: str | None = None):
    name = backend or BACKEND
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {sorted(BACKENDS)}") from None


def propagate(x0, y0, z0, uniforms, normals, dt_over_tau, keep_path=False, backend=None):
    return get_propagate(backend)(x0, y0, z0, uniforms, normals, dt_over_tau, keep_path)
