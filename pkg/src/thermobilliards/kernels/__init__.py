"""Hot-loop kernels: compiled extension when available, pure Python otherwise.

Both backends consume random draws through the same block protocol
(see rng.BlockDraws), so a given (seed, stream) produces bit-identical
trajectories regardless of backend.  Set THERMOBILLIARDS_PURE=1 to force
the pure-Python fallback.
"""

import os

if os.environ.get("THERMOBILLIARDS_PURE") == "1":
    from . import _pure as _impl
    BACKEND = "pure"
else:
    try:
        from . import _core as _impl
        BACKEND = "cython"
    except ImportError:
        from . import _pure as _impl
        BACKEND = "pure"

run_chain = _impl.run_chain
knudsen_transitions = _impl.knudsen_transitions
engine_run = _impl.engine_run


def get_backend(name=None):
    """Return (module, label) for the requested backend, for benchmarks."""
    if name in (None, "auto"):
        return _impl, BACKEND
    if name == "pure":
        from . import _pure
        return _pure, "pure"
    if name == "cython":
        from . import _core
        return _core, "cython"
    raise ValueError(f"unknown backend {name!r}")
