"""Walker kernel dispatch: compiled extension when available, NumPy twin
otherwise.  Both produce bitwise-identical output; the benchmark script
under benchmarks/ compares their throughput."""

import numpy as np

from . import _walk_py
from .chain import PrependChain, build_prepend_chain

try:
    from . import _walk_cy
    HAVE_COMPILED = True
except ImportError:
    _walk_cy = None
    HAVE_COMPILED = False

BACKEND = "compiled" if HAVE_COMPILED else "python"


def walk(chain, u, n_steps, trials, seed, checkpoints, backend=None, **kw):
    """Run the prepend walker; see _walk_py.walk for the contract."""
    checkpoints = np.asarray(sorted(checkpoints), dtype=np.int64)
    if len(checkpoints) == 0 or checkpoints[-1] > n_steps or checkpoints[0] < 1:
        raise ValueError("checkpoints must lie in [1, n_steps]")
    impl = _resolve(backend)
    return impl.walk(chain, np.asarray(u, dtype=float), int(n_steps),
                     int(trials), int(seed), checkpoints, **kw)


def _resolve(backend):
    if backend in (None, "auto"):
        return _walk_cy if HAVE_COMPILED else _walk_py
    if backend == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled kernel is not available")
        return _walk_cy
    if backend == "python":
        return _walk_py
    raise ValueError(f"unknown backend {backend!r}")


__all__ = ["walk", "build_prepend_chain", "PrependChain", "BACKEND",
           "HAVE_COMPILED"]
