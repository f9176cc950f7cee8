"""Hot kernels with a compiled implementation and a pure-Python fallback.

The compiled module is used when it was built and ``SCENVER_PURE_PYTHON`` is
unset.  ``BACKEND`` names the implementation in use.
"""

import os

import numpy as np
import scipy.sparse as sp

from . import _pykernels

try:
    if os.environ.get("SCENVER_PURE_PYTHON"):
        raise ImportError("pure-Python kernels requested")
    from . import _ckernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"


def csr_arrays(m):
    """``(indptr, indices, data)`` of a CSR matrix as contiguous int64/float64."""
    m = sp.csr_matrix(m)
    m.sum_duplicates()
    m.sort_indices()
    return (
        np.ascontiguousarray(m.indptr, dtype=np.int64),
        np.ascontiguousarray(m.indices, dtype=np.int64),
        np.ascontiguousarray(m.data, dtype=np.float64),
    )


def row_cdf(indptr, data):
    """Cumulative sums of ``data`` restarted at every row boundary."""
    counts = np.diff(indptr)
    n = len(counts)
    width = int(counts.max()) if n else 0
    cdf = np.empty(len(data))
    if n * width <= 50_000_000:
        rows = np.repeat(np.arange(n), counts)
        offs = np.arange(len(data)) - np.repeat(indptr[:-1], counts)
        pad = np.zeros((n, width))
        pad[rows, offs] = data
        cdf[:] = np.cumsum(pad, axis=1)[rows, offs]
    else:
        for i in range(n):
            lo, hi = indptr[i], indptr[i + 1]
            cdf[lo:hi] = np.cumsum(data[lo:hi])
    return cdf


def propagate_unit(indptr, indices, data, start, steps, impl=None):
    """Row ``start`` of ``P**steps`` for the CSR matrix ``P`` (dense, length n)."""
    return (impl or _impl).propagate_unit(indptr, indices, data, int(start), int(steps))


def simulate_block(indptr, indices, cdf, states, uniforms, error_index, impl=None):
    """Advance every trajectory in ``states`` (in place) by ``uniforms.shape[1]`` steps.

    Row ``r`` of ``uniforms`` holds the draws for trajectory ``r``; absorbed
    trajectories ignore their remaining draws, so results do not depend on
    which implementation ran.
    """
    (impl or _impl).simulate_block(
        indptr, indices, cdf, states, np.ascontiguousarray(uniforms, dtype=np.float64), int(error_index)
    )
