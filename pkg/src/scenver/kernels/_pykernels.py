"""Pure-Python (numpy/scipy) versions of the compiled kernels."""

import numpy as np
import scipy.sparse as sp

_CHUNK_ELEMENTS = 10_000_000


def propagate_unit(indptr, indices, data, start, steps):
    n = len(indptr) - 1
    pt = sp.csr_matrix((data, indices, indptr), shape=(n, n)).T.tocsr()
    x = np.zeros(n)
    x[start] = 1.0
    for _ in range(steps):
        x = pt @ x
    return x


def simulate_block(indptr, indices, cdf, states, uniforms, error_index):
    # Inverse-CDF selection: first entry of the row with u < cdf, clamped to the
    # row's last entry.  Rows are padded to a common width with +inf so that
    # "count of entries with u >= cdf" is the offset inside the row.
    n = len(indptr) - 1
    counts = np.diff(indptr)
    width = int(counts.max()) if n else 1
    pad = np.full((n, width), np.inf)
    rows = np.repeat(np.arange(n), counts)
    offs = np.arange(len(indices)) - np.repeat(indptr[:-1], counts)
    inner = offs < np.repeat(counts - 1, counts)
    pad[rows[inner], offs[inner]] = cdf[inner]

    chunk = max(1, _CHUNK_ELEMENTS // width)
    for lo in range(0, len(states), chunk):
        s = states[lo:lo + chunk]
        u = uniforms[lo:lo + chunk]
        for t in range(u.shape[1]):
            live = s != error_index
            if not live.any():
                break
            idx = s[live]
            k = (u[live, t][:, None] >= pad[idx]).sum(axis=1)
            s[live] = indices[indptr[idx] + k]
        states[lo:lo + chunk] = s
