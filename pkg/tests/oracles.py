"""Independent reference computations used by the tests.

Nothing here calls into the package's summary or LP code: paths are
enumerated explicitly, LP optima come from vertex enumeration.
"""

import itertools

import numpy as np
import scipy.sparse as sp

from scenver.core import ClosedLoopDtmc, StateSpace


def random_chain(rng, n, max_degree=None, error_weight=1.0):
    """Random chain over ``n`` non-error states plus the error state (last)."""
    size = n + 1
    p = np.zeros((size, size))
    for i in range(n):
        deg = size if max_degree is None else int(rng.integers(1, max_degree + 1))
        cols = rng.choice(size, size=min(deg, size), replace=False)
        w = rng.dirichlet(np.ones(len(cols)))
        if error_weight != 1.0 and n in cols:
            w[cols == n] *= error_weight
            w /= w.sum()
        p[i, cols] = w
    p[n, n] = 1.0
    space = StateSpace.from_safe([f"s{i}" for i in range(n)], "err")
    return ClosedLoopDtmc(space, sp.csr_matrix(p))


def path_error_probability(p, start, horizon):
    """Probability of reaching the last (error) state within ``horizon`` steps.

    Enumerates every path explicitly: the frontier keeps one entry per
    surviving path prefix (states are never merged).
    """
    p = np.asarray(p)
    err = p.shape[0] - 1
    states = np.array([start])
    probs = np.array([1.0])
    hit = 0.0
    for _ in range(horizon):
        nxt = p[states]  # (paths, size)
        hit += float((probs * nxt[:, err]).sum())
        cols = np.arange(err)
        w = probs[:, None] * nxt[:, :err]
        keep = w > 0
        states = np.broadcast_to(cols, w.shape)[keep]
        probs = w[keep]
        if states.size == 0:
            break
    return hit


def path_survivor_distribution(p, start, horizon):
    """Mass on each non-error state after ``horizon`` steps, by path enumeration."""
    p = np.asarray(p)
    err = p.shape[0] - 1
    states = np.array([start])
    probs = np.array([1.0])
    for _ in range(horizon):
        w = probs[:, None] * p[states][:, :err]
        keep = w > 0
        states = np.broadcast_to(np.arange(err), w.shape)[keep]
        probs = w[keep]
    out = np.zeros(err)
    np.add.at(out, states, probs)
    return out


def simplex_vertices(g, h, n, tol=1e-9):
    """Vertices of ``{x >= 0, sum x = 1, g x <= h}`` by brute-force enumeration."""
    g = np.zeros((0, n)) if g is None or len(g) == 0 else np.atleast_2d(np.asarray(g, float))
    h = np.zeros(0) if h is None or len(h) == 0 else np.asarray(h, float)
    rows = [(g[i], h[i]) for i in range(len(h))] + [(-np.eye(n)[j], 0.0) for j in range(n)]
    verts = []
    for combo in itertools.combinations(range(len(rows)), n - 1):
        m = np.vstack([np.ones(n)] + [rows[i][0] for i in combo])
        rhs = np.array([1.0] + [rows[i][1] for i in combo])
        if abs(np.linalg.det(m)) < 1e-12:
            continue
        x = np.linalg.solve(m, rhs)
        if np.all(x >= -tol) and (len(h) == 0 or np.all(g @ x <= h + tol)):
            verts.append(x)
    return verts


def vertex_max(c, g, h, n):
    """``max c . x`` over the polytope, or ``None`` when it is empty."""
    verts = simplex_vertices(g, h, n)
    if not verts:
        return None
    return max(float(np.dot(c, v)) for v in verts)


def normalized(x):
    return np.asarray(x) / np.sum(x)
