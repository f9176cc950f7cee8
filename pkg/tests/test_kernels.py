import numpy as np
import pytest

from scenver import kernels
from scenver.kernels import _pykernels
from scenver.simulator import estimate_error_probability
from scenver.summary import Scenario, summarize, summarize_rows

from oracles import random_chain

try:
    from scenver.kernels import _ckernels
except ImportError:
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")


def test_row_cdf_restarts_per_row():
    indptr = np.array([0, 2, 3, 6])
    data = np.array([0.25, 0.75, 1.0, 0.2, 0.3, 0.5])
    assert np.allclose(kernels.row_cdf(indptr, data), [0.25, 1.0, 1.0, 0.2, 0.5, 1.0])


@pytest.mark.parametrize("impl", [_pykernels, pytest.param(_ckernels, marks=needs_ext)])
def test_propagate_matches_matrix_power(rng, impl):
    m = random_chain(rng, 8, max_degree=4)
    indptr, indices, data = kernels.csr_arrays(m.transitions)
    p = m.dense()
    for start in range(8):
        v = kernels.propagate_unit(indptr, indices, data, start, 5, impl=impl)
        assert np.allclose(v, np.linalg.matrix_power(p, 5)[start], atol=1e-12)


@needs_ext
def test_simulation_backends_identical(rng):
    m = random_chain(rng, 30, max_degree=5, error_weight=0.1)
    chains = {"e": m}
    x = rng.dirichlet(np.ones(30))
    a = estimate_error_probability([Scenario("e", 7)], chains, x, 20_000, seed=9, impl=_pykernels)
    b = estimate_error_probability([Scenario("e", 7)], chains, x, 20_000, seed=9, impl=_ckernels)
    assert a == b


@needs_ext
def test_block_states_identical(rng):
    m = random_chain(rng, 50, max_degree=6, error_weight=0.2)
    indptr, indices, data = kernels.csr_arrays(m.transitions)
    cdf = kernels.row_cdf(indptr, data)
    start = rng.integers(0, 50, size=5000).astype(np.int64)
    u = rng.random((5000, 12))
    s1, s2 = start.copy(), start.copy()
    kernels.simulate_block(indptr, indices, cdf, s1, u, m.error_index, impl=_pykernels)
    kernels.simulate_block(indptr, indices, cdf, s2, u, m.error_index, impl=_ckernels)
    assert np.array_equal(s1, s2)


def test_inverse_cdf_selection():
    # Row 0 goes to 1 w.p. 0.25 and to 2 w.p. 0.75; u < 0.25 picks state 1.
    indptr = np.array([0, 2, 3, 4], dtype=np.int64)
    indices = np.array([1, 2, 1, 2], dtype=np.int64)
    data = np.array([0.25, 0.75, 1.0, 1.0])
    cdf = kernels.row_cdf(indptr, data)
    for impl in filter(None, (_pykernels, _ckernels)):
        s = np.zeros(3, dtype=np.int64)
        kernels.simulate_block(indptr, indices, cdf, s, np.array([[0.1], [0.25], [0.9999]]), 2, impl=impl)
        assert list(s) == [1, 2, 2]


def test_rows_mode_matches_products(rng):
    m = random_chain(rng, 10, max_degree=3)
    a, b = summarize_rows(m, 6, range(10))
    ref = summarize(m, 6)
    assert np.allclose(a, ref.a, atol=1e-12) and np.allclose(b, ref.b, atol=1e-12)
