import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenver.linprog import (
    AffinePredicate,
    LpStatus,
    entails,
    is_feasible,
    maximize_over_simplex,
    solve_lp,
)

from oracles import vertex_max

B = np.array([0.2, 0.1])


class TestMaximizeOverSimplex:
    def test_unconstrained(self):
        sol = maximize_over_simplex(B, AffinePredicate.top())
        assert sol.objective_value == pytest.approx(0.2)
        assert np.allclose(sol.witness, [1.0, 0.0])

    def test_box(self, box):
        sol = maximize_over_simplex(B, box)
        assert sol.objective_value == pytest.approx(0.17, abs=1e-12)
        assert np.allclose(sol.witness, [0.7, 0.3])

    def test_infeasible(self):
        sol = maximize_over_simplex(B, AffinePredicate((([1.0, 0.0], -0.1),)))
        assert sol.status is LpStatus.INFEASIBLE

    def test_duals_close_the_gap(self, box):
        g, h = box.arrays(2)
        a_ub = np.vstack([g, np.ones(2), -np.ones(2)])
        b_ub = np.concatenate([h, [1.0, -1.0]])
        sol = solve_lp(B, a_ub, b_ub)
        assert np.all(sol.duals >= -1e-12)
        assert float(b_ub @ sol.duals) == pytest.approx(sol.objective_value, abs=1e-9)

    def test_degenerate_cycling_instance(self):
        # Beale's example cycles under the textbook largest-coefficient rule.
        c = np.array([0.75, -150.0, 0.02, -6.0])
        a = np.array([[0.25, -60.0, -0.04, 9.0], [0.5, -90.0, -0.02, 3.0], [0.0, 0.0, 1.0, 0.0]])
        sol = solve_lp(c, a, [0.0, 0.0, 1.0])
        assert sol.optimal and sol.objective_value == pytest.approx(0.05)

    def test_unbounded(self):
        assert solve_lp([1.0], [[-1.0]], [0.0]).status is LpStatus.UNBOUNDED

    @settings(max_examples=80, deadline=None)
    @given(st.integers(2, 3), st.integers(0, 3), st.integers(0, 2**31))
    def test_vertex_oracle(self, n, k, seed):
        rng = np.random.default_rng(seed)
        g = rng.uniform(-1, 1, size=(k, n))
        h = rng.uniform(-0.3, 0.8, size=k)
        c = rng.uniform(-1, 1, size=n)
        pred = AffinePredicate.from_arrays(g, h) if k else AffinePredicate.top()
        sol = maximize_over_simplex(c, pred)
        ref = vertex_max(c, g, h, n)
        if ref is None:
            assert not sol.optimal
        else:
            assert sol.optimal
            assert sol.objective_value == pytest.approx(ref, abs=1e-7)
            assert pred.holds(sol.witness, 1e-7)
            assert abs(sol.witness.sum() - 1) < 1e-7 and np.all(sol.witness >= -1e-9)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 5), st.integers(0, 2**31))
    def test_adding_constraint_never_increases(self, n, seed):
        rng = np.random.default_rng(seed)
        c = rng.uniform(size=n)
        p = AffinePredicate(((rng.uniform(size=n), 0.7),))
        q = p & AffinePredicate(((rng.uniform(size=n), 0.5),))
        sp_, sq = maximize_over_simplex(c, p), maximize_over_simplex(c, q)
        if sq.optimal:
            assert sp_.optimal and sq.objective_value <= sp_.objective_value + 1e-9


class TestFeasibilityAndEntailment:
    def test_feasible(self, box):
        assert is_feasible(AffinePredicate.top(), 2)
        assert is_feasible(box)
        assert not is_feasible(AffinePredicate((([1.0, 1.0], 0.5),)))

    def test_entails(self, box):
        assert entails(box, B, 0.17)
        assert not entails(box, B, 0.15)
        assert entails(AffinePredicate((([1.0, 1.0], 0.5),)), B, -5.0)


class TestPredicate:
    def test_json_round_trip(self, box):
        p = AffinePredicate.from_json(box.to_json())
        assert np.array_equal(p.arrays(2)[0], box.arrays(2)[0])

    def test_state_keyed_forms(self):
        obj = {"constraints": [{"a": {"s2": 2.0}, "theta": 0.5}, {"indicator": ["s1"], "theta": 0.1}]}
        p = AffinePredicate.from_json(obj, ["s1", "s2"])
        g, h = p.arrays(2)
        assert np.array_equal(g, [[0.0, 2.0], [1.0, 0.0]]) and np.array_equal(h, [0.5, 0.1])
        with pytest.raises(ValueError):
            AffinePredicate.from_json({"constraints": [{"indicator": ["s9"], "theta": 0}]}, ["s1"])

    def test_holds(self, box):
        assert box.holds([0.5, 0.5]) and not box.holds([0.8, 0.2])
        assert AffinePredicate.top().holds([1.0])
