import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenver.analysis import (
    ERROR_BOUND,
    HoareAssertion,
    accelerate,
    acceleration_bound,
    backward_weakest_precondition,
    check_assertion,
    eps_grid,
    find_invariant,
    forward_worst_case,
    interleaving_profile,
    parse_eps_grid,
    point_distribution_error_map,
    rule1_compose,
    sequential_rule,
    trivial_epsilon,
    worst_case_interleaving,
)
from scenver.errors import BudgetExceeded, PremiseFailed, VacuousPrecondition
from scenver.linprog import AffinePredicate
from scenver.summary import Summary, compose, summarize

from oracles import normalized, random_chain


def random_summary(rng, n, h=None, error_weight=1.0):
    return summarize(random_chain(rng, n, error_weight=error_weight), h or int(rng.integers(1, 4)))


def sample_simplex(rng, n, size):
    return rng.dirichlet(np.ones(n), size=size)


class TestForwardBackward:
    def test_box(self, c, box):
        value, witness = forward_worst_case(c, box)
        assert value == pytest.approx(0.17, abs=1e-12)
        assert np.allclose(witness, [0.7, 0.3])

    def test_point_precondition(self, c):
        unit = AffinePredicate((([0.0, 1.0], 0.0),))
        assert forward_worst_case(c, unit)[0] == pytest.approx(0.2)

    def test_identity(self, box):
        assert forward_worst_case(Summary.identity(2), box)[0] == 0.0

    def test_vacuous(self, c):
        with pytest.raises(VacuousPrecondition):
            forward_worst_case(c, AffinePredicate((([1.0, 1.0], 0.5),)))

    def test_weakest_precondition(self, c):
        wp = backward_weakest_precondition(c, 0.15)
        (a, theta), = wp.constraints
        assert np.array_equal(a, [0.2, 0.1]) and theta == 0.15
        assert backward_weakest_precondition(c, 1.0).holds([1.0, 0.0])
        zero = backward_weakest_precondition(Summary(np.eye(2) * 0.5, [0.0, 0.5]), 0.0)
        assert zero.holds([1.0, 0.0]) and not zero.holds([0.5, 0.5])

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 2**31), st.floats(0.0, 1.0))
    def test_weakest_is_weakest(self, n, seed, frac):
        rng = np.random.default_rng(seed)
        c = random_summary(rng, n)
        eps = frac * float(c.b.max())
        wp = backward_weakest_precondition(c, eps)
        if float(c.b.min()) <= eps:
            assert forward_worst_case(c, wp)[0] == pytest.approx(eps, abs=1e-7)
        for x in sample_simplex(rng, n, 200):
            assert wp.holds(x, 0.0) == (x @ c.b <= eps)

    def test_point_map(self, c):
        assert point_distribution_error_map(c) == pytest.approx({"s1": 0.2, "s2": 0.1})
        assert point_distribution_error_map(compose(c, c)) == pytest.approx({"s1": 0.34, "s2": 0.21})
        assert set(point_distribution_error_map(Summary.identity(2)).values()) == {0.0}


class TestCheckAssertion:
    def test_holds_at_017(self, c, box):
        v = check_assertion(HoareAssertion(box, c, box, 0.17))
        assert v.holds and not v.vacuous

    def test_fails_at_015(self, c, box):
        v = check_assertion(HoareAssertion(box, c, box, 0.15))
        assert not v.holds
        assert v.violated_obligation == ERROR_BOUND
        assert np.allclose(v.counterexample, [0.7, 0.3])
        assert v.value == pytest.approx(0.17, abs=1e-9)

    def test_postcondition_by_direct_image(self, c, box):
        # Oracle: push a fine grid of the feasible segment through A and normalize.
        xs = np.linspace(0.3, 0.7, 4001)
        imgs = np.array([normalized(np.array([t, 1 - t]) @ c.a) for t in xs])
        assert imgs.max() <= 0.7
        assert check_assertion(HoareAssertion(box, c, box, 0.2)).holds

    def test_postcondition_failure(self, c, box):
        tight = AffinePredicate((([1.0, 0.0], 0.4),))
        v = check_assertion(HoareAssertion(box, c, tight, 1.0))
        assert not v.holds and v.violated_obligation == "Postcondition"
        img = normalized(v.counterexample @ c.a)
        assert img[0] > 0.4

    def test_trivial_bound_holds(self, rng):
        for _ in range(10):
            c = random_summary(rng, int(rng.integers(1, 6)))
            top = AffinePredicate.top()
            assert check_assertion(HoareAssertion(top, c, top, float(c.b.max()))).holds

    def test_vacuous(self, c):
        empty = AffinePredicate((([1.0, 1.0], 0.5),))
        v = check_assertion(HoareAssertion(empty, c, AffinePredicate.top(), 0.0))
        assert v.holds and v.vacuous

    @settings(max_examples=25, deadline=None)
    @given(st.integers(2, 4), st.integers(0, 2**31), st.floats(0.0, 1.0))
    def test_sampling_oracle(self, n, seed, eps):
        rng = np.random.default_rng(seed)
        c = random_summary(rng, n, error_weight=0.3)
        pre = AffinePredicate(((rng.uniform(size=n), 0.6),))
        post = AffinePredicate(((rng.uniform(size=n), rng.uniform(0.3, 0.9)),))
        v = check_assertion(HoareAssertion(pre, c, post, eps))
        if v.vacuous:
            return
        if v.holds:
            xs = sample_simplex(rng, n, 2000)
            xs = xs[[pre.holds(x, 0.0) for x in xs]]
            for x in xs:
                assert x @ c.b <= eps + 1e-9
                y = x @ c.dense_a()
                if y.sum() > 1e-9:
                    assert post.holds(normalized(y), 1e-7)
        else:
            x = v.counterexample
            assert pre.holds(x, 1e-7)
            if v.violated_obligation == ERROR_BOUND:
                assert x @ c.b > eps
            else:
                a, theta = post.constraints[v.obligation_index]
                y = x @ c.dense_a()
                assert y.sum() <= 1e-12 or normalized(y) @ a > theta - 1e-9


class TestRules:
    def test_rule1(self):
        assert rule1_compose(0.2, 0.1) == pytest.approx(0.28)
        assert rule1_compose(0.0, 0.37) == pytest.approx(0.37)
        assert rule1_compose(1.0, 0.4) == 1.0

    def test_acceleration_bound(self):
        assert acceleration_bound(0.01, 10) == pytest.approx(1 - 0.99**10)
        assert acceleration_bound(0.01, 10) == pytest.approx(0.0956, abs=1e-4)
        assert acceleration_bound(0.0, 1000) == 0.0

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.0, 1.0), st.integers(0, 60))
    def test_bound_monotone_and_capped(self, eps, k):
        b = acceleration_bound(eps, k)
        assert 0.0 <= b <= 1.0
        assert acceleration_bound(eps, k + 1) >= b

    def test_sequential_rule(self, c, box):
        comp = sequential_rule(HoareAssertion(box, c, box, 0.17), HoareAssertion(box, c, box, 0.17))
        assert comp.epsilon == pytest.approx(rule1_compose(0.17, 0.17))
        assert forward_worst_case(comp.summary, box)[0] <= comp.epsilon + 1e-9
        with pytest.raises(PremiseFailed) as exc:
            sequential_rule(HoareAssertion(box, c, box, 0.15), HoareAssertion(box, c, box, 0.17))
        assert exc.value.index == 0

    def test_rule1_soundness_random(self, rng):
        for _ in range(30):
            n = int(rng.integers(2, 5))
            c1, c2 = random_summary(rng, n), random_summary(rng, n)
            phi = AffinePredicate.top()
            e1, e2 = float(c1.b.max()), float(c2.b.max())
            comp = sequential_rule(HoareAssertion(phi, c1, phi, e1), HoareAssertion(phi, c2, phi, e2))
            assert forward_worst_case(comp.summary, phi)[0] <= rule1_compose(e1, e2) + 1e-9

    def test_accelerate_single(self, c):
        found = find_invariant([c])
        phi, eps = found
        cert = accelerate([c], phi, eps)
        for k in range(1, 5):
            ck = c
            for _ in range(k - 1):
                ck = compose(ck, c)
            assert forward_worst_case(ck, phi)[0] <= cert.bound(k) + 1e-9

    def test_accelerate_zero_error(self):
        cert = accelerate([Summary.identity(3)], AffinePredicate.top(), 0.0)
        assert all(b == 0.0 for _, b in cert.bound_table(64))

    def test_premise_failure(self, c, box):
        with pytest.raises(PremiseFailed) as exc:
            accelerate([Summary.identity(2), c], box, 0.15)
        assert exc.value.index == 1
        assert np.allclose(exc.value.counterexample, [0.7, 0.3])

    def test_trivial_epsilon(self, c):
        assert trivial_epsilon([c]) == pytest.approx(0.2)
        assert trivial_epsilon([Summary.identity(2)]) == 0.0
        s1 = Summary(np.diag([0.7, 0.9]), [0.3, 0.1])
        s2 = Summary(np.diag([0.95, 0.75]), [0.05, 0.25])
        assert trivial_epsilon([s1, s2]) == pytest.approx(0.3)

    def test_trivial_premise_always_succeeds(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 6))
            sums = [random_summary(rng, n) for _ in range(int(rng.integers(1, 4)))]
            accelerate(sums, AffinePredicate.top(), trivial_epsilon(sums))


class TestInvariantSearch:
    def test_grid(self):
        g = eps_grid()
        assert len(g) == 100 and g[0] == 0.0 and g[-1] == 0.99 and g[17] == 0.17
        assert parse_eps_grid("0:0.1:0.05") == [0.0, 0.05, 0.1]
        assert parse_eps_grid("0.3") == [0.3]
        with pytest.raises(ValueError):
            parse_eps_grid("1:2")

    def test_zero_error(self):
        phi, eps = find_invariant([Summary.identity(3)])
        assert eps == 0.0

    def test_first_passing(self, c):
        phi, eps = find_invariant([c])
        assert eps == 0.15

    def test_vacuous_grid(self, rng):
        c = random_summary(rng, 3)
        assert find_invariant([c], [1.0])[1] == 1.0

    def test_exhausted(self, c):
        assert find_invariant([c], [0.12, 0.13]) is None


class TestInterleaving:
    def test_single_summary(self, c, box):
        prof = interleaving_profile([c], box, 3)
        ck = c
        for k in range(3):
            assert prof[k][0] == pytest.approx(forward_worst_case(ck, box)[0], abs=1e-12)
            ck = compose(ck, c)
        assert [round(v, 6) for v, _ in prof] == [0.17, 0.301, 0.4067]

    def test_k1_is_max(self, rng, box):
        sums = [random_summary(rng, 2) for _ in range(3)]
        value, seq = worst_case_interleaving(sums, box, 1)
        assert value == pytest.approx(max(forward_worst_case(s, box)[0] for s in sums))
        assert seq == (int(np.argmax([forward_worst_case(s, box)[0] for s in sums])),)

    def test_matches_profile(self, rng):
        sums = [random_summary(rng, 3) for _ in range(2)]
        top = AffinePredicate.top()
        prof = interleaving_profile(sums, top, 4)
        for k in range(1, 5):
            value, seq = worst_case_interleaving(sums, top, k)
            assert value == pytest.approx(prof[k - 1][0], abs=1e-12)
            assert seq == prof[k - 1][1]

    def test_ties_pick_smallest_sequence(self):
        s = Summary.identity(2)
        assert worst_case_interleaving([s, s], AffinePredicate.top(), 3) == (0.0, (0, 0, 0))

    def test_budget(self, c):
        with pytest.raises(BudgetExceeded):
            worst_case_interleaving([c] * 10, AffinePredicate.top(), 7)
