"""Term orderings and the rational feasibility check."""
import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import C, T, V
from pacqe.formula import TRUE, And, Lt, Not, evaluate_qf
from pacqe.orderings import (
    EQ,
    LT,
    Ordering,
    brute_force_orderings,
    enumerate_orderings,
    feasible_rational,
    ordering_formula,
)
from pacqe.terms import ZERO, LinearTerm

X, Y = V("x"), V("y")


@pytest.mark.parametrize("strict, equal, expected", [
    ([X - Y, Y - X], [], False),
    ([X, -X - 1], [], True),
    ([Y - X], [X - Y], False),
    ([X - Y, Y - V("z"), V("z") - X], [], False),
    ([T((2, "x"), const=-1), T((-2, "x"))], [], True),
    ([C(0)], [], False),
    ([C(-1)], [C(0)], True),
    ([], [C(3)], False),
])
def test_feasible_rational(strict, equal, expected):
    assert feasible_rational(strict, equal) is expected


def test_feasible_needs_rationals():
    # 0 < 2x < 1 has no integer solution but x = 1/4 works
    assert feasible_rational([T((-2, "x")), T((2, "x"), const=-1)])


def _weak_orders(terms):
    return {o.classes for o in brute_force_orderings(terms)}


def test_two_terms():
    os = enumerate_orderings({X, ZERO})
    assert [str(o) for o in os] == ["x < 0", "0 = x", "0 < x"]


def test_three_terms_two_vars():
    assert len(enumerate_orderings({X, Y, ZERO}, d=2)) == 13


def test_shifted_terms():
    os = enumerate_orderings({X, X + 1, ZERO}, d=1)
    assert len(os) == 5
    shapes = set()
    for o in os:
        parts = []
        for cls in o.classes:
            parts.append("=".join(str(t) for t in cls))
        shapes.add(" < ".join(parts))
    assert shapes == {"0 < x < x + 1", "0=x < x + 1", "x < 0 < x + 1", "x < 0=x + 1", "x < x + 1 < 0"}


def test_ordering_formula_lt():
    o = Ordering(((X,), (ZERO,)))
    assert ordering_formula(o) == Lt(X)


def test_ordering_formula_eq():
    o = Ordering(((X, Y),))
    assert ordering_formula(o) == And((Not(Lt(X - Y)), Not(Lt(Y - X))))
    assert o.rels == (EQ,)


def test_ordering_formula_single():
    assert ordering_formula(Ordering(((X,),))) == TRUE


def test_empty_terms_rejected():
    with pytest.raises(ValueError):
        enumerate_orderings([])


def _random_terms(rng, n, d):
    names = ("x", "y")[:d]
    out = {ZERO}
    while len(out) < n:
        t = LinearTerm([(v, rng.randint(-2, 2)) for v in names], rng.randint(-3, 3))
        out.add(t)
    return sorted(out, key=LinearTerm.sort_key)


CASES = [(n, d, seed) for n in (2, 3, 4) for d in (1, 2) for seed in range(6)]


@pytest.mark.parametrize("n, d, seed", CASES)
def test_matches_brute_force(n, d, seed):
    terms = _random_terms(random.Random(f"{n}:{d}:{seed}"), n, d)
    got = [o.classes for o in enumerate_orderings(terms, d)]
    assert len(got) == len(set(got))
    assert set(got) == _weak_orders(terms)


@pytest.mark.parametrize("n, d, seed", [(n, d, s) for n in (2, 3, 4, 5) for d in (1, 2) for s in range(4)])
def test_exactly_one_ordering_everywhere(n, d, seed):
    terms = _random_terms(random.Random(f"cover:{n}:{d}:{seed}"), n, d)
    forms = [ordering_formula(o) for o in enumerate_orderings(terms, d)]
    assert len(forms) <= 4 * n ** (2 * d)
    names = ("x", "y")[:d]
    for pt in itertools.product(range(-20, 21), repeat=d):
        nu = dict(zip(names, pt))
        assert sum(evaluate_qf(f, nu) for f in forms) == 1, nu


@given(st.integers(0, 10**6), st.integers(2, 5), st.integers(1, 2))
@settings(max_examples=40, deadline=None)
def test_envelope_and_determinism(seed, n, d):
    rng = random.Random(seed)
    terms = _random_terms(rng, n, d)
    first = enumerate_orderings(terms, d)
    assert len(first) <= 4 * n ** (2 * d)
    for _ in range(3):
        shuffled = list(terms)
        rng.shuffle(shuffled)
        assert enumerate_orderings(shuffled, d) == first
        assert enumerate_orderings(set(shuffled), d) == first


def test_constraints_round_trip():
    for o in enumerate_orderings({X, Y, X - Y + 1, ZERO}):
        assert feasible_rational(o.constraints())
        assert len(o.rels) == len(o.terms) - 1
        assert all(r in (LT, EQ) for r in o.rels)
