"""Formula core: desugaring, quantifier-free evaluation, substitution and parameters."""
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import C, T, V
from pacqe.errors import (
    IncompleteAssignment,
    MalformedFormula,
    SubstitutionShapeError,
    UnsupportedQuantifiedInput,
)
from pacqe.formula import (
    TRUE,
    And,
    Cmp,
    Cong,
    CountGeq,
    Exists,
    Lt,
    Mod,
    Not,
    Or,
    desugar,
    evaluate_qf,
    params_report,
    simplify_mod_constraint,
    substitute,
)
from pacqe.oracle import GenConfig, gen_qf
from pacqe.terms import LinearTerm

X, Y = V("x"), V("y")


def test_desugar_le():
    assert desugar(Cmp("le", X, Y)) == Not(Lt(Y - X))


def test_desugar_eq():
    assert desugar(Cmp("eq", X, Y)) == And((Not(Lt(X - Y)), Not(Lt(Y - X))))


def test_desugar_congruence():
    assert desugar(Cong(X + 1, Y, 3)) == Mod(T((1, "x"), (-1, "y"), const=1), 3, 0)


@pytest.mark.parametrize("op, holds", [
    ("lt", lambda a, b: a < b), ("le", lambda a, b: a <= b), ("eq", lambda a, b: a == b),
    ("ge", lambda a, b: a >= b), ("gt", lambda a, b: a > b),
])
def test_desugar_comparisons_agree(op, holds):
    f = desugar(Cmp(op, X, Y))
    for a in range(-3, 4):
        for b in range(-3, 4):
            assert evaluate_qf(f, {"x": a, "y": b}) == holds(a, b)


def test_counting_binder_must_differ():
    with pytest.raises(MalformedFormula):
        CountGeq("y", "y", Lt(Y))


@pytest.mark.parametrize("f, nu, expected", [
    (Lt(X - 3), {"x": 2}, True),
    (Mod(X, 2, 1), {"x": 7}, True),
    (And((Lt(X), Not(Lt(X)))), {"x": 5}, False),
    (Mod(X, 3, 1), {"x": -2}, True),
    (TRUE, {}, True),
    (Or(()), {}, False),
])
def test_evaluate_qf_examples(f, nu, expected):
    assert evaluate_qf(f, nu) is expected


def test_evaluate_qf_rejects_quantifiers():
    with pytest.raises(UnsupportedQuantifiedInput):
        evaluate_qf(Exists("y", Lt(Y)), {})


def test_evaluate_qf_missing_variable():
    with pytest.raises(IncompleteAssignment) as info:
        evaluate_qf(Lt(X + Y), {"x": 1})
    assert info.value.var == "y"


def test_substitute_scaled():
    f = Lt(T((2, "y"), (-1, "x")))
    assert substitute(f, V("y", 2), Y) == Lt(Y - X)


def test_substitute_constant():
    f = Lt(V("z") - 1)
    g = substitute(f, V("z"), C(5))
    assert g == Lt(C(4))
    assert evaluate_qf(g, {}) is False


def test_substitute_identity():
    f = And((Lt(X - Y), Mod(X, 3, 1)))
    assert substitute(f, X, X) is f


def test_substitute_bad_shape():
    with pytest.raises(SubstitutionShapeError):
        substitute(Lt(T((3, "y"))), V("y", 2), Y)
    with pytest.raises(SubstitutionShapeError):
        substitute(Lt(Y), Y + 1, X)


def test_params_report_example():
    f = And((Lt(T((2, "y"), (-1, "x"), const=1)), Mod(X, 3, 2)))
    rep = params_report(f)
    assert rep.lin == {T((2, "y"), (-1, "x"), const=1)}
    assert rep.hom == {T((2, "y"), (-1, "x"))}
    assert rep.mods == {1, 3}
    assert rep.norm_lin == 2


def test_params_report_true():
    rep = params_report(TRUE)
    assert rep.lin == frozenset() and rep.hom == frozenset() and rep.mods == {1}


def test_params_report_dedup():
    assert params_report(Or((Lt(X), Lt(X)))).num_lin == 1


def test_params_report_json_keys():
    keys = set(params_report(Lt(X)).to_json())
    assert {"num_lin", "norm_lin", "num_hom", "norm_hom", "mods"} <= keys


@pytest.mark.parametrize("t, q, expected", [
    (V("x", 2), 2, TRUE),
    (X, 3, Mod(X, 3, 0)),
    (X + Y, 2, Or((And((Mod(X, 2, 0), Mod(Y, 2, 0))), And((Mod(X, 2, 1), Mod(Y, 2, 1)))))),
])
def test_simplify_mod_constraint(t, q, expected):
    assert simplify_mod_constraint(t, q) == expected


@given(st.lists(st.tuples(st.sampled_from("xyzuv"), st.integers(-9, 9)), max_size=8), st.integers(-50, 50),
       st.randoms(use_true_random=False))
def test_term_canonical_under_shuffle(monos, const, rnd):
    shuffled = list(monos)
    rnd.shuffle(shuffled)
    a = LinearTerm(monos, const)
    b = LinearTerm(shuffled, const)
    assert a == b and hash(a) == hash(b)


@given(st.integers(0, 10**6), st.dictionaries(st.sampled_from("yxz"), st.integers(-20, 20), min_size=3))
@settings(max_examples=200)
def test_boolean_laws(seed, nu):
    rng = random.Random(seed)
    cfg = GenConfig(vars=3)
    f = gen_qf(cfg, rng, ("y", "x", "z"))
    g = gen_qf(cfg, rng, ("y", "x", "z"))
    assert evaluate_qf(Not(f), nu) == (not evaluate_qf(f, nu))
    assert evaluate_qf(And((f, g)), nu) == (evaluate_qf(f, nu) and evaluate_qf(g, nu))
    assert evaluate_qf(Or((f, g)), nu) == (evaluate_qf(f, nu) or evaluate_qf(g, nu))


@given(st.integers(0, 10**6))
@settings(max_examples=100)
def test_params_report_properties(seed):
    f = gen_qf(GenConfig(vars=3, max_atoms=6), random.Random(seed), ("y", "x", "z"))
    rep = params_report(f)
    assert 1 in rep.mods
    assert all(t.constant == 0 for t in rep.hom)
    assert rep.num_hom <= rep.num_lin
    assert substitute(f, V("x"), V("x")) == f


@given(st.lists(st.tuples(st.sampled_from("xy"), st.integers(-6, 6)), min_size=1, max_size=4),
       st.integers(-5, 5), st.integers(1, 6), st.integers(-8, 8), st.integers(-8, 8))
@settings(max_examples=150)
def test_simplify_mod_constraint_equivalent(monos, const, q, a, b):
    t = LinearTerm(monos, const)
    g = simplify_mod_constraint(t, q)
    nu = {"x": a, "y": b}
    assert evaluate_qf(g, nu) == (t.evaluate(nu) % q == 0)
    assert params_report(g).mods <= {1, q}
