"""Threshold and modulo counting, the driver and the sentence decider."""
import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import V
from pacqe import kernels
from pacqe.errors import CaseExplosion, MalformedFormula, OpenFormulaError, UnsupportedQuantifiedInput
from pacqe.formula import (
    FALSE,
    TRUE,
    CountGeqConst,
    CountMod,
    Exists,
    ForAll,
    Lt,
    Not,
    Or,
    evaluate_qf,
    is_quantifier_free,
    params_report,
)
from pacqe.oracle import GenConfig, Oracle, gen_qf
from pacqe.qe_core import Audit
from pacqe.qe_ext import (
    _is_minimal,
    decide,
    eliminate_all,
    eliminate_mod_count,
    eliminate_single,
    eliminate_threshold,
    minimal_tuples,
)
from pacqe.syntax import parse_core

Y = V("y")


def _check(phi, psi, names, box=10):
    points = [dict(zip(names, pt)) for pt in itertools.product(range(-box, box + 1), repeat=len(names))]
    prog = kernels.compile_qf(psi, names)
    got = kernels.eval_points(prog, [[nu[v] for v in names] for nu in points]) if names else \
        [evaluate_qf(psi, {})] * len(points)
    want = Oracle().eval_many(phi, points)
    for nu, a, b in zip(points, want, got):
        assert a == bool(b), nu


def test_threshold_two():
    psi = eliminate_threshold(2, "y", parse_core("(and (lt 0 y) (lt y z))"))
    assert [evaluate_qf(psi, {"z": z}) for z in (4, 2, 3)] == [True, False, True]
    for z in range(-10, 30):
        assert evaluate_qf(psi, {"z": z}) == (z - 1 >= 2)


@pytest.mark.parametrize("c", [0, -3])
def test_threshold_nonpositive(c):
    assert eliminate_threshold(c, "y", FALSE) == TRUE


def test_threshold_too_few_solutions():
    psi = eliminate_threshold(3, "y", parse_core("(and (lt 0 y) (lt y 5) (mod y 2 0))"))
    assert evaluate_qf(psi, {}) is False


@pytest.mark.parametrize("c", [1, 2, 5, 17, 50])
def test_threshold_against_oracle(c):
    body = parse_core("(and (lt (* 2 x) y) (lt y (+ z 40)) (not (mod y 3 0)))")
    phi = CountGeqConst(c, "y", body)
    psi = eliminate_threshold(c, "y", body)
    _check(phi, psi, ("x", "z"), box=12)


def test_threshold_guard():
    with pytest.raises(CaseExplosion):
        eliminate_threshold(10**6, "y", parse_core("(and (lt 0 y) (lt y z))"), max_threshold_e=1000)


def test_mod_count_three():
    psi = eliminate_mod_count("x", 2, "y", parse_core("(and (lt 0 y) (lt y 4))"))
    assert evaluate_qf(psi, {"x": 3}) and not evaluate_qf(psi, {"x": 2})
    for xv in range(-10, 10):
        assert evaluate_qf(psi, {"x": xv}) == (xv % 2 == 1)


def test_mod_count_infinite():
    psi = eliminate_mod_count("x", 1, "y", parse_core("(lt 0 y)"))
    assert not any(evaluate_qf(psi, {"x": v}) for v in range(-5, 6))


def test_mod_count_singleton():
    psi = eliminate_mod_count("x", 3, "y", parse_core("(and (not (lt y 0)) (not (lt 0 y)))"))
    for xv in range(-9, 10):
        assert evaluate_qf(psi, {"x": xv}) == (xv % 3 == 1)


def test_mod_count_moduli():
    body = parse_core("(and (lt (* 2 y) z) (lt 0 y) (mod y 3 1))")
    psi = eliminate_mod_count("x", 2, "y", body)
    assert params_report(psi).mods <= {1, 12}
    _check(CountMod("x", 2, "y", body), psi, ("x", "z"), box=15)


def test_mod_count_binder_checks():
    with pytest.raises(MalformedFormula):
        eliminate_mod_count("y", 2, "y", TRUE)
    with pytest.raises(MalformedFormula):
        eliminate_mod_count("x", 0, "y", TRUE)


def test_nested_exists_count():
    phi = parse_core("(exists (x) (count-geq x y (and (lt 0 y) (lt y z))))")
    psi = eliminate_all(phi)
    assert is_quantifier_free(psi)
    assert evaluate_qf(psi, {"z": 1}) and evaluate_qf(psi, {"z": 0})
    _check(phi, psi, ("z",), box=20)


def test_forall_tautology():
    psi = eliminate_all(parse_core("(forall (x) (or (lt x 0) (not (lt x 0))))"))
    assert evaluate_qf(psi, {}) is True


def test_quantifier_free_input():
    f = parse_core("(and (lt x 3) (mod (+ x y) 2 0))")
    g = eliminate_all(f)
    assert is_quantifier_free(g)
    assert all(m in (1, 2) for m in params_report(g).mods)
    _check(f, g, ("x", "y"), box=5)
    h = parse_core("(lt x 3)")
    assert eliminate_all(h) == h


def test_single_mode():
    f = parse_core("(count-geq x y (lt 0 y))")
    assert is_quantifier_free(eliminate_single(f))
    with pytest.raises(UnsupportedQuantifiedInput):
        eliminate_single(parse_core("(lt x 0)"))
    with pytest.raises(UnsupportedQuantifiedInput):
        eliminate_single(parse_core("(exists (x) (count-geq x y (lt 0 y)))"))


@pytest.mark.parametrize("src, expected", [
    ("(count-geq-const 3 y (and (lt 0 y) (lt y 5)))", True),
    ("(exists (x) (count-eq x y (and (lt 0 y) (lt y 3))))", True),
    ("(count-geq-const 5 y (and (lt 0 y) (lt y 5)))", False),
    ("(forall (x) (exists (y) (and (lt x y) (lt y (+ x 2)))))", True),
    ("(forall (z) (exists (y) (eq (* 2 y) z)))", False),
])
def test_decide(src, expected):
    assert decide(parse_core(src)) is expected


def test_decide_open_formula():
    with pytest.raises(OpenFormulaError) as info:
        decide(parse_core("(count-geq x y (lt y z))"))
    assert info.value.free == ("x", "z")
    assert "x, z" in str(info.value)


def test_hom_bound_is_audited():
    audit = Audit()
    eliminate_threshold(4, "y", parse_core("(and (lt x y) (lt y (+ z 20)) (mod y 2 1))"), audit=audit)
    eliminate_mod_count("w", 3, "y", parse_core("(and (lt x y) (lt y z))"), audit=audit)
    checks = audit.summary()["checks"]
    assert checks["hom-threshold"] == 1 and checks["hom-modcount"] == 1


@given(st.lists(st.integers(0, 5), min_size=1, max_size=4), st.integers(-3, 14))
@settings(max_examples=200)
def test_minimal_tuples(p, need):
    p = tuple(p)
    got = minimal_tuples(p, need)
    assert len(got) == len(set(got))
    box = [range(0, max(need, 0) + 1) if pj else range(1) for pj in p]
    want = sorted(n for n in itertools.product(*box) if _is_minimal(n, p, need) or (need <= 0 and not any(n)))
    assert sorted(got) == want


@pytest.mark.parametrize("seed", range(10))
def test_exists_is_threshold_one(seed):
    rng = random.Random(f"ex:{seed}")
    body = gen_qf(GenConfig(vars=3, max_atoms=3), rng, ("y", "x", "z"), must="y")
    a = eliminate_all(Exists("y", body), max_cases=20000)
    b = eliminate_all(CountGeqConst(1, "y", body), max_cases=20000)
    names = ("x", "z")
    prog_a, prog_b = kernels.compile_qf(a, names), kernels.compile_qf(b, names)
    pts = [[rng.randint(-30, 30), rng.randint(-30, 30)] for _ in range(200)]
    assert kernels.eval_points(prog_a, pts).tolist() == kernels.eval_points(prog_b, pts).tolist()


def test_forall_via_negation():
    body = parse_core("(or (lt y x) (mod y 2 0))")
    psi = eliminate_all(ForAll("y", body))
    _check(ForAll("y", body), psi, ("x",), box=10)
    assert eliminate_all(Not(Lt(Y))) == Not(Lt(Y))
    assert eliminate_all(Or(())) == FALSE
