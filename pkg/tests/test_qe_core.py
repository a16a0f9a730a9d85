"""Steps I to V for the variable counting quantifiers."""
import itertools
import random

import pytest

from conftest import V
from pacqe import kernels
from pacqe.errors import CaseExplosion, MalformedFormula
from pacqe.formula import FALSE, TRUE, CountEq, CountGeq, Mod, evaluate_qf, free_vars, is_quantifier_free
from pacqe.oracle import GenConfig, Oracle, gen_qf, oracle_eval
from pacqe.qe_core import (
    EQ,
    GEQ,
    Audit,
    Pipeline,
    SegmentDescriptor,
    _Bits,
    build_case_table,
    eliminate_count_var,
    normalize_coeffs,
    residual_mod_formula,
    segment_counts,
    segments,
    trace_steps,
)
from pacqe.orderings import Ordering
from pacqe.syntax import parse_core
from pacqe.terms import ZERO

Y, X = V("y"), V("x")


def _agree(phi, psi, names, box=12, extra=()):
    """Compare the oracle on ``phi`` with direct evaluation of ``psi`` on a grid."""
    points = [dict(zip(names, pt)) for pt in itertools.product(range(-box, box + 1), repeat=len(names))]
    points += list(extra)
    prog = kernels.compile_qf(psi, names)
    got = kernels.eval_points(prog, [[nu[v] for v in names] for nu in points])
    want = Oracle().eval_many(phi, points)
    for nu, a, b in zip(points, want, got):
        assert a == bool(b), nu


@pytest.mark.parametrize("src, k, body1", [
    ("(lt (* 2 y) x)", 2, "(and (mod y 2 0) (lt (- y x) 0))"),
    ("(and (lt x (* 3 y)) (mod y 2 1))", 3, "(and (mod y 3 0) (lt (- x y) 0) (mod y 6 3))"),
    ("(lt y x)", 1, "(and (mod y 1 0) (lt (- y x) 0))"),
])
def test_normalize_coeffs(src, k, body1):
    got, kk = normalize_coeffs(parse_core(src), "y")
    assert kk == k
    assert got == parse_core(body1)


def test_normalize_keeps_count_equivalent():
    body = parse_core("(and (lt x (* 3 y)) (mod y 2 1) (lt (* 2 y) (+ z 9)))")
    body1, _ = normalize_coeffs(body, "y")
    oracle = Oracle()
    for xv in range(-8, 9):
        for zv in range(-8, 9):
            nu = {"x": xv, "z": zv}
            assert oracle.count_line(body, "y", nu) == oracle.count_line(body1, "y", nu)


def test_normalize_rejects_non_simple_mod():
    with pytest.raises(MalformedFormula):
        normalize_coeffs(Mod(Y + X, 2, 0), "y")


def test_case_table_small():
    ct = build_case_table(parse_core("(and (mod y 1 0) (lt (- y x) 0))"), "y", "w")
    assert ct.T == (X,)
    assert ct.m == 1 and ct.Z == ("x",)
    assert ct.num_cases == 3 == len(list(ct.cases()))


def test_case_table_without_y():
    ct = build_case_table(parse_core("(lt x 3)"), "y")
    assert ct.T == (X - 3,)
    assert ct.num_cases == 3


def test_case_table_residue_maps():
    ct = build_case_table(parse_core("(and (lt y x) (lt y z))"), "y", m=6)
    assert ct.num_residue_maps == 36
    assert sum(1 for _ in ct.residue_maps()) == 36


def test_case_table_guard():
    body = parse_core("(and (lt y x) (lt y z) (lt y (+ x z 1)) (mod y 12 5))")
    with pytest.raises(CaseExplosion) as info:
        build_case_table(body, "y", m=12, max_cases=100)
    assert info.value.limit == 100


@pytest.mark.parametrize("classes, n", [
    (((X,), (ZERO,)), 5),
    (((ZERO, X),), 3),
    (((X,), (ZERO,), (V("z"),)), 7),
])
def test_segments(classes, n):
    segs = segments(Ordering(classes))
    assert len(segs) == n
    assert [s.index for s in segs] == list(range(n))
    assert segs[0].kind == "below" and segs[-1].kind == "above"


def test_residual_between_zero_and_x():
    body1 = parse_core("(and (mod y 2 0) (lt y x))")
    ct = build_case_table(body1, "y")
    i = next(i for i, o in enumerate(ct.orderings) if str(o) == "0 < x")
    seg = segments(ct.orderings[i])[2]
    assert seg.kind == "between"
    assert residual_mod_formula((i, (0,)), seg, ct) == Mod(Y, 2, 0)


def test_residual_collapses_to_false():
    body1 = parse_core("(and (mod y 2 0) (lt y x))")
    ct = build_case_table(body1, "y")
    i = next(i for i, o in enumerate(ct.orderings) if str(o) == "0 < x")
    assert residual_mod_formula((i, (0,)), segments(ct.orderings[i])[4], ct) == FALSE


def test_residual_without_y_mods_is_constant():
    body1 = parse_core("(and (lt 0 y) (lt y x))")
    ct = build_case_table(body1, "y")
    for i, o in enumerate(ct.orderings):
        for seg in segments(o):
            assert residual_mod_formula((i, ()), seg, ct) in (TRUE, FALSE)


def _between():
    return SegmentDescriptor("between", 2, 2)


@pytest.mark.parametrize("beta, m, residues, p, rprime, r", [
    (Mod(Y, 2, 0), 2, (0, 0), 1, 0, -2),
    (TRUE, 1, (0, 0), 1, 0, -1),
    (parse_core("(or (mod y 4 1) (mod y 4 3))"), 4, (0, 0), 2, 2, 0),
    (Mod(Y, 3, 2), 3, (1, 2), 1, 0, -1),
])
def test_segment_counts_between(beta, m, residues, p, rprime, r):
    sc = segment_counts(None, _between(), beta, m, residues=residues)
    assert (sc.p, sc.rprime, sc.r) == (p, rprime, r)
    assert 1 <= sc.u_hi - sc.u_lo <= m
    assert sc.u_hi % m == residues[1] % m


def test_segment_counts_at():
    at = SegmentDescriptor("at", 1, 1)
    assert segment_counts(None, at, Mod(Y, 2, 0), 2, residues=(4,)).c == 1
    assert segment_counts(None, at, Mod(Y, 2, 0), 2, residues=(3,)).c == 0


def test_segment_counts_rejects_tails():
    with pytest.raises(ValueError):
        segment_counts(None, SegmentDescriptor("below", 1, 0), TRUE, 1, residues=(0,))


@pytest.mark.parametrize("seed", range(12))
def test_patterns_match_beta(seed):
    rng = random.Random(f"pat:{seed}")
    body = gen_qf(GenConfig(vars=3, max_atoms=5), rng, ("y", "x", "z"), must="y")
    pl = Pipeline("y", body, "w")
    for i, o in enumerate(pl.table.orderings):
        for r in itertools.islice(pl.table.residue_maps(), 12):
            key = pl.ymod_key(r)
            pats = pl.patterns(i, key)
            for seg in segments(o):
                assert pats[seg.index] == pl.bits.evaluate(pl.beta(i, seg.index, key))


def test_bits_reject_foreign_modulus():
    from pacqe.errors import PipelineInvariantError

    with pytest.raises(PipelineInvariantError):
        _Bits(4).evaluate(Mod(Y, 3, 0))


def test_count_geq_between_zero_and_z():
    psi = eliminate_count_var(GEQ, "x", "y", parse_core("(and (lt 0 y) (lt y z))"))
    assert is_quantifier_free(psi)
    for nu, want in [({"x": 2, "z": 4}, True), ({"x": 4, "z": 4}, False), ({"x": 0, "z": -5}, True)]:
        assert evaluate_qf(psi, nu) is want
    for xv in range(-5, 15):
        for zv in range(-10, 15):
            assert evaluate_qf(psi, {"x": xv, "z": zv}) == (xv <= max(zv - 1, 0))


def test_count_geq_infinite():
    psi = eliminate_count_var(GEQ, "x", "y", parse_core("(and (lt y 0) (mod y 2 0))"))
    assert all(evaluate_qf(psi, {"x": v}) for v in range(-20, 100))


def test_count_eq_infinite():
    psi = eliminate_count_var(EQ, "x", "y", parse_core("(lt y 0)"))
    assert not any(evaluate_qf(psi, {"x": v}) for v in range(-20, 100))


def test_count_eq_false_body():
    psi = eliminate_count_var(EQ, "x", "y", FALSE)
    assert all(evaluate_qf(psi, {"x": v}) == (v == 0) for v in range(-10, 11))


def test_count_var_in_body():
    body = parse_core("(and (lt 0 y) (lt y x))")
    for mode, cls in ((GEQ, CountGeq), (EQ, CountEq)):
        psi = eliminate_count_var(mode, "x", "y", body)
        _agree(cls("x", "y", body), psi, ("x",), box=20)


def test_binder_clash():
    with pytest.raises(MalformedFormula):
        eliminate_count_var(GEQ, "y", "y", TRUE)


def test_divisibility_spot_check():
    body = parse_core("(and (lt (* 3 y) (+ z 7)) (lt x (* 2 y)) (mod (+ y z) 3 1))")
    for mode, cls in ((GEQ, CountGeq), (EQ, CountEq)):
        psi = eliminate_count_var(mode, "w", "y", body)
        assert free_vars(psi) <= {"w", "x", "z"}
        _agree(cls("w", "y", body), psi, ("w", "x", "z"), box=6)


@pytest.mark.parametrize("seed", range(6))
def test_step_chain(seed):
    rng = random.Random(f"chain:{seed}")
    body = gen_qf(GenConfig(vars=3, max_atoms=3, mod_bound=3, coef_bound=3), rng, ("y", "x", "z"), must="y")
    mode = (GEQ, EQ)[seed % 2]
    steps = trace_steps(mode, "x", "y", body, max_cases=4000, audit=Audit())
    assert len(steps) == 6 and is_quantifier_free(steps[5])
    oracle = Oracle()
    for _ in range(60):
        nu = {"x": rng.randint(0, 8), "z": rng.randint(-15, 15)}
        vals = [oracle.eval(s, nu) for s in steps]
        assert len(set(vals)) == 1, (nu, vals)


def test_audit_records_checks():
    audit = Audit()
    eliminate_count_var(GEQ, "x", "y", parse_core("(and (lt 0 y) (lt y z) (mod y 3 1))"), audit=audit)
    s = audit.summary()
    assert s["checks"]["step1-unit-coefficients"] > 0
    assert oracle_eval(CountGeq("x", "y", TRUE), {"x": 10})
