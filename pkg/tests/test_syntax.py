"""Parser and printer for the s-expression syntax."""
import pytest

from conftest import T, V
from pacqe.errors import ParseError
from pacqe.formula import FALSE, TRUE, And, Cmp, CountGeq, Lt, Mod, Not
from pacqe.oracle import KINDS, GenConfig, gen_formula
from pacqe.syntax import parse, parse_core, render, render_term


def test_parse_count_geq():
    f = parse("(count-geq x y (and (lt 0 y) (lt y z)))")
    assert f == CountGeq("x", "y", And((Cmp("lt", T(), V("y")), Cmp("lt", V("y"), V("z")))))


def test_parse_core_count_geq():
    f = parse_core("(count-geq x y (and (lt 0 y) (lt y z)))")
    assert f == CountGeq("x", "y", And((Lt(-V("y")), Lt(V("y") - V("z")))))


def test_parse_mod():
    assert parse("(mod (+ x 1) 3 2)") == Mod(T((1, "x"), const=1), 3, 2)


def test_parse_terms():
    f = parse_core("(lt (- (* 3 x) (+ y 2)) -7)")
    assert f == Lt(T((3, "x"), (-1, "y"), const=5))


def test_comments_and_big_integers():
    f = parse_core("; header\n(lt x 123456789012345678901234567890) ; trailing\n")
    assert f == Lt(V("x") - 123456789012345678901234567890)


@pytest.mark.parametrize("src, line, col, fragment", [
    ("(count-geq y y (lt y 0))", 1, 1, "binder variables must differ"),
    ("(mod x 0 0)", 1, 8, "modulus"),
    ("(mod x 3 3)", 1, 10, "residue"),
    ("(and (lt x 0)\n  (lt x", 2, 3, "missing"),
    ("(foo x)", 1, 1, "unknown"),
])
def test_parse_errors(src, line, col, fragment):
    with pytest.raises(ParseError) as info:
        parse(src)
    assert (info.value.line, info.value.column) == (line, col)
    assert fragment in str(info.value)


@pytest.mark.parametrize("src", ["(lt $z0 0)", "(exists ($y) (lt $y 0))", "(count-geq $x y (lt y 0))"])
def test_reserved_prefix_rejected(src):
    with pytest.raises(ParseError, match="reserved"):
        parse(src)


def test_trailing_garbage():
    with pytest.raises(ParseError):
        parse("(lt x 0) (lt y 0)")


def test_unbalanced_close():
    with pytest.raises(ParseError):
        parse("(lt x 0))")


@pytest.mark.parametrize("f, text", [
    (TRUE, "true"),
    (FALSE, "false"),
    (Mod(V("x"), 2, 0), "(mod x 2 0)"),
    (Lt(T((1, "y"), (-2, "x"), const=3)), "(lt (+ (* -2 x) y 3) 0)"),
    (Not(Lt(V("x"))), "(not (lt x 0))"),
])
def test_render_examples(f, text):
    assert render(f) == text


def test_render_term_constant():
    assert render_term(T(const=-4)) == "-4"


@pytest.mark.parametrize("kind", KINDS)
def test_round_trip_generated(kind):
    cfg = GenConfig(vars=3, depth=2, nested_prob=0.5)
    for seed in range(200):
        f = gen_formula(cfg, f"rt:{kind}:{seed}", kind)
        text = render(f)
        assert parse_core(text) == f, text
        assert render(parse_core(text)) == text
