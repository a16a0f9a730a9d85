"""S-expression surface syntax: parser and printer.

Grammar::

    formula := atom | (not f) | (and f+) | (or f+) | (implies f f) | (iff f f)
             | (exists (v) f) | (forall (v) f)
             | (count-geq v v f) | (count-eq v v f)
             | (count-geq-const int v f) | (count-mod v int v f)
             | true | false
    atom    := (lt t t) | (le t t) | (eq t t) | (ge t t) | (gt t t)
             | (mod t int int) | (cong t t int)
    t       := int | v | (+ t+) | (- t t) | (* int t)

Comments run from ``;`` to the end of the line.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import MalformedFormula, ParseError
from .formula import (
    FALSE,
    TRUE,
    And,
    Cmp,
    Cong,
    Const,
    CountEq,
    CountGeq,
    CountGeqConst,
    CountMod,
    Exists,
    ForAll,
    Formula,
    Iff,
    Implies,
    Lt,
    Mod,
    Not,
    Or,
    desugar,
)
from .terms import LinearTerm

_VAR = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")
_INT = re.compile(r"[+-]?[0-9]+\Z")
_TOKEN = re.compile(r"\s+|;[^\n]*|\(|\)|[^\s();]+")
KEYWORDS = {
    "true", "false", "not", "and", "or", "implies", "iff", "exists", "forall", "count-geq", "count-eq",
    "count-geq-const", "count-mod", "lt", "le", "eq", "ge", "gt", "mod", "cong",
}
_CMP = {"lt", "le", "eq", "ge", "gt"}


@dataclass
class _Tok:
    text: str
    line: int
    col: int


@dataclass
class _List:
    items: list
    line: int
    col: int


def _tokenize(src: str) -> list[_Tok]:
    out = []
    line, col = 1, 1
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:  # pragma: no cover - the pattern matches every character
            raise ParseError(f"unexpected character {src[pos]!r}", line, col)
        text = m.group(0)
        if not (text[0].isspace() or text[0] == ";"):
            out.append(_Tok(text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    return out


def _read(tokens: list[_Tok]):
    stack: list[_List] = []
    top = []
    for tok in tokens:
        if tok.text == "(":
            stack.append(_List([], tok.line, tok.col))
        elif tok.text == ")":
            if not stack:
                raise ParseError("unbalanced ')'", tok.line, tok.col)
            done = stack.pop()
            (stack[-1].items if stack else top).append(done)
        else:
            (stack[-1].items if stack else top).append(tok)
    if stack:
        raise ParseError("missing ')'", stack[-1].line, stack[-1].col)
    return top


def _where(node):
    return node.line, node.col


def _int(node, what="integer") -> int:
    if isinstance(node, _Tok) and _INT.match(node.text):
        return int(node.text)
    raise ParseError(f"expected {what}", *_where(node))


def _var(node) -> str:
    if isinstance(node, _Tok):
        if node.text.startswith("$"):
            raise ParseError(f"variable names starting with '$' are reserved: {node.text}", *_where(node))
        if _VAR.match(node.text) and node.text not in KEYWORDS:
            return node.text
    raise ParseError("expected a variable name", *_where(node))


def _term(node) -> LinearTerm:
    if isinstance(node, _Tok):
        if _INT.match(node.text):
            return LinearTerm.const(int(node.text))
        return LinearTerm.var(_var(node))
    if not node.items:
        raise ParseError("empty term", *_where(node))
    head = node.items[0]
    args = node.items[1:]
    op = head.text if isinstance(head, _Tok) else None
    if op == "+":
        if not args:
            raise ParseError("(+) needs at least one argument", *_where(node))
        out = LinearTerm()
        for a in args:
            out = out + _term(a)
        return out
    if op == "-":
        if len(args) != 2:
            raise ParseError("(-) takes exactly two arguments", *_where(node))
        return _term(args[0]) - _term(args[1])
    if op == "*":
        if len(args) != 2:
            raise ParseError("(*) takes an integer and a term", *_where(node))
        return _term(args[1]) * _int(args[0], "integer factor")
    raise ParseError("expected a term", *_where(node))


def _arity(node, n, name):
    if len(node.items) - 1 != n:
        raise ParseError(f"({name} ...) takes {n} argument{'s' if n != 1 else ''}", *_where(node))


def _formula(node):
    if isinstance(node, _Tok):
        if node.text == "true":
            return TRUE
        if node.text == "false":
            return FALSE
        raise ParseError(f"expected a formula, got {node.text!r}", *_where(node))
    if not node.items or not isinstance(node.items[0], _Tok):
        raise ParseError("expected a formula", *_where(node))
    head = node.items[0].text
    args = node.items[1:]
    where = _where(node)
    try:
        if head in _CMP:
            _arity(node, 2, head)
            return Cmp(head, _term(args[0]), _term(args[1]))
        if head == "mod":
            _arity(node, 3, head)
            q = _int(args[1], "modulus")
            r = _int(args[2], "residue")
            if q < 1:
                raise ParseError(f"modulus must be >= 1, got {q}", *_where(args[1]))
            if not 0 <= r < q:
                raise ParseError(f"residue must lie in [0, {q}), got {r}", *_where(args[2]))
            return Mod(_term(args[0]), q, r)
        if head == "cong":
            _arity(node, 3, head)
            q = _int(args[2], "modulus")
            if q < 1:
                raise ParseError(f"modulus must be >= 1, got {q}", *_where(args[2]))
            return Cong(_term(args[0]), _term(args[1]), q)
        if head == "not":
            _arity(node, 1, head)
            return Not(_formula(args[0]))
        if head in ("and", "or"):
            if not args:
                raise ParseError(f"({head}) needs at least one argument", *where)
            parts = tuple(_formula(a) for a in args)
            return And(parts) if head == "and" else Or(parts)
        if head in ("implies", "iff"):
            _arity(node, 2, head)
            a, b = _formula(args[0]), _formula(args[1])
            return Implies(a, b) if head == "implies" else Iff(a, b)
        if head in ("exists", "forall"):
            _arity(node, 2, head)
            binder = args[0]
            if not isinstance(binder, _List) or len(binder.items) != 1:
                raise ParseError(f"({head} (v) f) expects one variable in parentheses", *_where(binder))
            v = _var(binder.items[0])
            body = _formula(args[1])
            return Exists(v, body) if head == "exists" else ForAll(v, body)
        if head in ("count-geq", "count-eq"):
            _arity(node, 3, head)
            x, y = _var(args[0]), _var(args[1])
            if x == y:
                raise ParseError(f"binder variables must differ (both are {x!r})", *where)
            body = _formula(args[2])
            return CountGeq(x, y, body) if head == "count-geq" else CountEq(x, y, body)
        if head == "count-geq-const":
            _arity(node, 3, head)
            return CountGeqConst(_int(args[0], "threshold"), _var(args[1]), _formula(args[2]))
        if head == "count-mod":
            _arity(node, 4, head)
            x = _var(args[0])
            q = _int(args[1], "modulus")
            y = _var(args[2])
            if q < 1:
                raise ParseError(f"modulus must be >= 1, got {q}", *_where(args[1]))
            if x == y:
                raise ParseError(f"binder variables must differ (both are {x!r})", *where)
            return CountMod(x, q, y, _formula(args[3]))
    except MalformedFormula as exc:
        raise ParseError(str(exc), *where) from None
    raise ParseError(f"unknown form {head!r}", *where)


def parse(src: str):
    """Parse one formula.  The result may still contain comparison sugar; see :func:`parse_core`."""
    top = _read(_tokenize(src))
    if not top:
        raise ParseError("empty input", 1, 1)
    if len(top) > 1:
        raise ParseError("trailing input after the formula", *_where(top[1]))
    return _formula(top[0])


def parse_core(src: str) -> Formula:
    return desugar(parse(src))


# ---------------------------------------------------------------------------
# printer


def render_term(t: LinearTerm) -> str:
    parts = []
    for v, a in t.coeffs:
        parts.append(v if a == 1 else f"(* {a} {v})")
    if t.constant or not parts:
        parts.append(str(t.constant))
    if len(parts) == 1:
        return parts[0]
    return "(+ " + " ".join(parts) + ")"


def render(f: Formula) -> str:
    """Deterministic single-line rendering of a core formula."""
    out: list[str] = []
    _emit(f, out)
    return "".join(out)


def _emit(f, out):
    if isinstance(f, Const):
        out.append("true" if f.value else "false")
    elif isinstance(f, Lt):
        out.append(f"(lt {render_term(f.term)} 0)")
    elif isinstance(f, Mod):
        out.append(f"(mod {render_term(f.term)} {f.modulus} {f.residue})")
    elif isinstance(f, Not):
        out.append("(not ")
        _emit(f.arg, out)
        out.append(")")
    elif isinstance(f, (And, Or)):
        if not f.args:
            out.append("true" if isinstance(f, And) else "false")
            return
        out.append("(and" if isinstance(f, And) else "(or")
        for a in f.args:
            out.append(" ")
            _emit(a, out)
        out.append(")")
    elif isinstance(f, (Exists, ForAll)):
        out.append(f"({'exists' if isinstance(f, Exists) else 'forall'} ({f.var}) ")
        _emit(f.body, out)
        out.append(")")
    elif isinstance(f, CountGeq):
        out.append(f"(count-geq {f.count} {f.var} ")
        _emit(f.body, out)
        out.append(")")
    elif isinstance(f, CountEq):
        out.append(f"(count-eq {f.count} {f.var} ")
        _emit(f.body, out)
        out.append(")")
    elif isinstance(f, CountGeqConst):
        out.append(f"(count-geq-const {f.threshold} {f.var} ")
        _emit(f.body, out)
        out.append(")")
    elif isinstance(f, CountMod):
        out.append(f"(count-mod {f.count} {f.modulus} {f.var} ")
        _emit(f.body, out)
        out.append(")")
    else:
        raise TypeError(f"cannot render {type(f).__name__}")
