"""Formula AST for Presburger arithmetic with counting quantifiers.

Core atoms are strict inequalities ``t < 0`` (:class:`Lt`) and modulo
constraints ``t = r (mod q)`` (:class:`Mod`).  Everything else (``<=``, ``=``,
congruences between two terms, implication) is surface sugar that
:func:`desugar` rewrites into the core.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import lcm
from typing import Iterator, Mapping, Union

from .errors import (
    IncompleteAssignment,
    MalformedFormula,
    SubstitutionShapeError,
    UnsupportedQuantifiedInput,
)
from .terms import LinearTerm

Assignment = Mapping[str, int]


# ---------------------------------------------------------------------------
# core nodes


@dataclass(frozen=True, slots=True)
class Lt:
    """``term < 0``."""

    term: LinearTerm


@dataclass(frozen=True, slots=True)
class Mod:
    """``term = residue (mod modulus)``."""

    term: LinearTerm
    modulus: int
    residue: int = 0

    def __post_init__(self):
        if self.modulus < 1:
            raise MalformedFormula(f"modulus must be >= 1, got {self.modulus}")
        if not 0 <= self.residue < self.modulus:
            raise MalformedFormula(f"residue {self.residue} outside [0, {self.modulus})")

    def is_simple(self) -> bool:
        return self.term.is_variable()

    @property
    def var(self) -> str:
        return self.term.coeffs[0][0]


@dataclass(frozen=True, slots=True)
class Const:
    value: bool


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True, slots=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True, slots=True)
class And:
    args: tuple


@dataclass(frozen=True, slots=True)
class Or:
    args: tuple


@dataclass(frozen=True, slots=True)
class Exists:
    var: str
    body: "Formula"


@dataclass(frozen=True, slots=True)
class ForAll:
    var: str
    body: "Formula"


def _check_binder(x, y):
    if x == y:
        raise MalformedFormula(f"counting quantifier binds {y!r} and counts with the same variable")


@dataclass(frozen=True, slots=True)
class CountGeq:
    """At least ``count`` (a variable) values of ``var`` satisfy ``body``."""

    count: str
    var: str
    body: "Formula"

    def __post_init__(self):
        _check_binder(self.count, self.var)


@dataclass(frozen=True, slots=True)
class CountEq:
    """Exactly ``count`` values of ``var`` satisfy ``body`` (false if infinitely many)."""

    count: str
    var: str
    body: "Formula"

    def __post_init__(self):
        _check_binder(self.count, self.var)


@dataclass(frozen=True, slots=True)
class CountGeqConst:
    """At least ``threshold`` (an integer) values of ``var`` satisfy ``body``."""

    threshold: int
    var: str
    body: "Formula"


@dataclass(frozen=True, slots=True)
class CountMod:
    """The number of ``var`` satisfying ``body`` is finite and congruent to ``count`` mod ``modulus``."""

    count: str
    modulus: int
    var: str
    body: "Formula"

    def __post_init__(self):
        _check_binder(self.count, self.var)
        if self.modulus < 1:
            raise MalformedFormula(f"modulus must be >= 1, got {self.modulus}")


# ---------------------------------------------------------------------------
# surface sugar (produced by the parser, removed by desugar)


@dataclass(frozen=True, slots=True)
class Cmp:
    op: str  # one of lt le eq ge gt
    lhs: LinearTerm
    rhs: LinearTerm


@dataclass(frozen=True, slots=True)
class Cong:
    """``lhs = rhs (mod modulus)``."""

    lhs: LinearTerm
    rhs: LinearTerm
    modulus: int


@dataclass(frozen=True, slots=True)
class Implies:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True, slots=True)
class Iff:
    lhs: "Formula"
    rhs: "Formula"


Atom = Union[Lt, Mod]
Formula = Union[Lt, Mod, Const, Not, And, Or, Exists, ForAll, CountGeq, CountEq, CountGeqConst, CountMod]
QUANTIFIERS = (Exists, ForAll, CountGeq, CountEq, CountGeqConst, CountMod)
COUNTING = (CountGeq, CountEq, CountGeqConst, CountMod)


# ---------------------------------------------------------------------------
# smart constructors


def conj(*args) -> Formula:
    """Conjunction with constant folding and flattening of nested conjunctions."""
    out = []
    for a in args:
        if a is TRUE or a == TRUE:
            continue
        if a is FALSE or a == FALSE:
            return FALSE
        if isinstance(a, And):
            out.extend(a.args)
        else:
            out.append(a)
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return And(tuple(out))


def disj(*args) -> Formula:
    """Disjunction with constant folding and flattening of nested disjunctions."""
    out = []
    for a in args:
        if a is FALSE or a == FALSE:
            continue
        if a is TRUE or a == TRUE:
            return TRUE
        if isinstance(a, Or):
            out.extend(a.args)
        else:
            out.append(a)
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return Or(tuple(out))


def neg(f: Formula) -> Formula:
    if isinstance(f, Const):
        return FALSE if f.value else TRUE
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def lt(a: LinearTerm, b: LinearTerm | int = 0) -> Lt:
    """``a < b``."""
    return Lt(a - b)


def le(a: LinearTerm, b: LinearTerm | int = 0) -> Formula:
    """``a <= b`` encoded as ``not (b - a < 0)``."""
    return Not(Lt(b - a))


def ge(a: LinearTerm, b: LinearTerm | int = 0) -> Formula:
    return Not(Lt(a - b))


def eq(a: LinearTerm, b: LinearTerm | int = 0) -> Formula:
    return And((Not(Lt(a - b)), Not(Lt(b - a))))


def simple_mod(v: str, q: int, r: int) -> Mod:
    return Mod(LinearTerm.var(v), q, r % q)


# ---------------------------------------------------------------------------
# structure


def children(f: Formula) -> tuple:
    if isinstance(f, (And, Or)):
        return f.args
    if isinstance(f, Not):
        return (f.arg,)
    if isinstance(f, QUANTIFIERS):
        return (f.body,)
    return ()


def atoms(f: Formula) -> Iterator[Atom]:
    """Every atom occurrence, in left-to-right order (duplicates included)."""
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, (Lt, Mod)):
            yield g
        elif isinstance(g, (And, Or)):
            stack.extend(reversed(g.args))
        elif isinstance(g, Not):
            stack.append(g.arg)
        elif isinstance(g, QUANTIFIERS):
            stack.append(g.body)


def is_quantifier_free(f: Formula) -> bool:
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, QUANTIFIERS):
            return False
        stack.extend(children(g))
    return True


def free_vars(f: Formula) -> frozenset[str]:
    if isinstance(f, (Lt, Mod)):
        return f.term.vars
    if isinstance(f, Const):
        return frozenset()
    if isinstance(f, Not):
        return free_vars(f.arg)
    if isinstance(f, (And, Or)):
        out = set()
        for a in f.args:
            out |= free_vars(a)
        return frozenset(out)
    inner = free_vars(f.body) - {f.var}
    if isinstance(f, (CountGeq, CountEq, CountMod)):
        return inner | {f.count}
    return inner


def all_vars(f: Formula) -> frozenset[str]:
    out = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, (Lt, Mod)):
            out |= g.term.vars
        elif isinstance(g, QUANTIFIERS):
            out.add(g.var)
            if isinstance(g, (CountGeq, CountEq, CountMod)):
                out.add(g.count)
        stack.extend(children(g))
    return frozenset(out)


def size(f: Formula) -> int:
    """Number of nodes in the tree."""
    n = 0
    stack = [f]
    while stack:
        g = stack.pop()
        n += 1
        stack.extend(children(g))
    return n


def rebuild(f: Formula, args) -> Formula:
    """``f`` with its children replaced by ``args`` (same node kind)."""
    if isinstance(f, And):
        return And(tuple(args))
    if isinstance(f, Or):
        return Or(tuple(args))
    if isinstance(f, Not):
        return Not(args[0])
    if isinstance(f, Exists):
        return Exists(f.var, args[0])
    if isinstance(f, ForAll):
        return ForAll(f.var, args[0])
    if isinstance(f, CountGeq):
        return CountGeq(f.count, f.var, args[0])
    if isinstance(f, CountEq):
        return CountEq(f.count, f.var, args[0])
    if isinstance(f, CountGeqConst):
        return CountGeqConst(f.threshold, f.var, args[0])
    if isinstance(f, CountMod):
        return CountMod(f.count, f.modulus, f.var, args[0])
    return f


def map_atoms(f: Formula, fn) -> Formula:
    """Rebuild ``f`` with every atom ``a`` replaced by ``fn(a)`` (no binder awareness)."""
    if isinstance(f, (Lt, Mod)):
        return fn(f)
    if isinstance(f, Const):
        return f
    return rebuild(f, [map_atoms(c, fn) for c in children(f)])


# ---------------------------------------------------------------------------
# desugaring


def desugar(f) -> Formula:
    """Rewrite surface sugar into core atoms, connectives and quantifiers."""
    if isinstance(f, Cmp):
        a, b = f.lhs, f.rhs
        if f.op == "lt":
            return Lt(a - b)
        if f.op == "gt":
            return Lt(b - a)
        if f.op == "le":
            return Not(Lt(b - a))
        if f.op == "ge":
            return Not(Lt(a - b))
        if f.op == "eq":
            return eq(a, b)
        raise MalformedFormula(f"unknown comparison {f.op!r}")
    if isinstance(f, Cong):
        return Mod(f.lhs - f.rhs, f.modulus, 0)
    if isinstance(f, Implies):
        return Or((Not(desugar(f.lhs)), desugar(f.rhs)))
    if isinstance(f, Iff):
        a, b = desugar(f.lhs), desugar(f.rhs)
        return And((Or((Not(a), b)), Or((Not(b), a))))
    if isinstance(f, (Lt, Mod, Const)):
        return f
    return rebuild(f, [desugar(c) for c in children(f)])


# ---------------------------------------------------------------------------
# evaluation


def eval_atom(a: Atom, nu: Assignment) -> bool:
    try:
        v = a.term.evaluate(nu)
    except KeyError as exc:
        raise IncompleteAssignment(exc.args[0]) from None
    if isinstance(a, Lt):
        return v < 0
    return (v - a.residue) % a.modulus == 0


def evaluate_qf(f: Formula, nu: Assignment) -> bool:
    """Truth value of a quantifier-free formula under ``nu``."""
    if isinstance(f, (Lt, Mod)):
        return eval_atom(f, nu)
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Not):
        return not evaluate_qf(f.arg, nu)
    if isinstance(f, And):
        return all(evaluate_qf(a, nu) for a in f.args)
    if isinstance(f, Or):
        return any(evaluate_qf(a, nu) for a in f.args)
    raise UnsupportedQuantifiedInput(f"evaluate_qf got a {type(f).__name__} node")


# ---------------------------------------------------------------------------
# substitution


def _subst_term(t: LinearTerm, v: str, k: int, to: LinearTerm) -> LinearTerm:
    a = t.coef(v)
    if a == 0:
        return t
    if a % k:
        raise SubstitutionShapeError(f"coefficient {a} of {v} in {t} is not divisible by {k}")
    return t.without(v) + to * (a // k)


def substitute(f: Formula, frm: LinearTerm, to: LinearTerm) -> Formula:
    """Replace every free occurrence of ``frm`` (a variable ``v`` or a scaled ``k*v``) by ``to``.

    For the scaled form every occurrence of ``v`` must carry a coefficient
    divisible by ``k``; ``a*k*v`` becomes ``a*to``.
    """
    if frm.constant != 0 or len(frm.coeffs) != 1:
        raise SubstitutionShapeError(f"can only substitute for a (scaled) variable, got {frm}")
    (v, k), = frm.coeffs
    if k < 0:
        frm, to, k = -frm, -to, -k
    if frm == to:
        return f
    return _subst(f, v, k, to)


def _subst(f, v, k, to):
    if isinstance(f, Lt):
        return Lt(_subst_term(f.term, v, k, to))
    if isinstance(f, Mod):
        return Mod(_subst_term(f.term, v, k, to), f.modulus, f.residue)
    if isinstance(f, Const):
        return f
    if isinstance(f, (Not, And, Or)):
        return rebuild(f, [_subst(c, v, k, to) for c in children(f)])
    # quantifier nodes
    if f.var == v:
        body = f.body
    else:
        if f.var in to.vars:
            raise SubstitutionShapeError(f"substituting {to} under a binder of {f.var!r} would capture it")
        body = _subst(f.body, v, k, to)
    if isinstance(f, (CountGeq, CountEq, CountMod)) and f.count == v:
        if k != 1:
            raise SubstitutionShapeError("scaled substitution for a count variable")
        if to.is_variable():
            new = to.coeffs[0][0]
            if isinstance(f, CountMod):
                return CountMod(new, f.modulus, f.var, body)
            return type(f)(new, f.var, body)
        if to.is_constant() and isinstance(f, CountGeq):
            return CountGeqConst(to.constant, f.var, body)
        raise SubstitutionShapeError(f"cannot substitute {to} for the count variable {v!r}")
    return rebuild(f, [body])


# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class ParamsReport:
    lin: frozenset
    hom: frozenset
    mods: frozenset
    norm_lin: int
    norm_hom: int
    norm_mods: int

    @property
    def num_lin(self) -> int:
        return len(self.lin)

    @property
    def num_hom(self) -> int:
        return len(self.hom)

    @property
    def num_mod(self) -> int:
        return len(self.mods)

    def to_json(self) -> dict:
        return {
            "num_lin": self.num_lin,
            "norm_lin": str(self.norm_lin),
            "num_hom": self.num_hom,
            "norm_hom": str(self.norm_hom),
            "mods": sorted(self.mods),
            "num_mod": self.num_mod,
        }


def params_report(f: Formula) -> ParamsReport:
    lin = set()
    mods = {1}
    for a in atoms(f):
        if isinstance(a, Lt):
            lin.add(a.term)
        else:
            mods.add(a.modulus)
    hom = {t.homogeneous() for t in lin}
    return ParamsReport(
        lin=frozenset(lin),
        hom=frozenset(hom),
        mods=frozenset(mods),
        norm_lin=max((t.norm() for t in lin), default=0),
        norm_hom=max((t.norm() for t in hom), default=0),
        norm_mods=max(mods),
    )


def lcm_of(values) -> int:
    out = 1
    for v in values:
        out = lcm(out, abs(v))
    return out


# ---------------------------------------------------------------------------
# modulo constraints


def simplify_mod_constraint(t: LinearTerm, q: int, r: int = 0) -> Formula:
    """Equivalent disjunction of simple constraints for ``t = r (mod q)``.

    Enumerates residue maps of the variables of ``t`` modulo ``q`` and keeps
    those under which the constraint holds; already-simple constraints are
    returned unchanged.
    """
    if q == 1:
        return TRUE
    if t.is_variable():
        return Mod(t, q, r % q)
    names = [v for v, _ in t.coeffs]
    coefs = [a % q for _, a in t.coeffs]
    target = (r - t.constant) % q
    kept = []
    total = 0
    for combo in itertools.product(range(q), repeat=len(names)):
        total += 1
        if sum(a * c for a, c in zip(coefs, combo)) % q == target:
            kept.append(combo)
    if not kept:
        return FALSE
    if len(kept) == total:
        return TRUE
    return disj(*(conj(*(simple_mod(v, q, c) for v, c in zip(names, combo))) for combo in kept))


def make_mods_simple(f: Formula) -> Formula:
    """Replace every non-simple modulo atom of ``f`` by simple constraints."""

    def fix(a):
        if isinstance(a, Mod) and not a.is_simple():
            return simplify_mod_constraint(a.term, a.modulus, a.residue)
        return a

    return map_atoms(f, fix)


def fresh_var(taken, prefix: str = "z") -> str:
    """A variable in the reserved ``$`` namespace that does not occur in ``taken``."""
    i = 0
    while True:
        name = f"${prefix}{i}"
        if name not in taken:
            return name
        i += 1
