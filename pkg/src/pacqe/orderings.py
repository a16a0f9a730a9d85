"""Orderings of linear terms and exact rational feasibility.

An ordering of a term set is a chain ``t1 <| t2 <| ... <| tn`` with every
``<|`` one of ``<`` or ``=``.  :func:`enumerate_orderings` builds, by inserting
one term at a time, the family of all orderings that are satisfiable over the
rationals.  The family covers every integer point exactly once.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from math import gcd
from typing import Iterable, Sequence

from .formula import TRUE, Formula, Lt, Not, conj
from .terms import ZERO, LinearTerm

LT = "LT"
EQ = "EQ"


# ---------------------------------------------------------------------------
# rational feasibility


@dataclass(frozen=True)
class RationalConstraintSet:
    """Strict inequalities ``t < 0`` and equalities ``t = 0`` over the rationals."""

    strict: frozenset = frozenset()
    equal: frozenset = frozenset()

    @classmethod
    def of(cls, strict: Iterable[LinearTerm] = (), equal: Iterable[LinearTerm] = ()):
        return cls(frozenset(strict), frozenset(equal))


def _primitive(row: list[int], const: int) -> tuple:
    g = abs(const)
    for a in row:
        g = gcd(g, a)
    if g > 1:
        row = [a // g for a in row]
        const //= g
    return tuple(row), const


def feasible_rational(strict: Iterable[LinearTerm] | RationalConstraintSet, equal: Iterable[LinearTerm] = ()) -> bool:
    """Does some rational point satisfy every ``t < 0`` in ``strict`` and ``t = 0`` in ``equal``?

    Exact Fourier-Motzkin elimination over integer-scaled rows: equalities are
    used for substitution first, then variables are projected out of the
    strict system one at a time.
    """
    if isinstance(strict, RationalConstraintSet):
        strict, equal = strict.strict, strict.equal
    strict = list(strict)
    equal = list(equal)
    names = sorted(set().union(*(t.vars for t in strict), *(t.vars for t in equal)))
    index = {v: i for i, v in enumerate(names)}
    n = len(names)

    def dense(t: LinearTerm):
        row = [0] * n
        for v, a in t.coeffs:
            row[index[v]] = a
        return row, t.constant

    rows = [dense(t) for t in strict]
    eqs = [dense(t) for t in equal]

    # substitute equalities
    while eqs:
        er, ec = eqs.pop()
        piv = min((i for i in range(n) if er[i]), key=lambda i: abs(er[i]), default=None)
        if piv is None:
            if ec != 0:
                return False
            continue
        a = er[piv]
        sa = 1 if a > 0 else -1

        def elim(row, c):
            b = row[piv]
            if b == 0:
                return row, c
            return [abs(a) * x - b * sa * y for x, y in zip(row, er)], abs(a) * c - b * sa * ec

        rows = [elim(r, c) for r, c in rows]
        eqs = [elim(r, c) for r, c in eqs]

    system = set()
    for r, c in rows:
        if not any(r):
            if c >= 0:
                return False
            continue
        system.add(_primitive(r, c))

    alive = set(range(n))
    while system:
        pos_count = [0] * n
        neg_count = [0] * n
        for r, _ in system:
            for i in alive:
                if r[i] > 0:
                    pos_count[i] += 1
                elif r[i] < 0:
                    neg_count[i] += 1
        live = [i for i in alive if pos_count[i] or neg_count[i]]
        if not live:
            return True
        v = min(live, key=lambda i: (pos_count[i] * neg_count[i], i))
        alive.discard(v)
        pos = [(r, c) for r, c in system if r[v] > 0]
        neg = [(r, c) for r, c in system if r[v] < 0]
        rest = {(r, c) for r, c in system if r[v] == 0}
        for (pr, pc), (nr, nc) in itertools.product(pos, neg):
            a, b = pr[v], -nr[v]
            row = [b * x + a * y for x, y in zip(pr, nr)]
            c = b * pc + a * nc
            if not any(row):
                if c >= 0:
                    return False
                continue
            rest.add(_primitive(row, c))
        system = rest
    return True


# ---------------------------------------------------------------------------
# orderings


@dataclass(frozen=True)
class Ordering:
    """An ordering stored as its strictly ascending equivalence classes."""

    classes: tuple

    @property
    def terms(self) -> tuple:
        return tuple(t for cls in self.classes for t in cls)

    @property
    def rels(self) -> tuple:
        out = []
        for ci, cls in enumerate(self.classes):
            out.extend([EQ] * (len(cls) - 1))
            if ci + 1 < len(self.classes):
                out.append(LT)
        return tuple(out)

    @property
    def chain(self) -> tuple:
        """``((t1, rel1), ..., (tn, None))``: each term with the relation to its successor."""
        ts, rs = self.terms, self.rels
        return tuple(zip(ts, rs + (None,)))

    @property
    def distinct(self) -> tuple:
        """One representative per class, ascending."""
        return tuple(cls[0] for cls in self.classes)

    @cached_property
    def class_of(self) -> dict:
        return {t: i for i, cls in enumerate(self.classes) for t in cls}

    def constraints(self) -> RationalConstraintSet:
        strict = [a[0] - b[0] for a, b in zip(self.classes, self.classes[1:])]
        equal = [t - cls[0] for cls in self.classes for t in cls[1:]]
        return RationalConstraintSet.of(strict, equal)

    def __str__(self):
        parts = [str(self.terms[0])]
        for t, rel in zip(self.terms[1:], self.rels):
            parts.append("<" if rel == LT else "=")
            parts.append(str(t))
        return " ".join(parts)


def _canonical(terms: Iterable[LinearTerm]) -> list[LinearTerm]:
    return sorted(set(terms), key=LinearTerm.sort_key)


def _feasible(classes) -> bool:
    return feasible_rational(Ordering(classes).constraints())


def enumerate_orderings(terms: Iterable[LinearTerm], d: int | None = None) -> list[Ordering]:
    """All rationally satisfiable orderings of ``terms``, built by incremental insertion.

    ``d`` (the number of variables) is accepted for interface symmetry; the
    algorithm does not need it.
    """
    ts = _canonical(terms)
    if not ts:
        raise ValueError("enumerate_orderings needs at least one term")
    family = [((ts[0],),)]
    for t in ts[1:]:
        nxt = []
        for classes in family:
            L = len(classes)
            candidates = [((t,),) + classes]
            for i in range(L):
                merged = tuple(sorted(classes[i] + (t,), key=LinearTerm.sort_key))
                candidates.append(classes[:i] + (merged,) + classes[i + 1:])
                candidates.append(classes[: i + 1] + ((t,),) + classes[i + 1:])
            nxt.extend(c for c in candidates if _feasible(c))
        family = nxt
    return [Ordering(c) for c in family]


def brute_force_orderings(terms: Iterable[LinearTerm]) -> list[Ordering]:
    """Every weak order of ``terms`` that passes :func:`feasible_rational` (reference implementation)."""
    ts = _canonical(terms)
    out = []
    for classes in _ordered_partitions(ts):
        classes = tuple(tuple(sorted(c, key=LinearTerm.sort_key)) for c in classes)
        if _feasible(classes):
            out.append(Ordering(classes))
    return out


def _ordered_partitions(items: Sequence):
    if not items:
        yield ()
        return
    n = len(items)
    # choose the first block as any nonempty subset, recurse on the rest
    for size in range(1, n + 1):
        for block in itertools.combinations(range(n), size):
            chosen = tuple(items[i] for i in block)
            rest = [items[i] for i in range(n) if i not in block]
            for tail in _ordered_partitions(rest):
                yield (chosen,) + tail


def ordering_formula(o: Ordering) -> Formula:
    """The conjunction of the chain's relations as core atoms."""
    parts = []
    for (a, rel), (b, _) in zip(o.chain, o.chain[1:]):
        if rel == LT:
            parts.append(Lt(a - b))
        else:
            parts.append(Not(Lt(a - b)))
            parts.append(Not(Lt(b - a)))
    if not parts:
        return TRUE
    return conj(*parts)


def orderings_with_zero(terms: Iterable[LinearTerm]) -> list[Ordering]:
    return enumerate_orderings(set(terms) | {ZERO})
