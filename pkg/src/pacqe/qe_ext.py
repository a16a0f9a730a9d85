"""Threshold and modulo counting quantifiers, the bottom-up driver and the sentence decider."""
from __future__ import annotations

import itertools

from . import faults
from .errors import CaseExplosion, MalformedFormula, OpenFormulaError, UnsupportedQuantifiedInput
from .formula import (
    TRUE,
    And,
    Const,
    CountEq,
    CountGeq,
    CountGeqConst,
    CountMod,
    Exists,
    ForAll,
    Formula,
    Lt,
    Mod,
    Not,
    Or,
    all_vars,
    conj,
    disj,
    evaluate_qf,
    free_vars,
    fresh_var,
    is_quantifier_free,
    make_mods_simple,
    neg,
    params_report,
    simple_mod,
)
from .orderings import feasible_rational
from .qe_core import AUDIT, EQ, GEQ, Audit, Pipeline, check_mods, eliminate_count_var
from .terms import LinearTerm

DEFAULT_MAX_THRESHOLD_E = 10**4
DEFAULT_MAX_TUPLES = 10**5


def _hom_bound(audit: Audit, pl: Pipeline, out: Formula, extra_terms: set, name: str):
    # measured before dropping false disjuncts: every ordering of the case table counts
    h = params_report(pl.body).num_hom
    homs = set(params_report(out).hom)
    for i in range(len(pl.table.orderings)):
        homs |= params_report(pl.table.ordering_formula(i)).hom
    homs |= {t.homogeneous() for t in extra_terms}
    bound = 4 * max(h, 1) ** 2
    audit.require(len(homs) <= bound, name, f"|Hom| = {len(homs)} > {bound}")


def minimal_tuples(p: tuple, need: int, limit: int = DEFAULT_MAX_TUPLES) -> list[tuple]:
    """Minimal nonnegative ``n`` with ``sum p_j n_j >= need``; coordinates with ``p_j = 0`` stay 0."""
    dims = len(p)
    live = [j for j in range(dims) if p[j] > 0]
    if need <= 0:
        return [tuple([0] * dims)]
    if not live:
        return []
    out: list = []
    cur = [0] * dims

    def rec(pos: int, remaining: int):
        j = live[pos]
        pj = p[j]
        if pos == len(live) - 1:
            n = -(-remaining // pj) if remaining > 0 else 0
            cur[j] = n
            cand = tuple(cur)
            if _is_minimal(cand, p, need):
                out.append(cand)
                if len(out) > limit:
                    raise CaseExplosion("threshold tuples", len(out), limit)
            cur[j] = 0
            return
        top = -(-remaining // pj) if remaining > 0 else 0
        for n in range(top + 1):
            cur[j] = n
            rec(pos + 1, remaining - pj * n)
        cur[j] = 0

    rec(0, need)
    return out


def _is_minimal(n: tuple, p: tuple, need: int) -> bool:
    total = sum(a * b for a, b in zip(n, p))
    if total < need:
        return False
    return all(total - p[j] < need for j in range(len(n)) if n[j] > 0)


def eliminate_threshold(c: int, y: str, body: Formula, max_cases: int | None = None,
                        max_threshold_e: int = DEFAULT_MAX_THRESHOLD_E, audit: Audit | None = None) -> Formula:
    """Quantifier-free equivalent of "at least ``c`` values of ``y`` satisfy ``body``"."""
    if c <= 0:
        return TRUE
    audit = audit if audit is not None else AUDIT
    z = fresh_var(all_vars(body))
    pl = Pipeline(y, body, z, max_cases=max_cases, audit=audit)
    m = pl.m
    feas_cache: dict = {}
    tuple_terms: set = set()
    out = []
    for rec in pl.all_records():
        g = pl.gamma(rec)
        if rec.infinite:
            out.append(g)
            continue
        e = m * c - rec.K
        if e <= 0:
            if faults.active(faults.DROP_E_SHORTCUT) and e < 0:
                # the literal [0, e] range is empty
                continue
            out.append(g)
            continue
        need = c - sum(rec.c) - sum(rec.rprime)
        if need <= 0:
            out.append(g)
            continue
        if need > max_threshold_e:
            raise CaseExplosion("threshold bound", need, max_threshold_e)
        info = pl.infos[rec.i]
        options = []
        for n in minimal_tuples(rec.p, need):
            bounds = tuple(0 if nj == 0 else dj + m * nj for nj, dj in zip(n, rec.d))
            audit.require(all(0 <= b <= e for b in bounds), "tuple-in-box", f"{bounds} vs e={e}")
            # a segment with n_j = 0 still has length at least d_j
            floor = sum(pj * (dj + m * nj) for pj, dj, nj in zip(rec.p, rec.d, n))
            audit.require(floor >= e, "tuple-covers-e", f"{bounds}, e={e}")
            key = (rec.i, bounds)
            ok = feas_cache.get(key)
            if ok is None:
                cs = pl.table.orderings[rec.i].constraints()
                extra = [LinearTerm.const(b - 1) - info.delta(j) for j, b in enumerate(bounds, start=2) if b > 1]
                ok = feasible_rational(list(cs.strict) + extra, cs.equal)
                feas_cache[key] = ok
            if not ok:
                continue
            lits = []
            for j, b in enumerate(bounds, start=2):
                if b > 1:
                    t = info.delta(j) - b
                    tuple_terms.add(t)
                    lits.append(Not(Lt(t)))
            options.append(conj(*lits))
        if options:
            out.append(conj(g, disj(*options)))
    result = disj(*out)
    _hom_bound(audit, pl, result, tuple_terms, "hom-threshold")
    return result


def eliminate_mod_count(x: str, q: int, y: str, body: Formula, max_cases: int | None = None,
                        audit: Audit | None = None) -> Formula:
    """Quantifier-free equivalent of "finitely many ``y`` satisfy ``body``, and their number is ``x`` mod ``q``"."""
    if x == y:
        raise MalformedFormula("count variable and bound variable must differ")
    if q < 1:
        raise MalformedFormula(f"modulus must be >= 1, got {q}")
    audit = audit if audit is not None else AUDIT
    z = fresh_var(all_vars(body) | {x})
    pl = Pipeline(y, body, z, max_cases=max_cases, audit=audit)
    m = pl.m
    mq = m * q
    Z = pl.table.Z
    U = tuple(sorted(set(Z) | {x}))
    n_cases = len(pl.table.orderings) * mq ** len(U)
    if max_cases is not None and n_cases > max_cases:
        raise CaseExplosion(f"{len(pl.table.orderings)} orderings x {mq}^{len(U)} refined residue maps", n_cases, max_cases)
    x_in_z = x in Z
    lift_ranges = [range(q)] * len(Z)
    out = []
    for rec in pl.all_records():
        if rec.infinite:
            continue
        S = pl.sum_term(rec)
        base = pl.table.ordering_formula(rec.i)
        for lift in itertools.product(*lift_ranges):
            s = {u: ru + m * a for u, ru, a in zip(Z, rec.r, lift)}
            sval = S.evaluate(s) % mq
            if x_in_z:
                candidates = [s[x]] if (m * s[x] - sval) % mq == 0 else []
            else:
                audit.require(sval % m == 0, "sum-divisible-by-m", f"S={sval} mod {mq}")
                cx = (sval // m) % q
                candidates = [cx + q * t for t in range(m)]
            for sx in candidates:
                full = dict(s)
                full[x] = sx
                res = [simple_mod(u, mq, full[u]) for u in U] if mq > 1 else []
                out.append(conj(base, *res))
    result = disj(*out)
    check_mods(audit, result, mq, bool(out), "mod-psi7")
    _hom_bound(audit, pl, result, set(), "hom-modcount")
    return result


def eliminate_all(f: Formula, max_cases: int | None = None, max_threshold_e: int = DEFAULT_MAX_THRESHOLD_E,
                  audit: Audit | None = None) -> Formula:
    """Eliminate every quantifier, innermost first."""
    kw = dict(max_cases=max_cases, audit=audit)
    if isinstance(f, (Lt, Mod)):
        return make_mods_simple(f)
    if isinstance(f, Const):
        return f
    if isinstance(f, Not):
        return neg(eliminate_all(f.arg, max_cases, max_threshold_e, audit))
    if isinstance(f, And):
        return conj(*(eliminate_all(a, max_cases, max_threshold_e, audit) for a in f.args))
    if isinstance(f, Or):
        return disj(*(eliminate_all(a, max_cases, max_threshold_e, audit) for a in f.args))
    body = eliminate_all(f.body, max_cases, max_threshold_e, audit)
    if isinstance(f, Exists):
        return eliminate_threshold(1, f.var, body, max_threshold_e=max_threshold_e, **kw)
    if isinstance(f, ForAll):
        return neg(eliminate_threshold(1, f.var, neg(body), max_threshold_e=max_threshold_e, **kw))
    if isinstance(f, CountGeq):
        return eliminate_count_var(GEQ, f.count, f.var, body, **kw)
    if isinstance(f, CountEq):
        return eliminate_count_var(EQ, f.count, f.var, body, **kw)
    if isinstance(f, CountGeqConst):
        return eliminate_threshold(f.threshold, f.var, body, max_threshold_e=max_threshold_e, **kw)
    if isinstance(f, CountMod):
        return eliminate_mod_count(f.count, f.modulus, f.var, body, **kw)
    raise UnsupportedQuantifiedInput(f"unknown node {type(f).__name__}")


def eliminate_single(f: Formula, max_cases: int | None = None, max_threshold_e: int = DEFAULT_MAX_THRESHOLD_E,
                     audit: Audit | None = None) -> Formula:
    """Eliminate one quantifier whose body is already quantifier-free."""
    if not isinstance(f, (Exists, ForAll, CountGeq, CountEq, CountGeqConst, CountMod)):
        raise UnsupportedQuantifiedInput("single mode needs a quantifier at the top")
    if not is_quantifier_free(f.body):
        raise UnsupportedQuantifiedInput("single mode needs a quantifier-free body")
    return eliminate_all(f, max_cases, max_threshold_e, audit)


def decide(sentence: Formula, max_cases: int | None = None, max_threshold_e: int = DEFAULT_MAX_THRESHOLD_E,
           audit: Audit | None = None) -> bool:
    """Truth value of a sentence."""
    fv = free_vars(sentence)
    if fv:
        raise OpenFormulaError(fv)
    return evaluate_qf(eliminate_all(sentence, max_cases, max_threshold_e, audit), {})
