"""Elimination of a single counting quantifier over a quantifier-free body.

The pipeline turns ``count >= x`` (or ``count = x``) for the values of ``y``
satisfying a body into a quantifier-free formula:

1. scale so that every coefficient of ``y`` is 1 or -1 (``normalize_coeffs``);
2. split into cases: an ordering of the ``y``-free terms together with a
   residue class modulo ``m`` for every other variable (``build_case_table``);
3. cut the line of ``y`` into segments between the ordered terms and reduce
   the body on each segment to a formula over ``y`` alone (``residual_mod_formula``);
4. count the solutions on each segment (``segment_counts``);
5. add the counts up into one linear inequality (``eliminate_count_var``).

Every run checks its parameter bounds and raises ``PipelineInvariantError``
when one fails.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from . import faults, kernels
from .errors import (
    CaseExplosion,
    MalformedFormula,
    PipelineInvariantError,
    UnsupportedQuantifiedInput,
)
from .formula import (
    FALSE,
    TRUE,
    And,
    Const,
    CountEq,
    CountGeq,
    Exists,
    Formula,
    Lt,
    Mod,
    Not,
    Or,
    atoms,
    conj,
    disj,
    eq,
    free_vars,
    fresh_var,
    is_quantifier_free,
    lcm_of,
    make_mods_simple,
    map_atoms,
    neg,
    params_report,
    simple_mod,
    simplify_mod_constraint,
    substitute,
    all_vars,
)
from .orderings import Ordering, enumerate_orderings, ordering_formula
from .terms import ZERO, LinearTerm

GEQ = "GEQ"
EQ = "EQ"

__all__ = [
    "GEQ",
    "EQ",
    "Audit",
    "AUDIT",
    "CaseTable",
    "SegmentDescriptor",
    "SegmentCount",
    "CaseRecord",
    "Pipeline",
    "simplify_mod_constraint",
    "normalize_coeffs",
    "build_case_table",
    "segments",
    "residual_mod_formula",
    "segment_counts",
    "eliminate_count_var",
    "trace_steps",
]


# ---------------------------------------------------------------------------
# invariant bookkeeping


class Audit:
    """Counts invariant checks by name; a failed check raises immediately."""

    def __init__(self):
        self.checks: Counter = Counter()
        self.vacuous: Counter = Counter()

    def require(self, cond: bool, name: str, detail: str = ""):
        if not cond:
            raise PipelineInvariantError(f"invariant {name} violated{': ' + detail if detail else ''}")
        self.checks[name] += 1

    def skip(self, name: str):
        self.vacuous[name] += 1

    def reset(self):
        self.checks.clear()
        self.vacuous.clear()

    def summary(self) -> dict:
        return {"checks": dict(sorted(self.checks.items())), "vacuous": dict(sorted(self.vacuous.items())), "violations": 0}


AUDIT = Audit()


# ---------------------------------------------------------------------------
# Step I


def normalize_coeffs(body: Formula, y: str) -> tuple[Formula, int]:
    """Scale ``body`` so that ``y`` only occurs with coefficients -1, 0, 1.

    Returns ``(body1, k)`` where ``k`` is the lcm of the absolute
    ``y``-coefficients of the inequalities and ``body1`` is the rewritten body
    (with ``k*y`` renamed to ``y``) conjoined with ``y = 0 (mod k)``.
    """
    k = lcm_of(a.term.coef(y) for a in atoms(body) if isinstance(a, Lt) and a.term.coef(y))
    ky = LinearTerm.var(y, k)

    def scale(a):
        c = a.term.coef(y)
        if c == 0:
            return a
        if isinstance(a, Lt):
            return Lt(a.term * (k // abs(c)))
        if not a.is_simple():
            raise MalformedFormula(f"modulo constraint on {y} is not simple: {a}")
        return Mod(ky, k * a.modulus, k * a.residue)

    body1 = substitute(map_atoms(body, scale), ky, LinearTerm.var(y))
    if faults.active(faults.DROP_Y_MOD_K):
        return body1, k
    return conj(simple_mod(y, k, 0), body1), k


# ---------------------------------------------------------------------------
# Step II


@dataclass
class CaseTable:
    y: str
    x: str | None
    k: int
    m: int
    Z: tuple
    T: tuple
    orderings: list
    body1: Formula

    @property
    def num_residue_maps(self) -> int:
        return self.m ** len(self.Z)

    @property
    def num_cases(self) -> int:
        return len(self.orderings) * self.num_residue_maps

    def residue_maps(self) -> Iterator[tuple]:
        return itertools.product(range(self.m), repeat=len(self.Z))

    def cases(self) -> Iterator[tuple]:
        """Lazily yield every ``(ordering index, residue map)`` pair."""
        for i in range(len(self.orderings)):
            for r in self.residue_maps():
                yield i, r

    @cached_property
    def _ordering_formulas(self) -> list:
        return [ordering_formula(o) for o in self.orderings]

    def ordering_formula(self, i: int) -> Formula:
        return self._ordering_formulas[i]

    def residue_atoms(self, r: Sequence[int]) -> list:
        if self.m == 1:
            return []
        return [simple_mod(z, self.m, rz) for z, rz in zip(self.Z, r)]

    def gamma(self, i: int, r: Sequence[int]) -> Formula:
        return conj(self.ordering_formula(i), *self.residue_atoms(r))


def _t_term(t: LinearTerm, y: str) -> LinearTerm:
    c = t.coef(y)
    if c == 0:
        return t
    s = t.without(y)
    if c == 1:
        return -s  # y + s < 0  means  y < -s
    if c == -1:
        return s  # -y + s < 0  means  s < y
    raise PipelineInvariantError(f"coefficient {c} of {y} left after normalisation in {t}")


def build_case_table(body1: Formula, y: str, x: str | None = None, m: int | None = None,
                     max_cases: int | None = None, k: int = 1) -> CaseTable:
    """Orderings of the ``y``-free terms and the residue-map family for ``body1``."""
    lin = sorted({a.term for a in atoms(body1) if isinstance(a, Lt)}, key=LinearTerm.sort_key)
    T = tuple(sorted({_t_term(t, y) for t in lin}, key=LinearTerm.sort_key))
    if m is None:
        m = lcm_of(a.modulus for a in atoms(body1) if isinstance(a, Mod))
    Z = tuple(sorted(free_vars(body1) - {y}))
    orderings = enumerate_orderings(set(T) | {ZERO})
    ct = CaseTable(y=y, x=x, k=k, m=m, Z=Z, T=T, orderings=orderings, body1=body1)
    if max_cases is not None and ct.num_cases > max_cases:
        raise CaseExplosion(
            f"{len(orderings)} orderings x {m}^{len(Z)} residue maps", ct.num_cases, max_cases
        )
    return ct


# ---------------------------------------------------------------------------
# Step III


@dataclass(frozen=True)
class SegmentDescriptor:
    """A region of the line of ``y``: ``below``, ``at`` class ``j``, ``between`` ``j-1`` and ``j``, or ``above``.

    Class indices are 1-based as in t'_1 < ... < t'_l; ``index`` is the
    position 0..2l in the segment sequence.
    """

    kind: str
    j: int
    index: int


def segments(o: Ordering) -> list[SegmentDescriptor]:
    ell = len(o.classes)
    out = [SegmentDescriptor("below", 1, 0)]
    for j in range(1, ell + 1):
        out.append(SegmentDescriptor("at", j, 2 * j - 1))
        if j < ell:
            out.append(SegmentDescriptor("between", j + 1, 2 * j))
    out.append(SegmentDescriptor("above", ell, 2 * ell))
    return out


def segment_formula(o: Ordering, seg: SegmentDescriptor, y: str) -> Formula:
    reps = o.distinct
    Y = LinearTerm.var(y)
    if seg.kind == "below":
        return Lt(Y - reps[0])
    if seg.kind == "above":
        return Lt(reps[-1] - Y)
    if seg.kind == "at":
        return eq(Y, reps[seg.j - 1])
    return conj(Lt(reps[seg.j - 2] - Y), Lt(Y - reps[seg.j - 1]))


class _OrderingInfo:
    """Per-ordering decisions for the inequalities of ``body1``."""

    def __init__(self, o: Ordering, lt_atoms: list, y: str, Z: tuple):
        self.o = o
        self.ell = len(o.classes)
        cls = o.class_of
        zero_cls = cls[ZERO]
        self.reps = o.distinct
        # decision per Lt atom: ("fixed", bool) | ("below", pos) | ("above", pos)
        self.lt: dict = {}
        for a in lt_atoms:
            c = a.term.coef(y)
            u = _t_term(a.term, y)
            pos = 2 * cls[u] + 1
            if c == 0:
                self.lt[a] = ("fixed", cls[u] < zero_cls)
            elif c == 1:
                self.lt[a] = ("below", pos)  # y < u
            else:
                self.lt[a] = ("above", pos)  # u < y
        self.rep_coefs = [[t.coef(z) for z in Z] for t in self.reps]
        self.rep_consts = [t.constant for t in self.reps]
        for t in self.reps:
            extra = t.vars - set(Z)
            if extra:
                raise PipelineInvariantError(f"term {t} mentions non-case variables {sorted(extra)}")

    def lt_truth(self, a, seg_index: int) -> bool:
        kind, v = self.lt[a]
        if kind == "fixed":
            return v
        if kind == "below":
            return seg_index < v
        return seg_index > v

    def delta(self, j: int) -> LinearTerm:
        """t'_j - t'_{j-1} for 2 <= j <= l."""
        return self.reps[j - 1] - self.reps[j - 2]


def _partial_eval(f: Formula, decide) -> Formula:
    """Replace atoms for which ``decide`` returns a bool and fold constants."""
    if isinstance(f, (Lt, Mod)):
        v = decide(f)
        if v is None:
            return f
        return TRUE if v else FALSE
    if isinstance(f, Const):
        return f
    if isinstance(f, Not):
        return neg(_partial_eval(f.arg, decide))
    if isinstance(f, And):
        return conj(*(_partial_eval(a, decide) for a in f.args))
    if isinstance(f, Or):
        return disj(*(_partial_eval(a, decide) for a in f.args))
    raise UnsupportedQuantifiedInput(f"residual evaluation met a {type(f).__name__} node")


def _flatten(f: Formula) -> tuple[list, list]:
    """Postorder program for a quantifier-free formula plus its distinct atoms.

    Shared subterms are emitted once; atom entries index into the atom list.
    """
    prog: list = []
    index: dict = {}
    atom_ids: dict = {}
    uniq: list = []

    def visit(g):
        hit = index.get(id(g))
        if hit is not None:
            return hit
        if isinstance(g, (Lt, Mod)):
            k = atom_ids.get(g)
            if k is None:
                k = atom_ids[g] = len(uniq)
                uniq.append(g)
            prog.append(("atom", k))
        elif isinstance(g, Const):
            prog.append(("const", g.value))
        elif isinstance(g, Not):
            prog.append(("not", visit(g.arg)))
        elif isinstance(g, (And, Or)):
            kids = [visit(a) for a in g.args]
            prog.append(("and" if isinstance(g, And) else "or", kids))
        else:
            raise UnsupportedQuantifiedInput(f"residual evaluation met a {type(g).__name__} node")
        index[id(g)] = len(prog) - 1
        return index[id(g)]

    visit(f)
    return prog, uniq


def _decider(info: _OrderingInfo, seg_index: int, y: str, r_of: dict):
    def decide(a):
        if isinstance(a, Lt):
            if a not in info.lt:
                raise PipelineInvariantError(f"undecidable inequality {a}")
            return info.lt_truth(a, seg_index)
        if a.term.coef(y):
            return None
        if not a.is_simple():
            raise PipelineInvariantError(f"non-simple modulo constraint {a} in the normalised body")
        return r_of[a.var] % a.modulus == a.residue

    return decide


def residual_mod_formula(case: tuple, seg: SegmentDescriptor, ct: CaseTable) -> Formula:
    """The body reduced on one case and segment: a Boolean combination of constraints on ``y`` alone."""
    i, r = case
    info = _OrderingInfo(ct.orderings[i], [a for a in atoms(ct.body1) if isinstance(a, Lt)], ct.y, ct.Z)
    r_of = dict(zip(ct.Z, r))
    return _partial_eval(ct.body1, _decider(info, seg.index, ct.y, r_of))


# ---------------------------------------------------------------------------
# Step IV


class _Bits:
    """Bit-parallel evaluation of a y-only formula over the residues [0, m)."""

    def __init__(self, m: int):
        self.m = m
        self.full = (1 << m) - 1
        self._mods: dict = {}

    def mod_mask(self, q: int, r: int) -> int:
        key = (q, r)
        hit = self._mods.get(key)
        if hit is None:
            hit = 0
            for v in range(r % q, self.m, q):
                hit |= 1 << v
            self._mods[key] = hit
        return hit

    def evaluate(self, f: Formula) -> int:
        if isinstance(f, Mod):
            if self.m % f.modulus:
                raise PipelineInvariantError(f"modulus {f.modulus} does not divide m={self.m}")
            return self.mod_mask(f.modulus, f.residue)
        if isinstance(f, Const):
            return self.full if f.value else 0
        if isinstance(f, Not):
            return self.full ^ self.evaluate(f.arg)
        if isinstance(f, And):
            out = self.full
            for a in f.args:
                out &= self.evaluate(a)
                if not out:
                    break
            return out
        if isinstance(f, Or):
            out = 0
            for a in f.args:
                out |= self.evaluate(a)
                if out == self.full:
                    break
            return out
        raise PipelineInvariantError(f"residual formula contains {f!r}")

    def as_list(self, mask: int) -> list[int]:
        return [(mask >> v) & 1 for v in range(self.m)]


@dataclass
class SegmentCount:
    """Counts for one segment: ``c`` for a point segment, the rest for an open interval."""

    kind: str
    c: int | None = None
    p: int | None = None
    u_lo: int | None = None
    u_hi: int | None = None
    rprime: int | None = None
    r: int | None = None


def _pattern_of(beta: Formula, m: int) -> list[int]:
    bits = _Bits(m)
    return bits.as_list(bits.evaluate(beta))


def segment_counts(case: tuple, seg: SegmentDescriptor, beta: Formula, m: int, ct: CaseTable | None = None,
                   residues: Sequence[int] | None = None) -> SegmentCount:
    """Counts for an ``at`` or ``between`` segment.

    ``residues`` gives r(t'_1) ... r(t'_l) mod m directly; otherwise they are
    computed from the case and ``ct``.
    """
    if residues is None:
        i, r = case
        o = ct.orderings[i]
        nu = dict(zip(ct.Z, r))
        residues = [t.evaluate(nu) % m for t in o.distinct]
    pat = _pattern_of(beta, m)
    if seg.kind == "at":
        return SegmentCount("at", c=pat[residues[seg.j - 1] % m])
    if seg.kind != "between":
        raise ValueError("segment_counts applies to point and interval segments only")
    p = sum(pat)
    lo = residues[seg.j - 2] % m
    hi = lo + (residues[seg.j - 1] - lo - 1) % m + 1
    rprime = sum(pat[u % m] for u in range(lo + 1, hi))
    return SegmentCount("between", p=p, u_lo=lo, u_hi=hi, rprime=rprime, r=-p * (hi - lo) + m * rprime)


@dataclass
class CaseRecord:
    """Everything Step V needs for one case ``(i, r)``."""

    i: int
    r: tuple
    infinite: bool
    p: tuple = ()
    c: tuple = ()
    d: tuple = ()
    rprime: tuple = ()
    rj: tuple = ()
    K: int = 0  # sum of r_j plus m times the sum of c_j
    group: int = 0


class Pipeline:
    """Steps I to IV for ``#{y : body}`` with case records streamed per ordering."""

    def __init__(self, y: str, body: Formula, count_var: str | None = None, max_cases: int | None = None,
                 audit: Audit | None = None):
        if not is_quantifier_free(body):
            raise UnsupportedQuantifiedInput("the body of an eliminated quantifier must be quantifier-free")
        self.audit = audit if audit is not None else AUDIT
        self.y = y
        self.x = count_var
        self.body = body
        simple = make_mods_simple(body)
        self.body1, self.k = normalize_coeffs(simple, y)
        self.base_mods = params_report(body).mods
        self.m = self.k * lcm_of(self.base_mods)
        self.table = build_case_table(self.body1, y, count_var, m=self.m, max_cases=max_cases, k=self.k)
        m = self.m
        for a in atoms(self.body1):
            if isinstance(a, Mod):
                self.audit.require(m % a.modulus == 0, "m-multiple-of-moduli", f"{a.modulus} does not divide {m}")
        self.audit.require(m % self.k == 0, "m-multiple-of-k")
        self.audit.require(
            m == self.k * lcm_of(self.base_mods), "m-equals-k-lcm", f"m={m}, k={self.k}"
        )
        for a in atoms(self.body1):
            self.audit.require(a.term.coef(y) in (-1, 0, 1), "step1-unit-coefficients", str(a))
        self.lt_atoms = sorted({a for a in atoms(self.body1) if isinstance(a, Lt)}, key=lambda a: a.term.sort_key())
        self.ymods = []  # y-free simple modulo atoms, decided by the residue map
        zi = {z: i for i, z in enumerate(self.table.Z)}
        seen = set()
        for a in atoms(self.body1):
            if isinstance(a, Mod) and not a.term.coef(y) and a not in seen:
                if not a.is_simple():
                    raise PipelineInvariantError(f"non-simple modulo constraint {a}")
                seen.add(a)
                self.ymods.append((a, zi[a.var]))
        self.ymods.sort(key=lambda p: (p[0].term.sort_key(), p[0].modulus, p[0].residue))
        self.bits = _Bits(m)
        self.infos = [_OrderingInfo(o, self.lt_atoms, y, self.table.Z) for o in self.table.orderings]
        self._beta_cache: dict = {}
        self._sum_cache: dict = {}
        self._flat = None

    # -- residual patterns -------------------------------------------------

    def ymod_key(self, r: Sequence[int]) -> tuple:
        return tuple(r[zi] % a.modulus == a.residue for a, zi in self.ymods)

    def beta(self, i: int, seg_index: int, key: tuple) -> Formula:
        truths = {a: v for (a, _), v in zip(self.ymods, key)}
        info = self.infos[i]
        y = self.y

        def decide(a):
            if isinstance(a, Lt):
                return info.lt_truth(a, seg_index)
            if a.term.coef(y):
                return None
            return truths[a]

        return _partial_eval(self.body1, decide)

    def patterns(self, i: int, key: tuple) -> list[int]:
        """Bit masks over [0, m) of the residual formula on each of the 2l+1 segments.

        Equivalent to evaluating ``beta`` on every segment; all segments are
        handled in one pass with one block of m bits per segment.
        """
        ck = (i, key)
        hit = self._beta_cache.get(ck)
        if hit is None:
            hit = self._wide_patterns(i, key)
            self._beta_cache[ck] = hit
        return hit

    def _wide_patterns(self, i: int, key: tuple) -> list[int]:
        if self._flat is None:
            self._flat = _flatten(self.body1)
        prog, uniq = self._flat
        info = self.infos[i]
        m = self.m
        y = self.y
        nseg = 2 * info.ell + 1
        full = (1 << m) - 1
        every = (1 << (nseg * m)) - 1
        unit = every // full  # one set bit at the start of each block
        truths = {a: v for (a, _), v in zip(self.ymods, key)}
        avals = []
        for a in uniq:
            if isinstance(a, Lt):
                kind, v = info.lt.get(a, (None, None))
                if kind is None:
                    raise PipelineInvariantError(f"undecidable inequality {a}")
                if kind == "fixed":
                    avals.append(every if v else 0)
                elif kind == "below":
                    avals.append((1 << (v * m)) - 1)
                else:
                    avals.append(every ^ ((1 << ((v + 1) * m)) - 1))
            elif a.term.coef(y):
                if m % a.modulus or not a.is_simple():
                    raise PipelineInvariantError(f"unexpected modulo constraint {a} on {y}")
                avals.append(self.bits.mod_mask(a.modulus, a.residue) * unit)
            else:
                avals.append(every if truths[a] else 0)
        vals = []
        for op, arg in prog:
            if op == "atom":
                vals.append(avals[arg])
            elif op == "const":
                vals.append(every if arg else 0)
            elif op == "not":
                vals.append(every ^ vals[arg])
            elif op == "and":
                out = every
                for j in arg:
                    out &= vals[j]
                vals.append(out)
            else:
                out = 0
                for j in arg:
                    out |= vals[j]
                vals.append(out)
        top = vals[-1]
        return [(top >> (s * m)) & full for s in range(nseg)]

    # -- cases ---------------------------------------------------------------

    def _residues(self, i: int, rows: list) -> list:
        info = self.infos[i]
        m = self.m
        if not rows:
            return []
        if m < (1 << 20) and len(self.table.Z) < 64:
            R = np.array(rows, dtype=np.int64).reshape(len(rows), len(self.table.Z))
            C = np.array([[c % m for c in row] for row in info.rep_coefs], dtype=np.int64).reshape(info.ell, len(self.table.Z))
            k = np.array([c % m for c in info.rep_consts], dtype=np.int64)
            return ((R @ C.T + k) % m).tolist()
        return [[(sum(c * v for c, v in zip(crow, r)) + k) % m for crow, k in zip(info.rep_coefs, info.rep_consts)] for r in rows]

    def records(self, i: int) -> Iterator[CaseRecord]:
        """Case records for ordering ``i`` in residue-map order."""
        info = self.infos[i]
        m = self.m
        ell = info.ell
        rows = list(self.table.residue_maps())
        vals = self._residues(i, rows)
        groups: dict = {}
        order = []
        for idx, r in enumerate(rows):
            key = self.ymod_key(r)
            g = groups.get(key)
            if g is None:
                g = groups[key] = []
                order.append(key)
            g.append(idx)
        results: dict = {}
        for gi, key in enumerate(order):
            pats = self.patterns(i, key)
            infinite = bool(pats[0] or pats[2 * ell])
            idxs = groups[key]
            if infinite:
                for idx in idxs:
                    results[idx] = (gi, True, None, None, None)
                continue
            p = tuple(pats[2 * j].bit_count() for j in range(1, ell))
            sub = [vals[idx] for idx in idxs]
            if faults.active(faults.U_HI_OFF_BY_ONE):
                cs, ds, rps = _faulty_segment_table(pats, sub, m)
            else:
                cs, ds, rps = kernels.segment_table([self.bits.as_list(b) for b in pats], sub, m)
            for idx, c, d, rp in zip(idxs, cs, ds, rps):
                results[idx] = (gi, False, p, c, d, rp)
        audit = self.audit
        for idx, r in enumerate(rows):
            res = results[idx]
            if res[1]:
                yield CaseRecord(i=i, r=r, infinite=True, group=res[0])
                continue
            gi, _, p, c, d, rp = res
            rj = tuple(-pj * dj + m * rpj for pj, dj, rpj in zip(p, d, rp))
            for cj in c:
                audit.require(cj in (0, 1), "c-in-0-1", str(cj))
            for pj, dj, rpj, rjj in zip(p, d, rp, rj):
                audit.require(0 <= pj <= m, "p-in-0-m", f"p={pj}, m={m}")
                audit.require(0 <= rpj <= m, "rprime-in-0-m", f"r'={rpj}, m={m}")
                audit.require(-m * m <= rjj <= m * m, "r-in-range", f"r={rjj}, m={m}")
                if not faults.active(faults.U_HI_OFF_BY_ONE):
                    audit.require(1 <= dj <= m, "u-gap-in-1-m", f"d={dj}, m={m}")
            K = sum(rj) + m * sum(c)
            yield CaseRecord(i=i, r=r, infinite=False, p=p, c=tuple(c), d=tuple(d), rprime=tuple(rp), rj=rj, K=K,
                             group=gi)

    def all_records(self) -> Iterator[CaseRecord]:
        for i in range(len(self.infos)):
            yield from self.records(i)

    def gamma(self, rec: CaseRecord) -> Formula:
        return self.table.gamma(rec.i, rec.r)

    def sum_term(self, rec: CaseRecord) -> LinearTerm:
        """S = sum_j (p_j (t'_j - t'_{j-1}) + r_j) + m * sum_j c_j for a finite case."""
        key = (rec.i, rec.p)
        base = self._sum_cache.get(key)
        if base is None:
            info = self.infos[rec.i]
            base = ZERO
            for j, pj in enumerate(rec.p, start=2):
                if pj:
                    base = base + info.delta(j) * pj
            self._sum_cache[key] = base
        return base + rec.K


def _faulty_segment_table(pats, vals, m):
    # u_hi taken as the smallest value >= u_lo instead of > u_lo
    bits = [[(b >> v) & 1 for v in range(m)] for b in pats]
    ell = len(vals[0]) if vals else 0
    cs, ds, rps = [], [], []
    for row in vals:
        cs.append([bits[2 * j + 1][row[j]] for j in range(ell)])
        drow, rrow = [], []
        for j in range(ell - 1):
            lo = row[j]
            hi = lo + (row[j + 1] - lo) % m
            drow.append(hi - lo)
            rrow.append(sum(bits[2 * j + 2][u % m] for u in range(lo + 1, hi)))
        ds.append(drow)
        rps.append(rrow)
    return cs, ds, rps


# ---------------------------------------------------------------------------
# Step V


def _step_v(mode: str, S: LinearTerm, mx: LinearTerm) -> Formula:
    if mode == GEQ:
        if faults.active(faults.FLIP_STEP_V):
            return Lt(mx - S)
        return Not(Lt(S - mx))
    return And((Not(Lt(S - mx)), Not(Lt(mx - S))))


def check_mods(audit: Audit, out: Formula, modulus: int, expect_present: bool, name: str):
    mods = params_report(out).mods
    audit.require(mods <= {1, modulus}, name, f"moduli {sorted(mods)} vs {{{modulus}}}")
    if expect_present and modulus > 1:
        audit.require(modulus in mods, name + "-present", f"moduli {sorted(mods)} lack {modulus}")
    else:
        audit.skip(name + "-present")


def eliminate_count_var(mode: str, x: str, y: str, body: Formula, max_cases: int | None = None,
                        audit: Audit | None = None) -> Formula:
    """Quantifier-free equivalent of ``count(y : body) >= x`` (GEQ) or ``= x`` (EQ)."""
    if mode not in (GEQ, EQ):
        raise ValueError(f"mode must be {GEQ} or {EQ}")
    if x == y:
        raise MalformedFormula("count variable and bound variable must differ")
    pl = Pipeline(y, body, x, max_cases=max_cases, audit=audit)
    audit = pl.audit
    mx = LinearTerm.var(x, pl.m)
    x_in_body = x in free_vars(body)
    out = []
    emitted = 0
    for rec in pl.all_records():
        g = pl.gamma(rec)
        if rec.infinite:
            if mode == GEQ or faults.active(faults.EQ_INFINITE_TRUE):
                out.append(g)
                emitted += 1
            continue
        S = pl.sum_term(rec)
        if not x_in_body:
            audit.require(S.coef(x) == 0, "x-only-on-left", str(S))
        out.append(conj(g, _step_v(mode, S, mx)))
        emitted += 1
    result = disj(*out)
    check_mods(audit, result, pl.m, bool(pl.table.Z) and emitted > 0, "mod-psi5")
    return result


# ---------------------------------------------------------------------------
# intermediate formulae


def trace_steps(mode: str, x: str, y: str, body: Formula, max_cases: int | None = None,
                audit: Audit | None = None) -> list[Formula]:
    """The chain Psi_0 ... Psi_5 for one counting quantifier (GEQ or EQ)."""
    count = CountGeq if mode == GEQ else CountEq
    pl = Pipeline(y, body, x, max_cases=max_cases, audit=audit)
    ct = pl.table
    taken = set(all_vars(body)) | {x, y}
    psi0 = count(x, y, body)
    psi1 = count(x, y, pl.body1)
    mx = LinearTerm.var(x, pl.m)
    X = LinearTerm.var(x)
    psi2, psi3, psi4, psi5 = [], [], [], []
    for rec in pl.all_records():
        g = pl.gamma(rec)
        info = pl.infos[rec.i]
        o = ct.orderings[rec.i]
        ell = info.ell
        psi2.append(conj(g, psi1))
        # Step III: one counting quantifier per segment
        key = pl.ymod_key(rec.r)
        segs = segments(o)
        names = []
        parts = []
        for seg in segs:
            v = fresh_var(taken | set(names), "x")
            names.append(v)
            parts.append(count(v, y, conj(segment_formula(o, seg, y), pl.beta(rec.i, seg.index, key))))
        total = sum((LinearTerm.var(v) for v in names), ZERO)
        psi3.append(conj(g, _block(names, _link(mode, total, X), parts)))
        # Step IV
        if rec.infinite:
            psi4.append(g if mode == GEQ else FALSE)
            psi5.append(g if mode == GEQ else FALSE)
            continue
        bnames = []
        cparts = []
        for j in range(2, ell + 1):
            v = fresh_var(taken | set(bnames), "x")
            bnames.append(v)
            bound = info.delta(j) * rec.p[j - 2] + rec.rj[j - 2]
            V = LinearTerm.var(v, pl.m)
            cparts.append(Not(Lt(bound - V)) if mode == GEQ else eq(V, bound))
        total = sum((LinearTerm.var(v) for v in bnames), ZERO) + sum(rec.c)
        psi4.append(conj(g, _block(bnames, _link(mode, total, X), cparts)))
        psi5.append(conj(g, _step_v(mode, pl.sum_term(rec), mx)))
    return [psi0, psi1, disj(*psi2), disj(*psi3), disj(*psi4), disj(*psi5)]


def _link(mode: str, total: LinearTerm, X: LinearTerm) -> Formula:
    if mode == GEQ:
        return Not(Lt(total - X))
    return And((Not(Lt(total - X)), Not(Lt(X - total))))


def _block(names: list, link: Formula, parts: list) -> Formula:
    body = conj(link, *parts)
    for v in reversed(names):
        body = Exists(v, body)
    return body
