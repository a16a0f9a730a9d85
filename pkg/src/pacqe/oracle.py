"""Brute-force counting semantics, random formula generation and the differential test loop.

The oracle never looks at orderings, residue cases or segments.  It counts
solutions of a formula along one variable by enumerating a window of
integers and checking that both tails of the truth pattern have settled
into a period; anything it cannot verify is reported as inconclusive.
"""
from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from math import lcm
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .errors import CaseExplosion, IncompleteAssignment, OracleResourceError, PacqeError, PipelineInvariantError
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
    atoms,
    children,
    conj,
    eq,
    eval_atom,
    ge,
    le,
    lt,
    free_vars,
    is_quantifier_free,
    neg,
)
from .qe_core import Audit
from .terms import LinearTerm

WINDOW_CAP = 1 << 16


# ---------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class Finite:
    n: int


@dataclass(frozen=True)
class Infinite:
    pass


@dataclass(frozen=True)
class Inconclusive:
    reason: str


CountResult = Finite | Infinite | Inconclusive
INFINITE = Infinite()


class InconclusiveError(PacqeError):
    """Raised by :func:`oracle_eval` when a count it depends on could not be verified."""


@dataclass
class OracleConfig:
    window: int = 256
    probe: int = 2  # the tail check compares ``probe`` consecutive periods
    box: int = 30
    samples: int = 200
    seed: int = 0
    cap: int = WINDOW_CAP

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be positive")
        if self.probe < 1:
            raise ValueError("probe multiplier must be positive")


# ---------------------------------------------------------------------------
# the evaluator


def _period(f: Formula, var: str) -> int:
    """Probe period: lcm of the moduli times lcm of the coefficients of ``var``.

    Below a quantifier the coefficients of the bound variables shape the period
    too, so for formulas that are not quantifier-free every coefficient counts.
    """
    qf = is_quantifier_free(f)
    mods = [1]
    coefs = [1]
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, (Lt, Mod)):
            if isinstance(g, Mod):
                mods.append(g.modulus)
            if qf:
                coefs.append(abs(g.term.coef(var)) or 1)
            else:
                coefs.extend(abs(c) for _, c in g.term.coeffs)
        else:
            if isinstance(g, CountMod):
                mods.append(g.modulus)
            stack.extend(children(g))
    return lcm(*mods) * lcm(*coefs)


class Oracle:
    """Memoizing evaluator; one instance per formula family keeps the caches useful."""

    def __init__(self, cfg: OracleConfig | None = None, backend: str | None = None):
        self.cfg = cfg or OracleConfig()
        self.backend = backend
        self._fv: dict = {}
        self._progs: dict = {}
        self._counts: dict = {}
        self._truth: dict = {}
        self._negs: dict = {}

    # -- caches keyed by node identity; the node itself is kept alive in the value

    def fv(self, f: Formula) -> frozenset:
        hit = self._fv.get(id(f))
        if hit is None:
            hit = (f, free_vars(f))
            self._fv[id(f)] = hit
        return hit[1]

    def prog(self, f: Formula, variables=None) -> kernels.Program:
        key = (id(f), variables)
        hit = self._progs.get(key)
        if hit is None:
            hit = (f, kernels.compile_qf(f, variables))
            self._progs[key] = hit
        return hit[1]

    def _restrict(self, f, nu, drop=None):
        try:
            return tuple((v, nu[v]) for v in sorted(self.fv(f)) if v != drop)
        except KeyError as exc:
            raise IncompleteAssignment(exc.args[0]) from None

    # -- counting along one variable

    def count_line(self, f: Formula, var: str, nu: Mapping[str, int]) -> CountResult:
        key = (id(f), var, self._restrict(f, nu, var))
        hit = self._counts.get(key)
        if hit is not None:
            return hit[1]
        res = self._count_line(f, var, nu)
        self._counts[key] = (f, res)
        return res

    def _count_line(self, f, var, nu):
        if var not in self.fv(f):
            try:
                return INFINITE if self.eval(f, nu) else Finite(0)
            except InconclusiveError as exc:
                return Inconclusive(str(exc))
        prof = self.profile(f, var, nu)
        if isinstance(prof, Inconclusive):
            return prof
        pat, _lo, left, right = prof
        if left or right:
            return INFINITE
        return Finite(int(pat.sum()))

    def _start_window(self, f, var, nu, P):
        cfg = self.cfg
        tail = cfg.probe * P
        if is_quantifier_free(f):
            # exact: beyond every sign change the pattern repeats with period P
            h = 0
            for a in atoms(f):
                c = a.term.coef(var)
                if isinstance(a, Lt) and c:
                    b = a.term.without(var).evaluate(nu)
                    h = max(h, abs(b) // abs(c) + 1)
            return max(cfg.window, h + tail + P + 1, (cfg.probe + 1) * P), True
        h = 0
        for a in atoms(f):
            b = a.term.constant
            for v, c in a.term.coeffs:
                if v in nu and v != var:
                    b += c * nu[v]
            h = max(h, abs(b))
        stack = [f]
        while stack:
            g = stack.pop()
            if isinstance(g, (CountGeq, CountEq, CountMod)) and g.count in nu and g.count != var:
                h = max(h, abs(nu[g.count]))
            elif isinstance(g, CountGeqConst):
                h = max(h, abs(g.threshold))
            stack.extend(children(g))
        return max(cfg.window, 4 * h + 3 * P, (cfg.probe + 1) * P), False

    def profile(self, f: Formula, var: str, nu: Mapping[str, int]):
        """Truth pattern of ``f`` over a verified window: ``(pattern, lo, left_tail_true, right_tail_true)``."""
        P = _period(f, var)
        W, exact = self._start_window(f, var, nu, P)
        if W > self.cfg.cap:
            raise OracleResourceError(f"window {W} for {var} exceeds the cap {self.cfg.cap}")
        tail = self.cfg.probe * P
        while True:
            pat = self.truth_vector(f, var, nu, -W, W)
            n = len(pat)
            right = pat[n - tail - P:]
            left = pat[: tail + P]
            ok = bool(np.array_equal(right[P:], right[:-P]) and np.array_equal(left[P:], left[:-P]))
            if ok:
                return pat, -W, bool(left.any()), bool(right.any())
            if exact:
                raise AssertionError("quantifier-free pattern failed its exact tail check")
            if W >= self.cfg.cap:
                return Inconclusive(f"no period-{P} tail for {var} within window {W}")
            W = min(2 * W, self.cfg.cap)

    def truth_vector(self, f: Formula, var: str, nu: Mapping[str, int], lo: int, hi: int) -> np.ndarray:
        """Truth of ``f`` for ``var`` = lo..hi with everything else taken from ``nu``."""
        n = hi - lo + 1
        if var not in self.fv(f):
            return np.full(n, self.eval(f, nu), dtype=bool)
        if is_quantifier_free(f):
            p = self.prog(f)
            return kernels.eval_line(p, nu, var, lo, hi, self.backend)
        if isinstance(f, Not):
            return ~self.truth_vector(f.arg, var, nu, lo, hi)
        if isinstance(f, (And, Or)):
            is_and = isinstance(f, And)
            acc = np.full(n, is_and, dtype=bool)
            for a in sorted(f.args, key=lambda g: not is_quantifier_free(g)):
                v = self.truth_vector(a, var, nu, lo, hi)
                acc = (acc & v) if is_and else (acc | v)
            return acc
        if isinstance(f, (CountGeq, CountEq, CountMod)) and f.count == var and var not in self.fv(f.body):
            res = self.count_line(f.body, f.var, nu)
            if isinstance(res, Inconclusive):
                raise InconclusiveError(res.reason)
            xs = np.arange(lo, hi + 1, dtype=object if max(abs(lo), abs(hi)) >= 1 << 62 else np.int64)
            if isinstance(f, CountGeq):
                return np.ones(n, dtype=bool) if isinstance(res, Infinite) else np.asarray(xs <= res.n, dtype=bool)
            if isinstance(res, Infinite):
                return np.zeros(n, dtype=bool)
            if isinstance(f, CountEq):
                return np.asarray(xs == res.n, dtype=bool)
            return np.asarray((res.n - xs) % f.modulus == 0, dtype=bool)
        out = np.empty(n, dtype=bool)
        point = dict(nu)
        for i in range(n):
            point[var] = lo + i
            out[i] = self.eval(f, point)
        return out

    # -- pointwise truth

    def eval(self, f: Formula, nu: Mapping[str, int]) -> bool:
        if isinstance(f, Const):
            return f.value
        if isinstance(f, (Lt, Mod)):
            return eval_atom(f, nu)
        if isinstance(f, Not):
            return not self.eval(f.arg, nu)
        if isinstance(f, (And, Or)):
            want = isinstance(f, Or)
            pending = None
            for a in sorted(f.args, key=lambda g: not is_quantifier_free(g)):
                try:
                    if self.eval(a, nu) == want:
                        return want
                except InconclusiveError as exc:
                    pending = exc
            if pending is not None:
                raise pending
            return not want
        key = (id(f), self._restrict(f, nu))
        hit = self._truth.get(key)
        if hit is None:
            try:
                hit = (f, self._eval_quantifier(f, nu))
            except InconclusiveError as exc:
                hit = (f, exc)
            self._truth[key] = hit
        if isinstance(hit[1], InconclusiveError):
            raise hit[1]
        return hit[1]

    def _count(self, body, var, nu):
        res = self.count_line(body, var, nu)
        if isinstance(res, Inconclusive):
            raise InconclusiveError(res.reason)
        return res

    def _eval_quantifier(self, f, nu) -> bool:
        if isinstance(f, Exists):
            block = self._block(f, nu)
            if block is not None:
                return block
            res = self._count(f.body, f.var, nu)
            return isinstance(res, Infinite) or res.n >= 1
        if isinstance(f, ForAll):
            hit = self._negs.get(id(f))
            if hit is None:
                hit = self._negs[id(f)] = (f, neg(f.body))
            res = self._count(hit[1], f.var, nu)
            return isinstance(res, Finite) and res.n == 0
        if isinstance(f, CountGeqConst) and f.threshold <= 0:
            return True
        try:
            x = nu[f.count] if not isinstance(f, CountGeqConst) else f.threshold
        except KeyError:
            raise IncompleteAssignment(f.count) from None
        res = self._count(f.body, f.var, nu)
        if isinstance(f, (CountGeq, CountGeqConst)):
            return isinstance(res, Infinite) or res.n >= x
        if isinstance(res, Infinite):
            return False
        if isinstance(f, CountEq):
            return res.n == x
        if isinstance(f, CountMod):
            return (res.n - x) % f.modulus == 0
        raise TypeError(f"unknown node {type(f).__name__}")

    # -- separable existential blocks

    def _block(self, f: Exists, nu):
        """Decide ``exists v1 .. vn (link and parts)`` when the variables only meet in the link.

        The link is ``sum(v) + rest >= 0`` (optionally also ``<= 0``, making it an
        equation) and every other conjunct mentions at most one block variable.
        Returns None when the shape does not match.
        """
        names = []
        g = f
        while isinstance(g, Exists):
            names.append(g.var)
            g = g.body
        if len(set(names)) != len(names):
            return None
        block = set(names)
        conjuncts = list(g.args) if isinstance(g, And) else [g]
        linkish = []
        per_var: dict = {v: [] for v in names}
        rest_parts = []
        for c in conjuncts:
            hit = self.fv(c) & block
            if len(hit) > 1 or (len(hit) == len(block) and _is_link(c, names)):
                linkish.append(c)
            elif hit:
                per_var[next(iter(hit))].append(c)
            else:
                rest_parts.append(c)
        if not linkish:
            return None
        t0 = linkish[0].arg.term if _is_link(linkish[0], names) else None
        if t0 is None:
            return None
        mode = "geq"
        for c in linkish[1:]:
            if mode == "geq" and _is_neg_link(c, names, t0):
                mode = "eq"
            else:
                return None
        rest = t0
        for v in names:
            rest = rest.without(v)
        for c in rest_parts:
            if not self.eval(c, nu):
                return False
        sets = [self._block_set(v, per_var[v], nu, mode) for v in names]
        need = -rest.evaluate(nu)  # sum of block values must be >= need (or == need)
        if mode == "geq":
            total = 0
            unbounded = False
            for s in sets:
                if s is None:
                    return False
                if s == "inf":
                    unbounded = True
                else:
                    total += s
            return unbounded or total >= need
        sums = {0}
        for s in sets:
            if not s:
                return False
            sums = {a + b for a in sums for b in s}
            if len(sums) > 10**5:
                raise InconclusiveError("sumset too large in an equality block")
        return need in sums

    def _block_set(self, v, parts, nu, mode):
        """Supremum (geq mode: int, "inf" or None when empty) or the finite value set (eq mode)."""
        if len(parts) == 1 and isinstance(parts[0], (CountGeq, CountEq)) and parts[0].count == v \
                and v not in self.fv(parts[0].body):
            p = parts[0]
            res = self._count(p.body, p.var, nu)
            if isinstance(p, CountGeq):
                if mode == "geq":
                    return "inf" if isinstance(res, Infinite) else res.n
                raise InconclusiveError("unbounded value set in an equality block")
            if isinstance(res, Infinite):
                return None if mode == "geq" else set()
            return res.n if mode == "geq" else {res.n}
        if not parts:
            if mode == "geq":
                return "inf"
            raise InconclusiveError("unconstrained variable in an equality block")
        g = conj(*parts)
        prof = self.profile(g, v, nu)
        if isinstance(prof, Inconclusive):
            raise InconclusiveError(prof.reason)
        pat, lo, left, right = prof
        idx = np.flatnonzero(pat)
        if mode == "geq":
            if right:
                return "inf"
            if len(idx) == 0:
                return None
            return lo + int(idx[-1])
        if left or right:
            raise InconclusiveError("infinite value set in an equality block")
        return {lo + int(i) for i in idx}

    # -- batches

    def eval_many(self, f: Formula, points: Sequence[Mapping[str, int]]) -> list:
        """Truth at each point; ``None`` marks an inconclusive point."""
        return self._many(f, list(points), list(range(len(points))), [None] * len(points))

    def _many(self, f, points, idx, out):
        if not idx:
            return out
        if is_quantifier_free(f):
            variables = tuple(sorted(self.fv(f)))
            p = self.prog(f, variables)
            rows = [[points[i][v] for v in variables] for i in idx]
            vals = kernels.eval_points(p, rows, self.backend) if variables else \
                np.full(len(idx), kernels.eval_points(p, [[]], self.backend)[0])
            for i, b in zip(idx, vals):
                out[i] = bool(b)
            return out
        if isinstance(f, (And, Or)):
            want = isinstance(f, Or)
            live = list(idx)
            undecided: set = set()
            for a in sorted(f.args, key=lambda g: not is_quantifier_free(g)):
                sub = self._many(a, points, live, [None] * len(points))
                nxt = []
                for i in live:
                    if sub[i] is None:
                        undecided.add(i)
                        nxt.append(i)
                    elif sub[i] == want:
                        out[i] = want
                        undecided.discard(i)
                    else:
                        nxt.append(i)
                live = nxt
            for i in live:
                out[i] = None if i in undecided else (not want)
            return out
        if isinstance(f, Not):
            sub = self._many(f.arg, points, idx, [None] * len(points))
            for i in idx:
                out[i] = None if sub[i] is None else not sub[i]
            return out
        for i in idx:
            try:
                out[i] = self.eval(f, points[i])
            except InconclusiveError:
                out[i] = None
        return out


def _is_link(c, names) -> bool:
    return isinstance(c, Not) and isinstance(c.arg, Lt) and all(c.arg.term.coef(v) == 1 for v in names)


def _is_neg_link(c, names, t0) -> bool:
    return isinstance(c, Not) and isinstance(c.arg, Lt) and c.arg.term == -t0


# ---------------------------------------------------------------------------
# module-level conveniences


def count_line(f: Formula, y: str, nu: Mapping[str, int], cfg: OracleConfig | None = None) -> CountResult:
    return Oracle(cfg).count_line(f, y, nu)


def oracle_eval(f: Formula, nu: Mapping[str, int], cfg: OracleConfig | None = None) -> bool:
    """Truth value under ``nu``; raises :class:`InconclusiveError` when a count cannot be verified."""
    return Oracle(cfg).eval(f, nu)


# ---------------------------------------------------------------------------
# random formulae

KINDS = ("exists", "count-geq", "count-eq", "count-geq-const", "count-mod")
VAR_NAMES = ("y", "x", "z", "u", "v", "w")


@dataclass
class GenConfig:
    vars: int = 3
    coef_bound: int = 5
    mod_bound: int = 4
    const_bound: int = 10
    max_atoms: int = 4
    kind: str | None = None  # one of KINDS, "none", or None for any
    depth: int = 1  # 2 allows one outer quantifier over the count variable
    nested_prob: float = 0.2
    max_threshold: int = 6
    point_prob: float = 0.15  # chance of a finite explicit set as the body

    def __post_init__(self):
        if self.vars < 1 or self.vars > len(VAR_NAMES):
            raise ValueError(f"vars must lie in [1, {len(VAR_NAMES)}]")
        if self.coef_bound < 1:
            raise ValueError("coef_bound must be positive")
        if self.mod_bound < 1:
            raise ValueError("mod_bound must be positive")
        if self.kind is not None and self.kind not in KINDS + ("none",):
            raise ValueError(f"unknown quantifier kind {self.kind!r}")


def _rng(seed) -> random.Random:
    return seed if isinstance(seed, random.Random) else random.Random(seed)


def _nonzero(rng, b):
    c = rng.randint(1, b)
    return c if rng.random() < 0.5 else -c


_RELS = ("lt", "eq", "le", "gt", "ge")
_RELATION = {
    "lt": Lt,
    "eq": lambda t: eq(t, 0),
    "le": lambda t: le(t, 0),
    "gt": lambda t: lt(LinearTerm(), t),
    "ge": lambda t: ge(t, 0),
}


def gen_qf(cfg: GenConfig, rng: random.Random, variables: Sequence[str], must: str | None = None) -> Formula:
    """A random Boolean combination of atoms over ``variables``."""
    n = rng.randint(1, cfg.max_atoms) if cfg.max_atoms > 0 else 0
    if n == 0:
        return TRUE
    if must is not None and rng.random() < cfg.point_prob:
        return _gen_points(cfg, rng, variables, must, n)
    pool: list[LinearTerm] = []
    leaves = []
    for _ in range(n):
        if pool and rng.random() < 0.3:
            base = rng.choice(pool)
            t = rng.choice((-base, base + rng.randint(-2, 2), base))
        else:
            t = LinearTerm.const(rng.randint(-cfg.const_bound, cfg.const_bound))
            for v in variables:
                if rng.random() < (0.85 if v == must else 0.5):
                    t = t + LinearTerm.var(v, _nonzero(rng, cfg.coef_bound))
        pool.append(t)
        if rng.random() < 0.7 or cfg.mod_bound < 2:
            rel = rng.choices(_RELS, weights=(4, 2, 2, 1, 1))[0]
            a = _RELATION[rel](t)
        else:
            q = rng.randint(2, cfg.mod_bound)
            a = Mod(t, q, rng.randrange(q))
        leaves.append(Not(a) if rng.random() < 0.3 else a)
    while len(leaves) > 1:
        i, j = sorted(rng.sample(range(len(leaves)), 2))
        b = leaves.pop(j)
        a = leaves.pop(i)
        node = And((a, b)) if rng.random() < 0.6 else Or((a, b))
        leaves.append(Not(node) if rng.random() < 0.15 else node)
    f = leaves[0]
    if must is not None and must not in free_vars(f):
        f = And((f, Lt(LinearTerm.var(must, _nonzero(rng, cfg.coef_bound)) + rng.randint(-cfg.const_bound, cfg.const_bound))))
    return f


def _gen_points(cfg: GenConfig, rng: random.Random, variables: Sequence[str], y: str, n: int) -> Formula:
    """A finite explicit set: ``y`` equals one of a few terms, optionally filtered by one more atom."""
    others = [v for v in variables if v != y]
    pts = []
    for _ in range(rng.randint(2, 3)):
        t = LinearTerm.const(rng.randint(-cfg.const_bound, cfg.const_bound))
        for v in others:
            if rng.random() < 0.5:
                t = t + LinearTerm.var(v, _nonzero(rng, cfg.coef_bound))
        pts.append(eq(LinearTerm.var(y), t))
    f = Or(tuple(pts))
    if n > 1:
        extra = gen_qf(GenConfig(vars=cfg.vars, coef_bound=cfg.coef_bound, mod_bound=cfg.mod_bound,
                                 const_bound=cfg.const_bound, max_atoms=1, point_prob=0.0), rng, variables)
        f = And((f, extra))
    return f


def gen_formula(cfg: GenConfig, seed=0, kind: str | None = None) -> Formula:
    """Reproducible random formula with one counting quantifier (or a nested pair)."""
    rng = _rng(seed)
    names = VAR_NAMES[: cfg.vars]
    kind = kind or cfg.kind
    if kind is None:
        kind = rng.choice(KINDS if cfg.vars >= 2 else ("exists", "count-geq-const"))
    if cfg.max_atoms == 0 and kind == "none":
        return TRUE
    if kind == "none":
        return gen_qf(cfg, rng, names)
    y = names[0]
    if kind in ("count-geq", "count-eq", "count-mod") and cfg.vars < 2:
        raise ValueError(f"{kind} needs at least two variables")
    x = names[1] if cfg.vars >= 2 else None
    nested = cfg.depth >= 2 and kind in ("count-geq", "count-eq", "count-mod") and rng.random() < cfg.nested_prob
    # nested instances keep the count variable out of the inner body
    body_vars = [v for v in names if not (nested and v == x)]
    body = gen_qf(cfg, rng, body_vars, must=y)
    if kind == "exists":
        return Exists(y, body)
    if kind == "count-geq-const":
        return CountGeqConst(rng.randint(0, cfg.max_threshold), y, body)
    if kind == "count-geq":
        inner = CountGeq(x, y, body)
    elif kind == "count-eq":
        inner = CountEq(x, y, body)
    else:
        inner = CountMod(x, rng.randint(1, max(cfg.mod_bound, 1)), y, body)
    if not nested:
        return inner
    outer = rng.choice(("exists", "forall", "count-geq-const"))
    if outer == "exists":
        return Exists(x, inner)
    if outer == "forall":
        return ForAll(x, inner)
    return CountGeqConst(rng.randint(1, 3), x, inner)


def count_vars(f: Formula) -> set:
    out = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, (CountGeq, CountEq, CountMod)):
            out.add(g.count)
        stack.extend(children(g))
    return out


def sample_assignments(f: Formula, k: int, box: int, rng: random.Random) -> list[dict]:
    """Points in ``[-box, box]``; count variables favour small nonnegative values."""
    fv = sorted(free_vars(f))
    cv = count_vars(f)
    small = min(box, 10)
    out = []
    for _ in range(k):
        nu = {}
        for v in fv:
            if v in cv and rng.random() < 0.5:
                nu[v] = rng.randint(0, small)
            else:
                nu[v] = rng.randint(-box, box)
        out.append(nu)
    return out


# ---------------------------------------------------------------------------
# differential testing


@dataclass
class CheckConfig:
    trials: int = 100
    samples: int = 200
    seed: int = 0
    gen: GenConfig = field(default_factory=lambda: GenConfig(depth=2))
    oracle: OracleConfig = field(default_factory=OracleConfig)
    max_cases: int = 20000
    max_resample: int = 20
    fail_fast: bool = False
    max_counterexamples: int = 10


def _eliminate(f, cfg, audit):
    from .qe_ext import eliminate_all

    return eliminate_all(f, max_cases=cfg.max_cases, audit=audit)


def run_trial(cfg: CheckConfig, trial: int, audit: Audit) -> dict:
    """Generate, eliminate and compare one instance."""
    kind = KINDS[trial % len(KINDS)] if cfg.gen.kind is None else cfg.gen.kind
    if cfg.gen.vars < 2 and kind in ("count-geq", "count-eq", "count-mod"):
        kind = ("exists", "count-geq-const")[trial % 2]
    resampled = 0
    for attempt in range(cfg.max_resample + 1):
        tag = f"{cfg.seed}:{trial}" if attempt == 0 else f"{cfg.seed}:{trial}:{attempt}"
        rng = random.Random(tag)
        phi = gen_formula(cfg.gen, rng, kind)
        try:
            psi = _eliminate(phi, cfg, audit)
            break
        except CaseExplosion:
            resampled += 1
    else:
        raise CaseExplosion(f"trial {trial}: every resampled instance", cfg.max_resample + 1, cfg.max_resample)
    points = sample_assignments(phi, cfg.samples, cfg.oracle.box, rng)
    variables = tuple(sorted(free_vars(phi)))
    prog = kernels.compile_qf(psi, variables)
    rows = [[nu[v] for v in variables] for nu in points]
    if variables:
        qe_vals = kernels.eval_points(prog, rows)
    else:
        qe_vals = np.full(len(points), bool(kernels.eval_points(prog, [[]])[0]))
    oracle = Oracle(cfg.oracle)
    or_vals = oracle.eval_many(phi, points)
    mismatches = []
    inconclusive = 0
    for nu, a, b in zip(points, or_vals, qe_vals):
        if a is None:
            inconclusive += 1
        elif a != bool(b):
            mismatches.append({"trial": trial, "kind": kind, "formula": _render(phi), "assignment": nu,
                               "oracle": a, "qe": bool(b)})
    return {"kind": kind, "resampled": resampled, "mismatches": mismatches, "inconclusive": inconclusive,
            "formula": phi, "output": psi}


def _render(f):
    from .syntax import render

    return render(f)


def differential_test(cfg: CheckConfig) -> dict:
    """Run the trials and return the JSON-ready report."""
    t0 = time.perf_counter()
    audit = Audit()
    total_mismatches = 0
    inconclusive = 0
    resampled = 0
    examples: list = []
    by_kind: dict = {}
    errors: list = []
    done = 0
    for trial in range(cfg.trials):
        try:
            r = run_trial(cfg, trial, audit)
        except PipelineInvariantError as exc:
            errors.append({"trial": trial, "error": str(exc)})
            total_mismatches += 1
            done += 1
            if cfg.fail_fast:
                break
            continue
        done += 1
        k = by_kind.setdefault(r["kind"], {"trials": 0, "mismatches": 0})
        k["trials"] += 1
        k["mismatches"] += len(r["mismatches"])
        total_mismatches += len(r["mismatches"])
        inconclusive += r["inconclusive"]
        resampled += r["resampled"]
        for m in r["mismatches"]:
            if len(examples) < cfg.max_counterexamples:
                examples.append(m)
        if cfg.fail_fast and total_mismatches:
            break
    summary = audit.summary()
    summary["violations"] = len(errors)
    return {
        "trials": done,
        "samples_per_trial": cfg.samples,
        "mismatches": total_mismatches,
        "inconclusive": inconclusive,
        "counterexamples": examples + errors,
        "wall_ms": int(round((time.perf_counter() - t0) * 1000)),
        "resampled": resampled,
        "by_kind": dict(sorted(by_kind.items())),
        "audit": summary,
    }
