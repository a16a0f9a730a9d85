"""Pure-Python versions of the compiled kernels (same semantics, arbitrary precision)."""
from __future__ import annotations

OP_ATOM, OP_TRUE, OP_FALSE, OP_NOT, OP_AND, OP_OR = range(6)


def _evaluator(ops, arg, nxt, atom_truth):
    def ev(i):
        op = ops[i]
        if op == OP_ATOM:
            return atom_truth(arg[i])
        if op == OP_TRUE:
            return True
        if op == OP_FALSE:
            return False
        if op == OP_NOT:
            return not ev(i + 1)
        end = nxt[i]
        k = i + 1
        if op == OP_AND:
            while k < end:
                if not ev(k):
                    return False
                k = nxt[k]
            return True
        while k < end:
            if ev(k):
                return True
            k = nxt[k]
        return False

    return ev


def _truth(kind, q, r, v):
    if kind == 0:
        return v < 0
    return (v - r) % q == 0


def eval_points(ops, arg, nxt, coefs, consts, kinds, qs, rs, points):
    out = []
    for pt in points:
        cache = {}

        def atom_truth(a, pt=pt, cache=cache):
            hit = cache.get(a)
            if hit is None:
                v = consts[a]
                for c, x in zip(coefs[a], pt):
                    v += c * x
                hit = cache[a] = _truth(kinds[a], qs[a], rs[a], v)
            return hit

        out.append(_evaluator(ops, arg, nxt, atom_truth)(0))
    return out


def eval_line(ops, arg, nxt, coefs, consts, kinds, qs, rs, base, step, lo, hi):
    out = []
    for y in range(lo, hi + 1):
        cache = {}

        def atom_truth(a, y=y, cache=cache):
            hit = cache.get(a)
            if hit is None:
                hit = cache[a] = _truth(kinds[a], qs[a], rs[a], base[a] + step[a] * y)
            return hit

        out.append(_evaluator(ops, arg, nxt, atom_truth)(0))
    return out


def eval_grid(ops, arg, nxt, coefs, consts, kinds, qs, rs, base, step_u, ulo, uhi, step_v, vlo, vhi):
    rows = []
    for u in range(ulo, uhi + 1):
        row_base = [b + s * u for b, s in zip(base, step_u)]
        rows.append(eval_line(ops, arg, nxt, coefs, consts, kinds, qs, rs, row_base, step_v, vlo, vhi))
    return rows


def segment_table(patterns, vals, m):
    ell = len(vals[0]) if vals else 0
    prefixes = []
    for j in range(max(ell - 1, 0)):
        pat = patterns[2 * j + 2]
        pref = [0]
        for u in range(2 * m):
            pref.append(pref[-1] + (1 if pat[u % m] else 0))
        prefixes.append(pref)
    cs, ds, rps = [], [], []
    for row in vals:
        cs.append([1 if patterns[2 * j + 1][row[j]] else 0 for j in range(ell)])
        drow, rrow = [], []
        for j in range(ell - 1):
            lo = row[j]
            hi = lo + (row[j + 1] - lo - 1) % m + 1
            drow.append(hi - lo)
            rrow.append(prefixes[j][hi] - prefixes[j][lo + 1])
        ds.append(drow)
        rps.append(rrow)
    return cs, ds, rps
