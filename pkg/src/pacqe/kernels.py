"""Flattened quantifier-free programs and the evaluation kernels that run them.

The compiled extension ``pacqe._ckernels`` is used when it imports and the
values involved fit in 63 bits; otherwise the pure-Python implementation in
``pacqe._pykernels`` is used.  Setting ``PACQE_PURE_PYTHON=1`` forces the
fallback for the whole process.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import _pykernels as _py
from .errors import IncompleteAssignment, UnsupportedQuantifiedInput
from .formula import And, Const, Formula, Lt, Mod, Not, Or

_c = None
if os.environ.get("PACQE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _c  # type: ignore[no-redef]
    except ImportError:
        _c = None

BACKEND = "cython" if _c is not None else "python"
LIMIT = 1 << 62

OP_ATOM, OP_TRUE, OP_FALSE, OP_NOT, OP_AND, OP_OR = range(6)


def available_backends() -> tuple[str, ...]:
    return ("cython", "python") if _c is not None else ("python",)


def _use_c(backend: str | None) -> bool:
    if backend is None:
        return _c is not None
    if backend == "cython":
        if _c is None:
            raise RuntimeError("compiled kernels are not available")
        return True
    if backend == "python":
        return False
    raise ValueError(f"unknown backend {backend!r}")


@dataclass
class Program:
    """A quantifier-free formula flattened into prefix form with a deduplicated atom table."""

    vars: tuple
    ops: list
    arg: list
    nxt: list
    coefs: list  # per atom, aligned with vars
    consts: list
    kinds: list  # 0 for t < 0, 1 for a modulo constraint
    qs: list
    rs: list
    _np: dict = field(default_factory=dict, repr=False)

    @property
    def natoms(self) -> int:
        return len(self.consts)

    def arrays(self):
        """int64 views of the program, or None when a coefficient does not fit."""
        if "arr" not in self._np:
            big = any(abs(c) >= LIMIT for row in self.coefs for c in row) or any(abs(c) >= LIMIT for c in self.consts)
            big = big or any(q >= LIMIT for q in self.qs)
            if big:
                self._np["arr"] = None
            else:
                nv = len(self.vars)
                coefs = np.array(self.coefs, dtype=np.int64).reshape(len(self.consts), nv)
                self._np["arr"] = (
                    np.array(self.ops, dtype=np.int32),
                    np.array(self.arg, dtype=np.int32),
                    np.array(self.nxt, dtype=np.int32),
                    np.ascontiguousarray(coefs),
                    np.array(self.consts, dtype=np.int64),
                    np.array(self.kinds, dtype=np.uint8),
                    np.array(self.qs, dtype=np.int64),
                    np.array(self.rs, dtype=np.int64),
                )
        return self._np["arr"]

    def lists(self):
        return (self.ops, self.arg, self.nxt, self.coefs, self.consts, self.kinds, self.qs, self.rs)

    def coef_bounds(self) -> list[int]:
        if "cb" not in self._np:
            nv = len(self.vars)
            self._np["cb"] = [max((abs(row[j]) for row in self.coefs), default=0) for j in range(nv)]
            self._np["kb"] = max((abs(c) for c in self.consts), default=0)
        return self._np["cb"]

    def const_bound(self) -> int:
        self.coef_bounds()
        return self._np["kb"]

    def index(self, v: str) -> int | None:
        try:
            return self.vars.index(v)
        except ValueError:
            return None

    def base_values(self, nu: Mapping[str, int], skip=()) -> list[int]:
        """Atom values with every variable except those in ``skip`` taken from ``nu``."""
        vals = []
        cols = []
        for j, v in enumerate(self.vars):
            if v in skip:
                continue
            try:
                cols.append((j, nu[v]))
            except KeyError:
                raise IncompleteAssignment(v) from None
        for row, c in zip(self.coefs, self.consts):
            s = c
            for j, x in cols:
                s += row[j] * x
            vals.append(s)
        return vals

    def column(self, v: str) -> list[int]:
        j = self.index(v)
        if j is None:
            return [0] * self.natoms
        return [row[j] for row in self.coefs]


def compile_qf(f: Formula, variables: Sequence[str] | None = None) -> Program:
    """Flatten a quantifier-free formula.  ``variables`` fixes the column order (default: sorted)."""
    from .formula import free_vars

    if variables is None:
        variables = sorted(free_vars(f))
    variables = tuple(variables)
    vindex = {v: i for i, v in enumerate(variables)}
    ops, arg, nxt = [], [], []
    table: dict = {}
    coefs, consts, kinds, qs, rs = [], [], [], [], []

    def atom_id(a):
        key = a
        hit = table.get(key)
        if hit is not None:
            return hit
        row = [0] * len(variables)
        for v, c in a.term.coeffs:
            if v not in vindex:
                raise IncompleteAssignment(v)
            row[vindex[v]] = c
        coefs.append(row)
        consts.append(a.term.constant)
        if isinstance(a, Lt):
            kinds.append(0)
            qs.append(1)
            rs.append(0)
        else:
            kinds.append(1)
            qs.append(a.modulus)
            rs.append(a.residue)
        table[key] = len(consts) - 1
        return table[key]

    def emit(g):
        i = len(ops)
        if isinstance(g, (Lt, Mod)):
            ops.append(OP_ATOM)
            arg.append(atom_id(g))
            nxt.append(i + 1)
            return
        if isinstance(g, Const):
            ops.append(OP_TRUE if g.value else OP_FALSE)
            arg.append(0)
            nxt.append(i + 1)
            return
        if isinstance(g, Not):
            ops.append(OP_NOT)
            arg.append(1)
            nxt.append(-1)
            todo.append(("close", i))
            todo.append(("node", g.arg))
            return
        if isinstance(g, (And, Or)):
            ops.append(OP_AND if isinstance(g, And) else OP_OR)
            arg.append(len(g.args))
            nxt.append(-1)
            todo.append(("close", i))
            for child in reversed(g.args):
                todo.append(("node", child))
            return
        raise UnsupportedQuantifiedInput(f"cannot compile a {type(g).__name__} node")

    # iterative prefix emission; a node's skip index is filled once its subtree is done
    todo = [("node", f)]
    while todo:
        kind, item = todo.pop()
        if kind == "node":
            emit(item)
        else:
            nxt[item] = len(ops)
    return Program(variables, ops, arg, nxt, coefs, consts, kinds, qs, rs)


# ---------------------------------------------------------------------------
# evaluation entry points


def _as_rows(points, nvars):
    # numpy input is passed through, anything else becomes a list of lists
    if isinstance(points, np.ndarray):
        return points
    return [list(p) for p in points]


def eval_points(prog: Program, points, backend: str | None = None) -> np.ndarray:
    """Truth value at every point (rows ordered like ``prog.vars``)."""
    rows = _as_rows(points, len(prog.vars))
    n = len(rows)
    if n == 0:
        return np.zeros(0, dtype=bool)
    if _use_c(backend):
        arrs = prog.arrays()
        if arrs is not None:
            if isinstance(rows, np.ndarray):
                mat = rows
                maxabs = [int(np.abs(mat[:, j]).max()) if n else 0 for j in range(mat.shape[1])] if mat.size else [0] * len(prog.vars)
            else:
                maxabs = [max((abs(r[j]) for r in rows), default=0) for j in range(len(prog.vars))]
                mat = None
            bound = prog.const_bound() + sum(c * x for c, x in zip(prog.coef_bounds(), maxabs))
            if bound < LIMIT and all(x < LIMIT for x in maxabs):
                if mat is None:
                    mat = np.array(rows, dtype=np.int64).reshape(n, len(prog.vars))
                mat = np.ascontiguousarray(mat, dtype=np.int64)
                return _c.eval_points(*arrs, mat).astype(bool)
    if isinstance(rows, np.ndarray):
        rows = rows.tolist()
    return np.array(_py.eval_points(*prog.lists(), rows), dtype=bool)


def eval_point(prog: Program, nu: Mapping[str, int], backend: str | None = None) -> bool:
    try:
        pt = [nu[v] for v in prog.vars]
    except KeyError as exc:
        raise IncompleteAssignment(exc.args[0]) from None
    return bool(eval_points(prog, [pt], backend)[0])


def eval_line(prog: Program, nu: Mapping[str, int], var: str, lo: int, hi: int, backend: str | None = None) -> np.ndarray:
    """Truth values of ``prog`` for ``var`` ranging over ``[lo, hi]``, the rest fixed by ``nu``."""
    base = prog.base_values(nu, skip=(var,))
    step = prog.column(var)
    if hi < lo:
        return np.zeros(0, dtype=bool)
    if _use_c(backend):
        arrs = prog.arrays()
        reach = max(abs(lo), abs(hi))
        if arrs is not None and all(abs(b) + abs(s) * reach < LIMIT for b, s in zip(base, step)):
            return _c.eval_line(*arrs, np.array(base, dtype=np.int64), np.array(step, dtype=np.int64), lo, hi).astype(bool)
    return np.array(_py.eval_line(*prog.lists(), base, step, lo, hi), dtype=bool)


def eval_grid(prog: Program, nu: Mapping[str, int], u: str, ulo: int, uhi: int, v: str, vlo: int, vhi: int,
              backend: str | None = None) -> np.ndarray:
    """Truth table with ``u`` over ``[ulo, uhi]`` as rows and ``v`` over ``[vlo, vhi]`` as columns."""
    base = prog.base_values(nu, skip=(u, v))
    su = prog.column(u)
    sv = prog.column(v)
    if uhi < ulo or vhi < vlo:
        return np.zeros((max(uhi - ulo + 1, 0), max(vhi - vlo + 1, 0)), dtype=bool)
    if _use_c(backend):
        arrs = prog.arrays()
        ru = max(abs(ulo), abs(uhi))
        rv = max(abs(vlo), abs(vhi))
        if arrs is not None and all(abs(b) + abs(a) * ru + abs(c) * rv < LIMIT for b, a, c in zip(base, su, sv)):
            return _c.eval_grid(*arrs, np.array(base, dtype=np.int64), np.array(su, dtype=np.int64), ulo, uhi,
                                np.array(sv, dtype=np.int64), vlo, vhi).astype(bool)
    rows = _py.eval_grid(*prog.lists(), base, su, ulo, uhi, sv, vlo, vhi)
    return np.array(rows, dtype=bool).reshape(uhi - ulo + 1, vhi - vlo + 1)


def segment_table(patterns: Sequence[Sequence[bool]], vals, m: int, backend: str | None = None):
    """Segment counts ``(c, d, rprime)`` for rows of term residues (see the compiled docstring)."""
    n = len(vals)
    if _use_c(backend) and m < (1 << 30):
        pat = np.ascontiguousarray(np.asarray(patterns, dtype=np.uint8).reshape(len(patterns), m))
        v = np.ascontiguousarray(np.asarray(vals, dtype=np.int64))
        if v.ndim == 1:
            v = v.reshape(n, -1)
        c, d, rp = _c.segment_table(pat, v, m)
        return c.tolist(), d.tolist(), rp.tolist()
    if isinstance(vals, np.ndarray):
        vals = vals.tolist()
    return _py.segment_table([list(p) for p in patterns], vals, m)
