# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled evaluation kernels over flattened quantifier-free programs.

All arrays are int64/int32/uint8 numpy buffers prepared by ``pacqe.kernels``;
the caller guarantees that intermediate sums fit in 63 bits.
"""
import numpy as np

from libc.stdint cimport int8_t, int32_t, int64_t, uint8_t
from libc.string cimport memset

cdef enum:
    OP_ATOM = 0
    OP_TRUE = 1
    OP_FALSE = 2
    OP_NOT = 3
    OP_AND = 4
    OP_OR = 5


cdef struct Ctx:
    const int32_t* ops
    const int32_t* arg
    const int32_t* nxt
    int32_t nops
    int32_t natoms
    int32_t nvars
    const int64_t* coefs
    const int64_t* consts
    const uint8_t* kinds
    const int64_t* qs
    const int64_t* rs
    # per-point state
    int8_t* cache
    const int64_t* point
    int line_mode
    const int64_t* base
    const int64_t* step
    int64_t y


cdef inline bint atom_value(Ctx* c, int32_t a) nogil:
    cdef int8_t hit = c.cache[a]
    if hit >= 0:
        return hit
    cdef int64_t v
    cdef int32_t j
    if c.line_mode:
        v = c.base[a] + c.step[a] * c.y
    else:
        v = c.consts[a]
        for j in range(c.nvars):
            v += c.coefs[a * c.nvars + j] * c.point[j]
    cdef bint out
    cdef int64_t q, res
    if c.kinds[a] == 0:
        out = v < 0
    else:
        q = c.qs[a]
        res = (v - c.rs[a]) % q
        out = res == 0
    c.cache[a] = out
    return out


cdef bint eval_node(Ctx* c, int32_t i) nogil:
    cdef int32_t op = c.ops[i]
    cdef int32_t end, k
    if op == OP_ATOM:
        return atom_value(c, c.arg[i])
    if op == OP_TRUE:
        return True
    if op == OP_FALSE:
        return False
    if op == OP_NOT:
        return not eval_node(c, i + 1)
    end = c.nxt[i]
    k = i + 1
    if op == OP_AND:
        while k < end:
            if not eval_node(c, k):
                return False
            k = c.nxt[k]
        return True
    while k < end:
        if eval_node(c, k):
            return True
        k = c.nxt[k]
    return False


cdef void setup_ctx(Ctx* c, const int32_t[::1] ops, const int32_t[::1] arg, const int32_t[::1] nxt,
                    const int64_t[:, ::1] coefs, const int64_t[::1] consts, const uint8_t[::1] kinds,
                    const int64_t[::1] qs, const int64_t[::1] rs, int8_t* cache):
    c.ops = &ops[0]
    c.arg = &arg[0]
    c.nxt = &nxt[0]
    c.nops = ops.shape[0]
    c.natoms = consts.shape[0]
    c.nvars = coefs.shape[1]
    c.coefs = &coefs[0, 0] if coefs.shape[0] > 0 and coefs.shape[1] > 0 else NULL
    c.consts = &consts[0] if consts.shape[0] > 0 else NULL
    c.kinds = &kinds[0] if kinds.shape[0] > 0 else NULL
    c.qs = &qs[0] if qs.shape[0] > 0 else NULL
    c.rs = &rs[0] if rs.shape[0] > 0 else NULL
    c.cache = cache
    c.line_mode = 0
    c.base = NULL
    c.step = NULL
    c.y = 0


def eval_points(const int32_t[::1] ops, const int32_t[::1] arg, const int32_t[::1] nxt,
                const int64_t[:, ::1] coefs, const int64_t[::1] consts, const uint8_t[::1] kinds,
                const int64_t[::1] qs, const int64_t[::1] rs, const int64_t[:, ::1] points):
    """Truth value of the program at every row of ``points``."""
    cdef Py_ssize_t n = points.shape[0]
    out_arr = np.zeros(n, dtype=np.uint8)
    cdef uint8_t[::1] out = out_arr
    cdef int64_t dummy = 0
    cache_arr = np.empty(max(consts.shape[0], 1), dtype=np.int8)
    cdef int8_t[::1] cache = cache_arr
    cdef Ctx c
    setup_ctx(&c, ops, arg, nxt, coefs, consts, kinds, qs, rs, &cache[0])
    cdef Py_ssize_t p
    with nogil:
        for p in range(n):
            memset(c.cache, 0xFF, c.natoms)
            c.point = &points[p, 0] if points.shape[1] > 0 else &dummy
            out[p] = eval_node(&c, 0)
    return out_arr


def eval_line(const int32_t[::1] ops, const int32_t[::1] arg, const int32_t[::1] nxt,
              const int64_t[:, ::1] coefs, const int64_t[::1] consts, const uint8_t[::1] kinds,
              const int64_t[::1] qs, const int64_t[::1] rs,
              const int64_t[::1] base, const int64_t[::1] step, int64_t lo, int64_t hi):
    """Truth values for ``y`` in ``[lo, hi]`` where atom ``a`` has value ``base[a] + step[a]*y``."""
    cdef Py_ssize_t n = hi - lo + 1 if hi >= lo else 0
    out_arr = np.zeros(n, dtype=np.uint8)
    cdef uint8_t[::1] out = out_arr
    cache_arr = np.empty(max(consts.shape[0], 1), dtype=np.int8)
    cdef int8_t[::1] cache = cache_arr
    cdef Ctx c
    setup_ctx(&c, ops, arg, nxt, coefs, consts, kinds, qs, rs, &cache[0])
    c.line_mode = 1
    c.base = &base[0] if base.shape[0] > 0 else NULL
    c.step = &step[0] if step.shape[0] > 0 else NULL
    cdef Py_ssize_t p
    with nogil:
        for p in range(n):
            memset(c.cache, 0xFF, c.natoms)
            c.y = lo + p
            out[p] = eval_node(&c, 0)
    return out_arr


def eval_grid(const int32_t[::1] ops, const int32_t[::1] arg, const int32_t[::1] nxt,
              const int64_t[:, ::1] coefs, const int64_t[::1] consts, const uint8_t[::1] kinds,
              const int64_t[::1] qs, const int64_t[::1] rs,
              const int64_t[::1] base, const int64_t[::1] step_u, int64_t ulo, int64_t uhi,
              const int64_t[::1] step_v, int64_t vlo, int64_t vhi):
    """Truth table over ``u`` in ``[ulo, uhi]`` (rows) and ``v`` in ``[vlo, vhi]`` (columns)."""
    cdef Py_ssize_t nu = uhi - ulo + 1 if uhi >= ulo else 0
    cdef Py_ssize_t nv = vhi - vlo + 1 if vhi >= vlo else 0
    out_arr = np.zeros((nu, nv), dtype=np.uint8)
    cdef uint8_t[:, ::1] out = out_arr
    cdef Py_ssize_t na = consts.shape[0]
    cache_arr = np.empty(max(na, 1), dtype=np.int8)
    cdef int8_t[::1] cache = cache_arr
    row_arr = np.zeros(max(na, 1), dtype=np.int64)
    cdef int64_t[::1] row = row_arr
    cdef Ctx c
    setup_ctx(&c, ops, arg, nxt, coefs, consts, kinds, qs, rs, &cache[0])
    c.line_mode = 1
    c.base = &row[0]
    c.step = &step_v[0] if step_v.shape[0] > 0 else NULL
    cdef Py_ssize_t i, p, a
    with nogil:
        for i in range(nu):
            for a in range(na):
                row[a] = base[a] + step_u[a] * (ulo + i)
            for p in range(nv):
                memset(c.cache, 0xFF, c.natoms)
                c.y = vlo + p
                out[i, p] = eval_node(&c, 0)
    return out_arr


def segment_table(const uint8_t[:, ::1] patterns, const int64_t[:, ::1] vals, int64_t m):
    """Per-row segment counts for one ordering.

    ``patterns`` holds the residual truth vector over ``[0, m)`` for each of
    the ``2l+1`` segments; ``vals[row, j]`` is the residue of the ``j``-th
    distinct term.  Returns ``(c, d, rprime)`` with ``c`` of shape (n, l) and
    the gap lengths ``d = u_hi - u_lo`` and interior counts of shape (n, l-1).
    """
    cdef Py_ssize_t n = vals.shape[0]
    cdef Py_ssize_t ell = vals.shape[1]
    cdef Py_ssize_t nb = ell - 1 if ell > 0 else 0
    c_arr = np.zeros((n, ell), dtype=np.int64)
    d_arr = np.zeros((n, nb), dtype=np.int64)
    rp_arr = np.zeros((n, nb), dtype=np.int64)
    cdef int64_t[:, ::1] cc = c_arr
    cdef int64_t[:, ::1] dd = d_arr
    cdef int64_t[:, ::1] rp = rp_arr
    # prefix sums of the doubled between-patterns: pref[j, u] = #true in [0, u)
    pref_arr = np.zeros((nb if nb > 0 else 1, 2 * m + 1), dtype=np.int64)
    cdef int64_t[:, ::1] pref = pref_arr
    cdef Py_ssize_t j, u, row
    cdef int64_t lo, hi, res
    with nogil:
        for j in range(nb):
            for u in range(2 * m):
                pref[j, u + 1] = pref[j, u] + patterns[2 * j + 2, u % m]
        for row in range(n):
            for j in range(ell):
                cc[row, j] = patterns[2 * j + 1, vals[row, j]]
            for j in range(nb):
                lo = vals[row, j]
                res = vals[row, j + 1]
                hi = lo + ((res - lo - 1) % m + m) % m + 1
                dd[row, j] = hi - lo
                rp[row, j] = pref[j, hi] - pref[j, lo + 1]
    return c_arr, d_arr, rp_arr
