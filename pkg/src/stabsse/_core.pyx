# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: the SSE sweep on bit-packed tableaus and cyclic Jacobi.

Mirrors :mod:`stabsse._pycore` line for line in what it decides and in the
order it draws random numbers; see that module for the sweep layout.
Tableaus hold at most 64 qubits (one machine word per mask).
"""

from libc.stdint cimport uint64_t, int32_t, int64_t, uint8_t
from libc.stdlib cimport malloc, free
from libc.math cimport ldexp, sqrt, fabs
from cpython.pycapsule cimport PyCapsule_GetPointer
from numpy.random cimport bitgen_t

import numpy as np

cdef extern from *:
    int __builtin_parityll(unsigned long long) nogil
    int __builtin_ctzll(unsigned long long) nogil

cdef enum:
    MAXQ = 64
    KIND_CX = 0

ctypedef struct Tab:
    uint64_t x[MAXQ]
    uint64_t z[MAXQ]
    int s[MAXQ]       # 1 means sign -1
    int F
    int zero


cdef inline int par(uint64_t v) noexcept nogil:
    return __builtin_parityll(v)


cdef inline int getbit(uint64_t vx, uint64_t vz, int col, int n) noexcept nogil:
    if col < n:
        return <int>((vx >> col) & 1)
    return <int>((vz >> (col - n)) & 1)


cdef inline void tab_copy(Tab* dst, Tab* src, int n) noexcept nogil:
    cdef int m
    for m in range(n):
        dst.x[m] = src.x[m]
        dst.z[m] = src.z[m]
        dst.s[m] = src.s[m]
    dst.F = src.F
    dst.zero = src.zero


cdef void tab_basis(Tab* t, int n, uint64_t bits) noexcept nogil:
    cdef int m
    for m in range(n):
        t.x[m] = 0
        t.z[m] = (<uint64_t>1) << m
        t.s[m] = <int>((bits >> m) & 1)
    t.F = 0
    t.zero = 0


cdef void tab_cx(Tab* t, int n, int c, int tg) noexcept nogil:
    cdef uint64_t cbit = (<uint64_t>1) << c
    cdef uint64_t tbit = (<uint64_t>1) << tg
    cdef int m
    if t.zero:
        return
    for m in range(n):
        if t.x[m] & cbit:
            t.x[m] ^= tbit
        if t.z[m] & tbit:
            t.z[m] ^= cbit


cdef int echelon(Tab* t, int n, uint64_t* ex, uint64_t* ez, int* es, int* pcol) noexcept nogil:
    """Reduced echelon of the generators; returns the number of pivot rows."""
    cdef uint64_t rx[MAXQ]
    cdef uint64_t rz[MAXQ]
    cdef int rs[MAXQ]
    cdef int used[MAXQ]
    cdef int order[MAXQ]
    cdef int cols[MAXQ]
    cdef int m, r, col, piv, npiv = 0
    for m in range(n):
        rx[m] = t.x[m]
        rz[m] = t.z[m]
        rs[m] = t.s[m]
        used[m] = 0
    for col in range(2 * n):
        piv = -1
        for r in range(n):
            if not used[r] and getbit(rx[r], rz[r], col, n):
                piv = r
                break
        if piv < 0:
            continue
        used[piv] = 1
        for r in range(n):
            if r != piv and getbit(rx[r], rz[r], col, n):
                rs[r] ^= rs[piv] ^ par(rz[piv] & rx[r])
                rx[r] ^= rx[piv]
                rz[r] ^= rz[piv]
        order[npiv] = piv
        cols[npiv] = col
        npiv += 1
    for r in range(npiv):
        ex[r] = rx[order[r]]
        ez[r] = rz[order[r]]
        es[r] = rs[order[r]]
        pcol[r] = cols[r]
    return npiv


cdef int group_sign(Tab* t, int n, uint64_t gx, uint64_t gz) noexcept nogil:
    """0 if +g is in the group, 1 if -g is (g must commute with every generator)."""
    cdef uint64_t ex[MAXQ]
    cdef uint64_t ez[MAXQ]
    cdef int es[MAXQ]
    cdef int pcol[MAXQ]
    cdef int i, npiv, s = 0
    npiv = echelon(t, n, ex, ez, es, pcol)
    for i in range(npiv):
        if getbit(gx, gz, pcol[i], n):
            s ^= es[i] ^ par(gz & ex[i])
            gx ^= ex[i]
            gz ^= ez[i]
    return s


cdef void tab_proj(Tab* t, int n, uint64_t gx, uint64_t gz) noexcept nogil:
    cdef int m, first = -1
    if t.zero:
        return
    for m in range(n):
        if par((gz & t.x[m]) ^ (gx & t.z[m])):
            if first < 0:
                first = m
                continue
            t.s[m] ^= t.s[first] ^ par(t.z[first] & t.x[m])
            t.x[m] ^= t.x[first]
            t.z[m] ^= t.z[first]
    if first >= 0:
        t.x[first] = gx
        t.z[first] = gz
        t.s[first] = 0
        t.F += 1
        return
    if group_sign(t, n, gx, gz):
        t.zero = 1


cdef inline void apply_term(Tab* t, int n, int k, const uint8_t* kinds,
                            const uint64_t* ta, const uint64_t* tb) noexcept nogil:
    if kinds[k] == KIND_CX:
        tab_cx(t, n, <int>ta[k], <int>tb[k])
    else:
        tab_proj(t, n, ta[k], tb[k])


cdef int basis_overlap(Tab* t, int n, uint64_t bits) noexcept nogil:
    """Exponent k of <bits|t> = 2^(-k/2), or -1 for zero."""
    cdef uint64_t xs[MAXQ]
    cdef uint64_t zs[MAXQ]
    cdef int ss[MAXQ]
    cdef int used[MAXQ]
    cdef int m, col, piv, rank = 0
    cdef uint64_t bit
    if t.zero:
        return -1
    for m in range(n):
        xs[m] = t.x[m]
        zs[m] = t.z[m]
        ss[m] = t.s[m]
        used[m] = 0
    for col in range(n):
        bit = (<uint64_t>1) << col
        piv = -1
        for m in range(n):
            if not used[m] and (xs[m] & bit):
                piv = m
                break
        if piv < 0:
            continue
        used[piv] = 1
        rank += 1
        for m in range(n):
            if m != piv and (xs[m] & bit):
                ss[m] ^= ss[piv] ^ par(zs[piv] & xs[m])
                xs[m] ^= xs[piv]
                zs[m] ^= zs[piv]
    for m in range(n):
        if not used[m] and ss[m] != par(zs[m] & bits):
            return -1
    return t.F + rank


cdef inline int lowcol(uint64_t vx, uint64_t vz, int n) noexcept nogil:
    if vx:
        return __builtin_ctzll(vx)
    return n + __builtin_ctzll(vz)


cdef int insert_echelon(Tab* t, int n, uint64_t* ex, uint64_t* ez, int* es, int* pcol) noexcept nogil:
    """Echelon of commuting generators built row by row.

    Row ``i`` is clear at the pivot columns of rows ``< i``, so reducing a
    vector by the rows in order clears every pivot column.
    """
    cdef uint64_t rx, rz
    cdef int m, i, rs, npiv = 0
    for m in range(n):
        rx = t.x[m]
        rz = t.z[m]
        rs = t.s[m]
        for i in range(npiv):
            if getbit(rx, rz, pcol[i], n):
                rs ^= es[i] ^ par(ez[i] & rx)
                rx ^= ex[i]
                rz ^= ez[i]
        if rx == 0 and rz == 0:
            continue
        ex[npiv] = rx
        ez[npiv] = rz
        es[npiv] = rs
        pcol[npiv] = lowcol(rx, rz, n)
        npiv += 1
    return npiv


cdef int inner(Tab* a, Tab* b, int n) noexcept nogil:
    """Exponent of |<a|b>| = 2^(-k/2), or -1 for zero."""
    cdef uint64_t ex[MAXQ]
    cdef uint64_t ez[MAXQ]
    cdef int es[MAXQ]
    cdef int pcol[MAXQ]
    cdef uint64_t kx[MAXQ]
    cdef uint64_t kz[MAXQ]
    cdef uint64_t kc[MAXQ]
    cdef int kcol[MAXQ]
    cdef uint64_t rx, rz, rc, ax, az
    cdef int m, i, j, npiv, nk = 0, d = 0, s
    if a.zero or b.zero:
        return -1
    npiv = insert_echelon(b, n, ex, ez, es, pcol)
    for m in range(n):
        rx = a.x[m]
        rz = a.z[m]
        for i in range(npiv):
            if getbit(rx, rz, pcol[i], n):
                rx ^= ex[i]
                rz ^= ez[i]
        rc = (<uint64_t>1) << m
        for j in range(nk):
            if getbit(rx, rz, kcol[j], n):
                rx ^= kx[j]
                rz ^= kz[j]
                rc ^= kc[j]
        if rx == 0 and rz == 0:
            # rc selects A rows whose product lies in B's group up to sign
            d += 1
            ax = 0
            az = 0
            s = 0
            for i in range(n):
                if (rc >> i) & 1:
                    s ^= a.s[i] ^ par(az & a.x[i])
                    ax ^= a.x[i]
                    az ^= a.z[i]
            for i in range(npiv):
                if getbit(ax, az, pcol[i], n):
                    s ^= es[i] ^ par(az & ex[i])
                    ax ^= ex[i]
                    az ^= ez[i]
            if s:
                return -1
            continue
        kx[nk] = rx
        kz[nk] = rz
        kc[nk] = rc
        kcol[nk] = lowcol(rx, rz, n)
        nk += 1
    return a.F + b.F + n - d


cdef inline double draw_double(bitgen_t* rng) noexcept nogil:
    return (rng.next_uint64(rng.state) >> 11) * (1.0 / 9007199254740992.0)


cdef inline double pow_sqrt_half(int k) noexcept nogil:
    cdef double v = ldexp(1.0, -(k >> 1))
    if k & 1:
        v *= sqrt(0.5)
    return v


cdef inline int choose_term(double u, const double* cum, int nterms) noexcept nogil:
    cdef double target = u * cum[nterms - 1]
    cdef int k
    for k in range(nterms):
        if target < cum[k]:
            return k
    for k in range(nterms - 1, 0, -1):
        if cum[k] > cum[k - 1]:
            return k
    return 0


cdef void right_chain(Tab* chain, int n, uint64_t bits, const int32_t* ops, int L,
                      const uint8_t* kinds, const uint64_t* ta, const uint64_t* tb) noexcept nogil:
    cdef int p
    tab_basis(&chain[L], n, bits)
    for p in range(L - 1, -1, -1):
        tab_copy(&chain[p], &chain[p + 1], n)
        if ops[p] >= 0:
            apply_term(&chain[p], n, ops[p], kinds, ta, tb)


def run_cycles(int n, object bits_in, int k_in, int nops_in, int32_t[::1] ops,
               uint8_t[::1] kinds, uint64_t[::1] ta, uint64_t[::1] tb, double[::1] cum,
               double beta, long n_cycles, object bit_generator, int64_t[::1] trace,
               bint flip):
    """Run ``n_cycles`` cycles; returns ``(bits, k, n_ops, state_accepts, op_accepts)``."""
    cdef uint64_t bits = bits_in
    cdef uint64_t new_bits
    cdef uint64_t mask
    cdef int k = k_in, nops = nops_in, L = ops.shape[0], nterms = kinds.shape[0]
    cdef int p, kt, w_new, w_op, w_id
    cdef long c, s_acc = 0, o_acc = 0
    cdef double total = cum[nterms - 1]
    cdef double ratio
    cdef bint record = trace.shape[0] > 0
    cdef Tab* chain
    cdef Tab* spare
    cdef Tab* tmp
    cdef Tab* left
    cdef Tab* trial
    cdef bitgen_t* rng
    cdef const uint8_t* kp = &kinds[0]
    cdef const uint64_t* ap = &ta[0]
    cdef const uint64_t* bp = &tb[0]
    cdef const double* cp = &cum[0]
    cdef int32_t* op = &ops[0] if L > 0 else NULL

    if n < 1 or n > MAXQ:
        raise ValueError("compiled kernel supports 1..64 qubits")
    if k < 0:
        raise ValueError("configuration has zero weight")
    mask = (~(<uint64_t>0)) if n == 64 else (((<uint64_t>1) << n) - 1)
    rng = <bitgen_t*> PyCapsule_GetPointer(bit_generator.capsule, "BitGenerator")

    chain = <Tab*> malloc((L + 1) * sizeof(Tab))
    spare = <Tab*> malloc((L + 1) * sizeof(Tab))
    left = <Tab*> malloc(sizeof(Tab))
    trial = <Tab*> malloc(sizeof(Tab))
    if chain == NULL or spare == NULL or left == NULL or trial == NULL:
        free(chain); free(spare); free(left); free(trial)
        raise MemoryError()
    try:
        with bit_generator.lock, nogil:
            for c in range(n_cycles):
                if flip:
                    new_bits = bits ^ ((<uint64_t>1) << (<int>(draw_double(rng) * n)))
                else:
                    new_bits = rng.next_uint64(rng.state) & mask
                right_chain(spare, n, new_bits, op, L, kp, ap, bp)
                w_new = basis_overlap(&spare[0], n, new_bits)
                ratio = 0.0 if w_new < 0 else pow_sqrt_half(w_new - k)
                if draw_double(rng) < ratio:
                    bits = new_bits
                    k = w_new
                    tmp = chain
                    chain = spare
                    spare = tmp
                    s_acc += 1
                else:
                    right_chain(chain, n, bits, op, L, kp, ap, bp)

                tab_basis(left, n, bits)
                for p in range(L):
                    if op[p] < 0:
                        kt = choose_term(draw_double(rng), cp, nterms)
                        tab_copy(trial, &chain[p + 1], n)
                        apply_term(trial, n, kt, kp, ap, bp)
                        w_op = inner(left, trial, n)
                        if w_op < 0:
                            ratio = 0.0
                        else:
                            ratio = beta * total / (L - nops) * pow_sqrt_half(w_op - k)
                        if draw_double(rng) < ratio:
                            op[p] = kt
                            nops += 1
                            k = w_op
                            o_acc += 1
                    else:
                        w_id = inner(left, &chain[p + 1], n)
                        if w_id < 0:
                            ratio = 0.0
                        else:
                            ratio = (<double>(L - nops + 1)) / (beta * total) * pow_sqrt_half(w_id - k)
                        if draw_double(rng) < ratio:
                            op[p] = -1
                            nops -= 1
                            k = w_id
                            o_acc += 1
                    if op[p] >= 0:
                        apply_term(left, n, op[p], kp, ap, bp)
                if record:
                    trace[c] = nops
    finally:
        free(chain)
        free(spare)
        free(left)
        free(trial)
    return int(bits), k, nops, s_acc, o_acc


def evaluate(int n, object bits_in, int32_t[::1] ops, uint8_t[::1] kinds,
             uint64_t[::1] ta, uint64_t[::1] tb):
    """Exponent of ``<s|T_{ops[0]}...T_{ops[L-1]}|s>``, or -1 when zero."""
    cdef uint64_t bits = bits_in
    cdef Tab t
    cdef int p
    if n < 1 or n > MAXQ:
        raise ValueError("compiled kernel supports 1..64 qubits")
    tab_basis(&t, n, bits)
    for p in range(ops.shape[0] - 1, -1, -1):
        if ops[p] >= 0:
            apply_term(&t, n, ops[p], &kinds[0], &ta[0], &tb[0])
            if t.zero:
                return -1
    return basis_overlap(&t, n, bits)


cdef inline void rotate_rows(double[:, ::1] a, Py_ssize_t p, Py_ssize_t q, Py_ssize_t lo,
                             Py_ssize_t hi, double c, double s) noexcept nogil:
    cdef double* rp = &a[p, 0]
    cdef double* rq = &a[q, 0]
    cdef double x, y
    cdef Py_ssize_t i
    for i in range(lo, hi):
        x = rp[i]
        y = rq[i]
        rp[i] = c * x - s * y
        rq[i] = s * x + c * y


def jacobi_eigenvalues(double[:, ::1] a, double tol, int max_sweeps, bint want_vectors):
    """Cyclic Jacobi on a symmetric matrix (overwritten in place).

    Stops once the off-diagonal Frobenius norm is at most ``tol``.  The first
    three sweeps only rotate elements above a fifth of the mean off-diagonal
    size; later, elements below roundoff of both diagonal entries are zeroed
    without a rotation.  Returns ``(diagonal, vectors or None, sweeps)``.
    """
    cdef Py_ssize_t dim = a.shape[0]
    cdef Py_ssize_t p, q, i
    cdef int sweep
    cdef double off = 0.0, thresh, apq, theta, t, c, s, x, y, g
    cdef double[:, ::1] v
    if a.shape[1] != dim:
        raise ValueError("matrix must be square")
    vec_arr = np.eye(dim) if want_vectors else np.zeros((1, 1))
    v = vec_arr
    with nogil:
        for sweep in range(max_sweeps + 1):
            off = 0.0
            thresh = 0.0
            for p in range(dim):
                for q in range(p + 1, dim):
                    off += a[p, q] * a[p, q]
                    thresh += fabs(a[p, q])
            off = sqrt(2.0 * off)
            if off <= tol or sweep == max_sweeps:
                break
            thresh = 0.2 * 2.0 * thresh / (<double>dim * dim) if sweep < 3 else 0.0
            for p in range(dim - 1):
                for q in range(p + 1, dim):
                    apq = a[p, q]
                    g = 100.0 * fabs(apq)
                    if sweep > 3 and fabs(a[p, p]) + g == fabs(a[p, p]) and fabs(a[q, q]) + g == fabs(a[q, q]):
                        a[p, q] = 0.0
                        a[q, p] = 0.0
                        continue
                    if apq == 0.0 or fabs(apq) <= thresh:
                        continue
                    theta = a[q, q] - a[p, p]
                    if fabs(apq) < 1e-150 * fabs(theta):
                        t = apq / theta
                    else:
                        theta = theta / (2.0 * apq)
                        t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                        if theta < 0:
                            t = -t
                    c = 1.0 / sqrt(t * t + 1.0)
                    s = t * c
                    x = a[p, p]
                    y = a[q, q]
                    a[p, p] = x - t * apq
                    a[q, q] = y + t * apq
                    # rows p, q of J^T A J away from the (p, q) block; columns by symmetry
                    rotate_rows(a, p, q, 0, p, c, s)
                    rotate_rows(a, p, q, p + 1, q, c, s)
                    rotate_rows(a, p, q, q + 1, dim, c, s)
                    for i in range(p):
                        a[i, p] = a[p, i]
                        a[i, q] = a[q, i]
                    for i in range(p + 1, q):
                        a[i, p] = a[p, i]
                        a[i, q] = a[q, i]
                    for i in range(q + 1, dim):
                        a[i, p] = a[p, i]
                        a[i, q] = a[q, i]
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    if want_vectors:
                        for i in range(dim):
                            x = v[i, p]
                            y = v[i, q]
                            v[i, p] = c * x - s * y
                            v[i, q] = s * x + c * y
    if off > tol:
        raise ArithmeticError(f"Jacobi did not converge in {max_sweeps} sweeps")
    diag = np.array([a[i, i] for i in range(dim)])
    return diag, (vec_arr if want_vectors else None), sweep
