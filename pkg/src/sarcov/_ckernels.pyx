# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Semantics match ``_pykernels`` bit for bit."""

import numpy as np

from libc.math cimport pow
from libc.stdint cimport int64_t


def tour_lengths(double[:, ::1] dist, const int64_t[:, ::1] orders):
    cdef Py_ssize_t P = orders.shape[0]
    cdef Py_ssize_t n = orders.shape[1]
    out = np.zeros(P, dtype=np.float64)
    cdef double[::1] res = out
    cdef Py_ssize_t p, j
    cdef double total
    if n == 0:
        return out
    for p in range(P):
        total = dist[0, orders[p, 0] + 1]
        for j in range(1, n):
            total += dist[orders[p, j - 1] + 1, orders[p, j] + 1]
        total += dist[orders[p, n - 1] + 1, 0]
        res[p] = total
    return out


cdef void _construct(double[:, ::1] weights, const double[:, ::1] uniforms, int64_t[:, ::1] orders,
                     unsigned char[::1] visited) noexcept nogil:
    cdef Py_ssize_t A = uniforms.shape[0]
    cdef Py_ssize_t n = uniforms.shape[1]
    cdef Py_ssize_t a, s, j, cur, pick, last, first
    cdef double total, thr, cum
    for a in range(A):
        for j in range(n):
            visited[j] = 0
        cur = 0
        for s in range(n):
            total = 0.0
            first = -1
            last = -1
            for j in range(n):
                if not visited[j]:
                    total += weights[cur, j + 1]
                    if first < 0:
                        first = j
                    last = j
            pick = -1
            if total > 0.0:
                thr = uniforms[a, s] * total
                cum = 0.0
                for j in range(n):
                    if not visited[j]:
                        cum += weights[cur, j + 1]
                        if cum > thr:
                            pick = j
                            break
                if pick < 0:
                    pick = last
            else:
                pick = first
            orders[a, s] = pick
            visited[pick] = 1
            cur = pick + 1


def aco_construct(double[:, ::1] weights, const double[:, ::1] uniforms):
    cdef Py_ssize_t A = uniforms.shape[0]
    cdef Py_ssize_t n = uniforms.shape[1]
    out = np.empty((A, n), dtype=np.int64)
    visited = np.zeros(max(n, 1), dtype=np.uint8)
    _construct(weights, uniforms, out, visited)
    return out


def ox_crossover(const int64_t[:, ::1] parents1, const int64_t[:, ::1] parents2,
                 const int64_t[::1] cut_a, const int64_t[::1] cut_b):
    cdef Py_ssize_t m = parents1.shape[0]
    cdef Py_ssize_t n = parents1.shape[1]
    out = np.empty((m, n), dtype=np.int64)
    cdef int64_t[:, ::1] children = out
    kept_buf = np.zeros(max(n, 1), dtype=np.uint8)
    cdef unsigned char[::1] kept = kept_buf
    cdef Py_ssize_t c, i, a, b, pos
    cdef int64_t gene
    for c in range(m):
        a = cut_a[c]
        b = cut_b[c]
        for i in range(n):
            kept[i] = 0
        for i in range(a, b + 1):
            children[c, i] = parents1[c, i]
            kept[parents1[c, i]] = 1
        pos = (b + 1) % n
        for i in range(n):
            gene = parents2[c, (b + 1 + i) % n]
            if kept[gene]:
                continue
            children[c, pos] = gene
            pos = (pos + 1) % n
    return out


def adpc_assign(double[:, ::1] dist_to_centers, ratios, double xi, omega):
    cdef Py_ssize_t n = dist_to_centers.shape[0]
    cdef Py_ssize_t N = dist_to_centers.shape[1]
    omega_out = np.array(omega, dtype=np.int64)
    cdef int64_t[::1] om = omega_out
    exps_arr = np.array([xi * float(r) for r in ratios], dtype=np.float64)
    cdef double[::1] exps = exps_arr
    labels_out = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] labels = labels_out
    sig_out = np.empty((n, N), dtype=np.float64)
    cdef double[:, ::1] sig = sig_out
    cdef Py_ssize_t v, i, best
    cdef double s, best_sigma
    for v in range(n):
        best = -1
        best_sigma = 0.0
        for i in range(N):
            s = dist_to_centers[v, i] * pow(<double>om[i], exps[i])
            sig[v, i] = s
            if best < 0 or s < best_sigma:
                best = i
                best_sigma = s
        labels[v] = best
        om[best] += 1
    return labels_out, sig_out, omega_out


def follow_chain(const int64_t[::1] order, const int64_t[::1] nearest_higher, labels):
    out = np.array(labels, dtype=np.int64)
    cdef int64_t[::1] lab = out
    cdef Py_ssize_t j, i
    for j in range(order.shape[0]):
        i = order[j]
        if lab[i] < 0:
            lab[i] = lab[nearest_higher[i]]
    return out


cdef inline void _argsort_row(const double* keys, int64_t* out, Py_ssize_t n) noexcept nogil:
    # stable insertion sort; n is a cluster size, so quadratic is fine
    cdef Py_ssize_t i, j
    cdef int64_t cur
    for i in range(n):
        out[i] = i
    for i in range(1, n):
        cur = out[i]
        j = i - 1
        while j >= 0 and keys[out[j]] > keys[cur]:
            out[j + 1] = out[j]
            j -= 1
        out[j + 1] = cur


cdef inline double _closed_length(const double* dist, Py_ssize_t V, const int64_t* order,
                                  Py_ssize_t n) noexcept nogil:
    # dist is the row-major (V, V) leg table with the depot at 0
    cdef Py_ssize_t j
    cdef double total
    if n == 0:
        return 0.0
    total = dist[order[0] + 1]
    for j in range(1, n):
        total += dist[(order[j - 1] + 1) * V + order[j] + 1]
    total += dist[(order[n - 1] + 1) * V]
    return total


def pso_iterate(double[:, ::1] dist, double[:, ::1] x, double[:, ::1] v, double[:, ::1] pbest_x,
                double[::1] pbest_f, double[::1] best_x, double[::1] best_f,
                const double[:, :, :, ::1] r, double w, double c1, double c2, double vmax,
                bint ring, double[::1] history):
    cdef Py_ssize_t B = r.shape[0]
    cdef Py_ssize_t P = x.shape[0]
    cdef Py_ssize_t n = x.shape[1]
    cdef Py_ssize_t V = dist.shape[0]
    if P == 0 or n == 0:
        return
    lead_arr = np.empty(P, dtype=np.int64)
    cdef int64_t[::1] lead = lead_arr
    order_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] order = order_arr
    fit_arr = np.empty(P, dtype=np.float64)
    cdef double[::1] fit = fit_arr
    cdef double* X = &x[0, 0]
    cdef double* Vel = &v[0, 0]
    cdef double* PB = &pbest_x[0, 0]
    cdef const double* D = &dist[0, 0]
    cdef const double* R1
    cdef const double* R2
    cdef Py_ssize_t b, p, j, k, best, cand, row, lrow
    cdef double t
    for b in range(B):
        R1 = &r[b, 0, 0, 0]
        R2 = &r[b, 1, 0, 0]
        if ring:
            for p in range(P):
                best = (p - 1 + P) % P
                for k in range(1, 3):
                    cand = (p - 1 + k) % P
                    if pbest_f[cand] < pbest_f[best]:
                        best = cand
                lead[p] = best
        else:
            best = 0
            for p in range(1, P):
                if pbest_f[p] < pbest_f[best]:
                    best = p
            for p in range(P):
                lead[p] = best
        for p in range(P):
            row = p * n
            lrow = lead[p] * n
            for j in range(n):
                t = (w * Vel[row + j] + (c1 * R1[row + j]) * (PB[row + j] - X[row + j])) \
                    + (c2 * R2[row + j]) * (PB[lrow + j] - X[row + j])
                if t < -vmax:
                    t = -vmax
                elif t > vmax:
                    t = vmax
                Vel[row + j] = t
        for p in range(P):
            row = p * n
            for j in range(n):
                t = X[row + j] + Vel[row + j]
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
                X[row + j] = t
            _argsort_row(X + row, &order[0], n)
            fit[p] = _closed_length(D, V, &order[0], n)
        for p in range(P):
            if fit[p] < pbest_f[p]:
                pbest_f[p] = fit[p]
                row = p * n
                for j in range(n):
                    PB[row + j] = X[row + j]
        best = 0
        for p in range(1, P):
            if pbest_f[p] < pbest_f[best]:
                best = p
        if pbest_f[best] < best_f[0]:
            best_f[0] = pbest_f[best]
            for j in range(n):
                best_x[j] = PB[best * n + j]
        history[b] = best_f[0]


cdef inline Py_ssize_t _draw(double u, Py_ssize_t size) noexcept nogil:
    cdef Py_ssize_t i = <Py_ssize_t>(u * size)
    return i if i < size else size - 1


cdef inline Py_ssize_t _tournament(const double* u, int t, const double* fit,
                                   Py_ssize_t P) noexcept nogil:
    # lexicographic (fitness, index) minimum over contestants in draw order
    cdef Py_ssize_t win = _draw(u[0], P)
    cdef Py_ssize_t s, cand
    for s in range(1, t):
        cand = _draw(u[s], P)
        if fit[cand] < fit[win] or (fit[cand] == fit[win] and cand < win):
            win = cand
    return win


cdef void _ga_generation(const double* D, Py_ssize_t V, const int64_t* pop, const double* fit,
                         int64_t* nxt, double* nfit, const double* u, Py_ssize_t P, Py_ssize_t n,
                         int t, double crossover, double mutation, unsigned char* kept) noexcept nogil:
    # one child per row of u (P - 1 rows, 2t + 6 columns); the elite goes to row 0
    cdef Py_ssize_t width = 2 * t + 6
    cdef Py_ssize_t c, j, best, a, b, pos, src, i, tmp
    cdef const int64_t* p1
    cdef const int64_t* p2
    cdef int64_t* child
    cdef const double* uc
    cdef int64_t gene, swap
    best = 0
    for i in range(1, P):
        if fit[i] < fit[best]:
            best = i
    for j in range(n):
        nxt[j] = pop[best * n + j]
    nfit[0] = fit[best]
    for c in range(P - 1):
        uc = u + c * width
        p1 = pop + _tournament(uc, t, fit, P) * n
        p2 = pop + _tournament(uc + t, t, fit, P) * n
        child = nxt + (c + 1) * n
        a = _draw(uc[2 * t], n)
        b = _draw(uc[2 * t + 1], n)
        if a > b:
            tmp = a
            a = b
            b = tmp
        if uc[2 * t + 2] < crossover:
            for i in range(n):
                kept[i] = 0
            for i in range(a, b + 1):
                child[i] = p1[i]
                kept[p1[i]] = 1
            # fill after b (wrapping) with p2's genes read from after b
            pos = b + 1
            if pos == n:
                pos = 0
            src = pos
            for i in range(n):
                gene = p2[src]
                src += 1
                if src == n:
                    src = 0
                if kept[gene]:
                    continue
                child[pos] = gene
                pos += 1
                if pos == n:
                    pos = 0
        else:
            for i in range(n):
                child[i] = p1[i]
        if uc[2 * t + 5] < mutation:
            a = _draw(uc[2 * t + 3], n)
            b = _draw(uc[2 * t + 4], n)
            swap = child[a]
            child[a] = child[b]
            child[b] = swap
        nfit[c + 1] = _closed_length(D, V, child, n)


def ga_iterate(double[:, ::1] dist, int64_t[:, ::1] pop, double[::1] fit, const double[:, :, ::1] u,
               int tournament, double crossover, double mutation, double[::1] history):
    cdef Py_ssize_t B = u.shape[0]
    cdef Py_ssize_t P = pop.shape[0]
    cdef Py_ssize_t n = pop.shape[1]
    cdef Py_ssize_t V = dist.shape[0]
    if B == 0 or n == 0:
        return
    spare_pop = np.empty((P, n), dtype=np.int64)
    spare_fit = np.empty(P, dtype=np.float64)
    kept_buf = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] kept = kept_buf
    cdef int64_t[:, ::1] sp = spare_pop
    cdef double[::1] sf = spare_fit
    # ping-pong between the caller's buffers and the spare ones
    cdef int64_t* cur_pop = &pop[0, 0]
    cdef double* cur_fit = &fit[0]
    cdef int64_t* nxt_pop = &sp[0, 0]
    cdef double* nxt_fit = &sf[0]
    cdef int64_t* tp
    cdef double* tf
    cdef Py_ssize_t g, i
    cdef double lo
    for g in range(B):
        _ga_generation(&dist[0, 0], V, cur_pop, cur_fit, nxt_pop, nxt_fit, &u[g, 0, 0], P, n,
                       tournament, crossover, mutation, &kept[0])
        lo = nxt_fit[0]
        for i in range(1, P):
            if nxt_fit[i] < lo:
                lo = nxt_fit[i]
        history[g] = lo
        tp = cur_pop
        cur_pop = nxt_pop
        nxt_pop = tp
        tf = cur_fit
        cur_fit = nxt_fit
        nxt_fit = tf
    if B % 2 == 1:
        pop[...] = sp
        fit[...] = sf


def aco_iterate(double[:, ::1] dist, double[:, ::1] eta_b, double[:, ::1] tau,
                const double[:, :, ::1] u, double alpha, double evaporation,
                int64_t[::1] best_order, double[::1] best_len, double[::1] history):
    cdef Py_ssize_t B = u.shape[0]
    cdef Py_ssize_t A = u.shape[1]
    cdef Py_ssize_t n = u.shape[2]
    cdef Py_ssize_t V = tau.shape[0]
    if A == 0 or n == 0:
        return
    weights_arr = np.empty((V, V), dtype=np.float64)
    cdef double[:, ::1] weights = weights_arr
    orders_arr = np.empty((A, n), dtype=np.int64)
    cdef int64_t[:, ::1] orders = orders_arr
    visited = np.zeros(n, dtype=np.uint8)
    lengths_arr = np.empty(A, dtype=np.float64)
    cdef double[::1] lengths = lengths_arr
    cdef const double* D = &dist[0, 0]
    cdef double* T = &tau[0, 0]
    cdef const double* E = &eta_b[0, 0]
    cdef double* W = &weights[0, 0]
    cdef const int64_t* o
    cdef Py_ssize_t it, a, j, i, src, dst, best
    cdef double keep = 1.0 - evaporation
    cdef double dep
    cdef bint unit = alpha == 1.0
    for it in range(B):
        for i in range(V * V):
            if unit:
                W[i] = T[i] * E[i]
            else:
                W[i] = pow(T[i], alpha) * E[i]
        _construct(weights, u[it], orders, visited)
        best = 0
        for a in range(A):
            lengths[a] = _closed_length(D, V, &orders[a, 0], n)
            if lengths[a] < lengths[best]:
                best = a
        if lengths[best] < best_len[0]:
            best_len[0] = lengths[best]
            for j in range(n):
                best_order[j] = orders[best, j]
        history[it] = best_len[0]
        for i in range(V * V):
            T[i] *= keep
        for a in range(A):
            dep = 1.0 / lengths[a]
            o = &orders[a, 0]
            for j in range(n + 1):
                src = 0 if j == 0 else o[j - 1] + 1
                dst = 0 if j == n else o[j] + 1
                T[src * V + dst] += dep
        for a in range(A):
            dep = 1.0 / lengths[a]
            o = &orders[a, 0]
            for j in range(n + 1):
                src = 0 if j == 0 else o[j - 1] + 1
                dst = 0 if j == n else o[j] + 1
                T[dst * V + src] += dep
