"""Pure-Python/numpy implementations of the hot kernels.

Each function mirrors ``_ckernels`` operation for operation so the two
backends return bit-identical results: sums are accumulated left to right
and ``pow`` goes through libm in both.
"""

import math

import numpy as np


def tour_lengths(dist, orders):
    """Closed-tour lengths for a batch of stop orders.

    ``dist`` is ``(n+1, n+1)`` with row/column 0 the depot; ``orders`` is
    ``(P, n)`` with 0-based stop indices.
    """
    dist = np.asarray(dist, dtype=np.float64)
    orders = np.asarray(orders, dtype=np.int64)
    P, n = orders.shape
    if n == 0:
        return np.zeros(P)
    nodes = orders + 1
    total = dist[0, nodes[:, 0]].copy()
    for j in range(1, n):
        total += dist[nodes[:, j - 1], nodes[:, j]]
    total += dist[nodes[:, n - 1], 0]
    return total


def aco_construct(weights, uniforms):
    """Roulette-wheel tour construction for a colony of ants.

    Every ant starts at the depot. At each step the next stop is the first
    unvisited index whose running weight sum exceeds ``u * total``.
    """
    weights = np.asarray(weights, dtype=np.float64)
    uniforms = np.asarray(uniforms, dtype=np.float64)
    A, n = uniforms.shape
    orders = np.empty((A, n), dtype=np.int64)
    if n == 0:
        return orders
    rows = np.arange(A)
    unvisited = np.ones((A, n), dtype=bool)
    cur = np.zeros(A, dtype=np.int64)
    for s in range(n):
        w = np.where(unvisited, weights[cur, 1:], 0.0)
        cum = np.cumsum(w, axis=1)
        total = cum[:, -1]
        thr = uniforms[:, s] * total
        hit = cum > thr[:, None]
        pick = np.argmax(hit, axis=1)
        none = ~hit[rows, pick]
        if none.any():
            # rounding left nothing above the threshold: take the last unvisited
            last = n - 1 - np.argmax(unvisited[:, ::-1], axis=1)
            pick = np.where(none, last, pick)
        zero = ~(total > 0.0)
        if zero.any():
            first = np.argmax(unvisited, axis=1)
            pick = np.where(zero, first, pick)
        orders[:, s] = pick
        unvisited[rows, pick] = False
        cur = pick + 1
    return orders


def ox_crossover(parents1, parents2, cut_a, cut_b):
    """Order crossover (OX1) for a batch of parent pairs.

    The child keeps ``p1[a..b]`` in place; the remaining slots, starting after
    ``b`` and wrapping, are filled with ``p2``'s genes in the order they occur
    starting after ``b``.
    """
    parents1 = np.asarray(parents1, dtype=np.int64)
    parents2 = np.asarray(parents2, dtype=np.int64)
    m, n = parents1.shape
    children = np.empty_like(parents1)
    for c in range(m):
        p1 = parents1[c].tolist()
        p2 = parents2[c].tolist()
        a, b = int(cut_a[c]), int(cut_b[c])
        child = [-1] * n
        kept = set(p1[a:b + 1])
        child[a:b + 1] = p1[a:b + 1]
        pos = (b + 1) % n
        for i in range(n):
            gene = p2[(b + 1 + i) % n]
            if gene in kept:
                continue
            child[pos] = gene
            pos = (pos + 1) % n
        children[c] = child
    return children


def adpc_assign(dist_to_centers, ratios, xi, omega):
    """Sequential minimum-adaptive-factor assignment.

    Rows of ``dist_to_centers`` are already in processing order. Returns
    ``(labels, sigmas, omega)`` with ``omega`` the final cluster sizes.
    """
    dist_to_centers = np.asarray(dist_to_centers, dtype=np.float64)
    n, N = dist_to_centers.shape
    omega = np.array(omega, dtype=np.int64)
    exps = [xi * float(r) for r in ratios]
    labels = np.empty(n, dtype=np.int64)
    sigmas = np.empty((n, N))
    for v in range(n):
        best = -1
        best_sigma = 0.0
        row = dist_to_centers[v]
        for i in range(N):
            s = float(row[i]) * math.pow(float(omega[i]), exps[i])
            sigmas[v, i] = s
            if best < 0 or s < best_sigma:
                best, best_sigma = i, s
        labels[v] = best
        omega[best] += 1
    return labels, sigmas, omega


def follow_chain(order, nearest_higher, labels):
    """Propagate labels down the density order: each unlabeled point inherits
    the label of its nearest higher-density neighbor."""
    labels = np.array(labels, dtype=np.int64)
    nh = np.asarray(nearest_higher, dtype=np.int64)
    for i in np.asarray(order, dtype=np.int64).tolist():
        if labels[i] < 0:
            labels[i] = labels[nh[i]]
    return labels


def _stable_argsort(x):
    return np.argsort(x, axis=1, kind="stable")


def _pso_step(dist, x, v, pbest_x, pbest_f, r, w, c1, c2, vmax, ring):
    """One synchronous swarm update, in place.

    ``r`` holds the two uniform blocks ``(2, P, n)``. The attractor is the
    best personal best among ``(i-1, i, i+1)`` when ``ring`` is true, else
    the swarm's best. Returns the new fitness values.
    """
    P = x.shape[0]
    if ring:
        idx = np.arange(P)
        nb = np.stack([(idx - 1) % P, idx, (idx + 1) % P], axis=1)
        lead = nb[idx, np.argmin(pbest_f[nb], axis=1)]
        attractor = pbest_x[lead]
    else:
        attractor = pbest_x[int(np.argmin(pbest_f))][None, :]
    v[...] = w * v + c1 * r[0] * (pbest_x - x) + c2 * r[1] * (attractor - x)
    np.clip(v, -vmax, vmax, out=v)
    x += v
    np.clip(x, 0.0, 1.0, out=x)
    fit = tour_lengths(dist, _stable_argsort(x))
    better = fit < pbest_f
    pbest_x[better] = x[better]
    pbest_f[better] = fit[better]
    return fit


def _draw_index(u, size):
    return np.minimum((u * size).astype(np.int64), size - 1)


def _ga_step(dist, pop, fit, u, tournament, crossover, mutation):
    """One generation with a single elite.

    Columns of the uniform block ``u`` (one row per child): ``2*t``
    tournament draws, two cut points, crossover flag, two swap positions,
    mutation flag. Returns ``(new_pop, new_fit)`` with the elite in row 0.
    """
    P, n = pop.shape
    t = tournament
    contestants = _draw_index(u[:, :2 * t], P).reshape(-1, 2, t)
    cf = fit[contestants]
    # lexicographic (fitness, index) minimum, scanning contestants in order
    win = np.zeros(contestants.shape[:2], dtype=np.int64)
    for j in range(1, t):
        cur = np.take_along_axis(contestants, win[..., None], axis=2)[..., 0]
        curf = np.take_along_axis(cf, win[..., None], axis=2)[..., 0]
        cand, candf = contestants[..., j], cf[..., j]
        take = (candf < curf) | ((candf == curf) & (cand < cur))
        win = np.where(take, j, win)
    winners = np.take_along_axis(contestants, win[..., None], axis=2)[..., 0]
    cuts = np.sort(_draw_index(u[:, 2 * t:2 * t + 2], n), axis=1)
    do_cx = u[:, 2 * t + 2] < crossover
    swaps = _draw_index(u[:, 2 * t + 3:2 * t + 5], n)
    do_mut = u[:, 2 * t + 5] < mutation
    p1, p2 = pop[winners[:, 0]], pop[winners[:, 1]]
    children = p1.copy()
    if do_cx.any():
        children[do_cx] = ox_crossover(p1[do_cx], p2[do_cx], cuts[do_cx, 0], cuts[do_cx, 1])
    rows = np.flatnonzero(do_mut)
    a, b = swaps[rows, 0], swaps[rows, 1]
    children[rows, a], children[rows, b] = children[rows, b], children[rows, a]
    best = int(np.argmin(fit))
    new_pop = np.vstack([pop[best][None, :], children])
    new_fit = np.concatenate([[fit[best]], tour_lengths(dist, children)])
    return new_pop, new_fit


def _aco_step(dist, weights, uniforms, tau, evaporation):
    """Construct the colony's tours, then evaporate and deposit ``1/L`` in place.

    Returns ``(orders, lengths)``.
    """
    orders = aco_construct(weights, uniforms)
    lengths = tour_lengths(dist, orders)
    A, n = orders.shape
    tau *= 1.0 - evaporation
    nodes = np.hstack([np.zeros((A, 1), dtype=np.int64), orders + 1, np.zeros((A, 1), dtype=np.int64)])
    src, dst = nodes[:, :-1].ravel(), nodes[:, 1:].ravel()
    dep = np.repeat(1.0 / lengths, n + 1)
    np.add.at(tau, (src, dst), dep)
    np.add.at(tau, (dst, src), dep)
    return orders, lengths


def pso_iterate(dist, x, v, pbest_x, pbest_f, best_x, best_f, r, w, c1, c2, vmax, ring, history):
    """Run ``len(r)`` swarm iterations in place, tracking the best-ever keys."""
    for b in range(len(r)):
        _pso_step(dist, x, v, pbest_x, pbest_f, r[b], w, c1, c2, vmax, ring)
        g = int(np.argmin(pbest_f))
        if pbest_f[g] < best_f[0]:
            best_f[0] = pbest_f[g]
            best_x[:] = pbest_x[g]
        history[b] = best_f[0]


def ga_iterate(dist, pop, fit, u, tournament, crossover, mutation, history):
    """Run ``len(u)`` generations in place; ``u[g]`` has one row per child."""
    for g in range(len(u)):
        new_pop, new_fit = _ga_step(dist, pop, fit, u[g], tournament, crossover, mutation)
        pop[...] = new_pop
        fit[...] = new_fit
        history[g] = fit.min()


def _powers(tau, alpha):
    if alpha == 1.0:
        return tau
    # libm pow, like the compiled kernel; numpy may use its own SIMD power
    return np.array([math.pow(t, alpha) for t in tau.ravel().tolist()]).reshape(tau.shape)


def aco_iterate(dist, eta_b, tau, u, alpha, evaporation, best_order, best_len, history):
    """Run ``len(u)`` colony iterations in place, tracking the best tour."""
    for it in range(len(u)):
        weights = np.ascontiguousarray(_powers(tau, alpha) * eta_b)
        orders, lengths = _aco_step(dist, weights, u[it], tau, evaporation)
        i = int(np.argmin(lengths))
        if lengths[i] < best_len[0]:
            best_len[0] = lengths[i]
            best_order[:] = orders[i]
        history[it] = best_len[0]
