"""Per-UAV tour optimization and energy-budget repair.

Each cluster becomes a closed tour from the base. The tour is optimized for
flight distance by a permutation metaheuristic (PSO, GA or ACO), then stops
are removed greedily until the tour fits the energy budget, and removed stops
are put back wherever they still fit.
"""

from __future__ import annotations

import itertools
import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InvalidPermutation, TooManyStops, ValidationError
from .model import EnergyModel, Route, Solution, check_mode, distance_matrix

SOLVERS = ("pso", "ga", "aco")
EXACT_LIMIT = 10


def substream(seed: int, *names) -> np.random.Generator:
    """Independent generator for a named component of a seeded run."""
    words = [int(seed) & 0xFFFFFFFF, (int(seed) >> 32) & 0xFFFFFFFF]
    for name in names:
        words.append(zlib.crc32(str(name).encode()))
    return np.random.default_rng(np.random.SeedSequence(words))


@dataclass(frozen=True)
class TourProblem:
    """Depot plus stops; ``dist`` is the ``(n+1, n+1)`` leg table with the depot at 0."""

    depot: np.ndarray
    stops: np.ndarray
    refs: tuple
    distance_mode: str = "3d"
    dist: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        check_mode(self.distance_mode)
        stops = np.asarray(self.stops, dtype=float).reshape(-1, 3)
        depot = np.asarray(self.depot, dtype=float).reshape(3)
        refs = tuple(self.refs) if self.refs is not None else tuple(range(len(stops)))
        if len(refs) != len(stops):
            raise ValidationError("one reference per stop required")
        if len(set(refs)) != len(refs):
            raise ValidationError("stop references must be distinct")
        object.__setattr__(self, "stops", stops)
        object.__setattr__(self, "depot", depot)
        object.__setattr__(self, "refs", refs)
        nodes = np.vstack([depot[None, :], stops])
        object.__setattr__(self, "dist", np.ascontiguousarray(distance_matrix(nodes, mode=self.distance_mode)))

    @property
    def n(self) -> int:
        return len(self.stops)

    def subproblem(self, indices) -> "TourProblem":
        idx = list(indices)
        return TourProblem(self.depot, self.stops[idx], tuple(self.refs[i] for i in idx), self.distance_mode)


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 100
    population_size: int = 30
    seed: int = 0
    pso_w: float = 0.729
    pso_c1: float = 1.49445
    pso_c2: float = 1.49445
    pso_vmax: float = 0.5
    pso_topology: str = "ring"  # "ring" (neighbors i-1, i+1) or "global"
    ga_crossover: float = 0.9
    ga_mutation: float = 0.5
    ga_tournament: int = 2
    aco_alpha: float = 1.0
    aco_beta: float = 2.0
    aco_evaporation: float = 0.5
    aco_ants: int | None = None  # defaults to population_size

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValidationError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.population_size < 2:
            raise ValidationError(f"population_size must be >= 2, got {self.population_size}")
        for name in ("ga_crossover", "ga_mutation", "aco_evaporation"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1]")
        if self.pso_topology not in ("ring", "global"):
            raise ValidationError(f"pso_topology must be 'ring' or 'global', got {self.pso_topology!r}")
        if self.ga_tournament < 1:
            raise ValidationError("ga_tournament must be >= 1")
        if self.aco_ants is not None and self.aco_ants < 1:
            raise ValidationError("aco_ants must be >= 1")

    @property
    def ants(self) -> int:
        return self.aco_ants or self.population_size


@dataclass(frozen=True, eq=False)
class TourResult:
    order: tuple
    length: float
    history: tuple
    evaluations: int

    def __eq__(self, other):
        return (
            isinstance(other, TourResult)
            and self.order == other.order
            and self.length == other.length
            and self.history == other.history
            and self.evaluations == other.evaluations
        )


def _check_permutation(order, n):
    arr = np.asarray(order, dtype=np.int64).reshape(-1)
    if arr.size != n or (n and (np.sort(arr) != np.arange(n)).any()):
        raise InvalidPermutation(f"{list(order)} is not a permutation of 0..{n - 1}")
    return arr


def tour_length(problem: TourProblem, order) -> float:
    """Closed tour length depot -> stops in ``order`` -> depot."""
    arr = _check_permutation(order, problem.n)
    return float(kernels.active().tour_lengths(problem.dist, arr[None, :])[0])


def decode_keys(keys) -> np.ndarray:
    """Random-keys decoding: stable ascending argsort."""
    keys = np.asarray(keys, dtype=float)
    return np.argsort(keys, axis=-1, kind="stable")


def _trivial(problem):
    if problem.n == 0:
        return TourResult((), 0.0, (0.0,), 0)
    if problem.n == 1:
        length = float(problem.dist[0, 1] + problem.dist[1, 0])
        return TourResult((0,), length, (length,), 1)
    return None


def _result(best_order, best_len, history, evaluations):
    return TourResult(tuple(int(i) for i in best_order), float(best_len), tuple(history), evaluations)


_DRAW_BLOCK = 1 << 20  # uniforms pre-drawn per kernel call


def _chunks(iterations, draws_per_iteration):
    """Split ``iterations`` into blocks whose pre-drawn uniforms stay bounded.

    Drawing a block at once consumes the generator exactly like drawing
    iteration by iteration, so the split does not change results.
    """
    step = max(1, _DRAW_BLOCK // max(1, draws_per_iteration))
    done = 0
    while done < iterations:
        size = min(step, iterations - done)
        yield done, size
        done += size


def solve_pso(problem: TourProblem, config: SolverConfig = SolverConfig(), rng=None) -> TourResult:
    """Random-keys particle swarm.

    Particles are real vectors in ``[0, 1]^n`` decoded by argsort. The first
    iteration evaluates the initial swarm; each later one pulls every
    particle towards its personal best and its neighborhood best (the ring
    neighbors, or the whole swarm with ``pso_topology="global"``). The
    best tour ever seen is returned.
    """
    trivial = _trivial(problem)
    if trivial is not None:
        return trivial
    rng = np.random.default_rng(config.seed) if rng is None else rng
    k = kernels.active()
    P, n = config.population_size, problem.n
    vmax = config.pso_vmax
    x = rng.random((P, n))
    v = rng.uniform(-vmax, vmax, (P, n))
    fit = k.tour_lengths(problem.dist, decode_keys(x))
    pbest_x, pbest_f = x.copy(), fit.copy()
    g = int(np.argmin(pbest_f))
    best_x, best_f = pbest_x[g].copy(), np.array([pbest_f[g]])
    history = np.empty(config.max_iterations)
    history[0] = best_f[0]
    for done, size in _chunks(config.max_iterations - 1, 2 * P * n):
        r = rng.random((size, 2, P, n))
        k.pso_iterate(problem.dist, x, v, pbest_x, pbest_f, best_x, best_f, r, config.pso_w,
                      config.pso_c1, config.pso_c2, vmax, config.pso_topology == "ring",
                      history[1 + done:1 + done + size])
    return _result(decode_keys(best_x), best_f[0], history.tolist(), P * config.max_iterations)


def solve_ga(problem: TourProblem, config: SolverConfig = SolverConfig(), rng=None) -> TourResult:
    """Permutation GA: tournament selection, OX1 crossover, swap mutation, one elite.

    The first iteration is the random initial population.
    """
    trivial = _trivial(problem)
    if trivial is not None:
        return trivial
    rng = np.random.default_rng(config.seed) if rng is None else rng
    k = kernels.active()
    P, n, t = config.population_size, problem.n, config.ga_tournament
    pop = np.ascontiguousarray(rng.permuted(np.tile(np.arange(n, dtype=np.int64), (P, 1)), axis=1))
    fit = k.tour_lengths(problem.dist, pop)
    history = np.empty(config.max_iterations)
    history[0] = fit.min()
    # per child: 2t tournament draws, 2 cuts, crossover flag, 2 swap slots, mutation flag
    width = 2 * t + 6
    for done, size in _chunks(config.max_iterations - 1, (P - 1) * width):
        u = rng.random((size, P - 1, width))
        k.ga_iterate(problem.dist, pop, fit, u, t, config.ga_crossover, config.ga_mutation,
                     history[1 + done:1 + done + size])
    best = int(np.argmin(fit))
    return _result(pop[best], fit[best], history.tolist(), P * config.max_iterations)


def _nearest_neighbor_length(dist):
    n = len(dist) - 1
    cur, left, total = 0, set(range(1, n + 1)), 0.0
    while left:
        nxt = min(left, key=lambda j: (dist[cur, j], j))
        total += dist[cur, nxt]
        left.remove(nxt)
        cur = nxt
    return total + dist[cur, 0]


def solve_aco(problem: TourProblem, config: SolverConfig = SolverConfig(), rng=None) -> TourResult:
    """Ant System over the depot plus stops.

    Pheromone starts at ``ants / L_nn`` (nearest-neighbor tour length); each
    iteration evaporates globally and every ant deposits ``1 / L`` on its
    edges, depot legs included.
    """
    trivial = _trivial(problem)
    if trivial is not None:
        return trivial
    rng = np.random.default_rng(config.seed) if rng is None else rng
    k = kernels.active()
    A, n = config.ants, problem.n
    dist = problem.dist
    with np.errstate(divide="ignore"):
        eta = np.where(dist > 0.0, 1.0 / np.maximum(dist, 1e-300), 1e12)
    eta_b = np.ascontiguousarray(eta ** config.aco_beta)
    tau = np.full_like(dist, A / _nearest_neighbor_length(dist))
    best_order, best_len = np.zeros(n, dtype=np.int64), np.array([math.inf])
    history = np.empty(config.max_iterations)
    for done, size in _chunks(config.max_iterations, A * n):
        u = rng.random((size, A, n))
        k.aco_iterate(dist, eta_b, tau, u, float(config.aco_alpha), config.aco_evaporation,
                      best_order, best_len, history[done:done + size])
    return _result(best_order, best_len[0], history.tolist(), A * config.max_iterations)


def solve_exact(problem: TourProblem, chunk: int = 20_000) -> TourResult:
    """Exhaustive enumeration; the depot is the fixed start so only mirror
    images are skipped (first stop index below last)."""
    if problem.n > EXACT_LIMIT:
        raise TooManyStops(f"exact enumeration is limited to {EXACT_LIMIT} stops, got {problem.n}")
    trivial = _trivial(problem)
    if trivial is not None:
        return trivial
    k = kernels.active()
    best_order, best_len, evaluations = None, math.inf, 0
    perms = (p for p in itertools.permutations(range(problem.n)) if p[0] < p[-1])
    while True:
        block = list(itertools.islice(perms, chunk))
        if not block:
            break
        arr = np.array(block, dtype=np.int64)
        lengths = k.tour_lengths(problem.dist, arr)
        evaluations += len(block)
        i = int(np.argmin(lengths))
        if lengths[i] < best_len:
            best_order, best_len = arr[i], float(lengths[i])
    return _result(best_order, best_len, (best_len,), evaluations)


def solve(problem: TourProblem, solver: str, config: SolverConfig = SolverConfig(), rng=None) -> TourResult:
    try:
        fn = {"pso": solve_pso, "ga": solve_ga, "aco": solve_aco}[solver.lower()]
    except KeyError:
        raise ValidationError(f"unknown solver {solver!r}; choose from {SOLVERS}") from None
    return fn(problem, config, rng)


# -- energy repair -------------------------------------------------------------

def _order_energy(dist, order, em):
    if not order:
        return 0.0
    total = dist[0, order[0] + 1]
    for a, b in zip(order, order[1:]):
        total += dist[a + 1, b + 1]
    total += dist[order[-1] + 1, 0]
    return em.e_flight * total + em.e_image * len(order)


def _removal_saving(dist, order, pos, em):
    prev = 0 if pos == 0 else order[pos - 1] + 1
    nxt = 0 if pos == len(order) - 1 else order[pos + 1] + 1
    cur = order[pos] + 1
    return em.e_flight * (dist[prev, cur] + dist[cur, nxt] - dist[prev, nxt]) + em.e_image


def _best_insertion(dist, order, stop, em):
    """Cheapest ``(extra_energy, position)`` for inserting ``stop``."""
    nodes = [0] + [o + 1 for o in order] + [0]
    s = stop + 1
    best = (math.inf, 0)
    for pos in range(len(nodes) - 1):
        a, b = nodes[pos], nodes[pos + 1]
        extra = em.e_flight * (dist[a, s] + dist[s, b] - dist[a, b]) + em.e_image
        if extra < best[0]:
            best = (extra, pos)
    return best


def _protection(problem, target_of, outside):
    """Closure telling whether dropping a stop would leave its target uncovered."""
    if target_of is None:
        return lambda stop, order: False

    def protected(stop, order):
        t = target_of(problem.refs[stop])
        inside = sum(1 for o in order if target_of(problem.refs[o]) == t)
        return outside.get(t, 0) + inside <= 1

    return protected


def reinsert(problem, order, dropped, em, target_of=None, outside=None):
    """Put dropped stops back at their cheapest position while the budget allows.

    Stops whose target would otherwise go uncovered are tried first, then by
    increasing insertion cost, ties by stop index.
    """
    order, dropped = list(order), set(dropped)
    dist = problem.dist
    energy = _order_energy(dist, order, em)
    outside = outside or {}
    while dropped:
        best = None
        for stop in sorted(dropped):
            extra, pos = _best_insertion(dist, order, stop, em)
            if energy + extra > em.e_max:
                continue
            uncovered = 0
            if target_of is not None:
                t = target_of(problem.refs[stop])
                covered = outside.get(t, 0) + sum(1 for o in order if target_of(problem.refs[o]) == t)
                uncovered = 0 if covered == 0 else 1
            key = (uncovered, extra, stop)
            if best is None or key < best[0]:
                best = (key, stop, pos)
        if best is None:
            break
        _, stop, pos = best
        order.insert(pos, stop)
        dropped.discard(stop)
        new_energy = _order_energy(dist, order, em)
        if new_energy > em.e_max:
            # rounding pushed the recomputed energy over; undo and stop
            order.pop(pos)
            dropped.add(stop)
            break
        energy = new_energy
    return order, dropped


def drop_to_budget(problem: TourProblem, order, em: EnergyModel, protected=frozenset(), *,
                   target_of=None, outside=None):
    """Shrink a tour until it satisfies the energy budget.

    Repeatedly removes the unprotected stop with the largest energy saving
    (ties by stop index), splicing its neighbors together. Protected stops
    (from ``protected`` refs, or computed live from ``target_of``/``outside``
    so a target's last viewpoint is kept) go only when nothing else is left.
    Dropped stops are then re-inserted wherever they still fit, so no single
    dropped stop can be added back within budget.

    Returns ``(order, dropped)`` with stop indices into ``problem``.
    """
    order = [int(i) for i in _check_permutation(order, problem.n)]
    em_ok = lambda o: _order_energy(problem.dist, o, em) <= em.e_max
    if em_ok(order):
        return order, set()
    is_live_protected = _protection(problem, target_of, outside or {})
    protected_refs = set(protected)
    dropped = set()
    dist = problem.dist
    while order and not em_ok(order):
        best = None
        for pos, stop in enumerate(order):
            guarded = problem.refs[stop] in protected_refs or is_live_protected(stop, order)
            key = (guarded, -_removal_saving(dist, order, pos, em), stop)
            if best is None or key < best[0]:
                best = (key, pos)
        stop = order.pop(best[1])
        dropped.add(stop)
    order, dropped = reinsert(problem, order, dropped, em, target_of, outside)
    return order, dropped


# -- cluster and solution planning --------------------------------------------

def plan_cluster(problem: TourProblem, em: EnergyModel, solver: str = "pso",
                 config: SolverConfig = SolverConfig(), uav_id: int = 1, rng=None,
                 reopt_rng=None, target_of=None, outside=None, protected=frozenset()):
    """Optimize one cluster's tour and repair it to the budget.

    When stops had to be dropped, the survivors get one more solver pass; the
    shorter of the two tours is kept and a final reinsertion pass runs on it.
    Returns ``(route, dropped_refs, result)``.
    """
    if problem.n == 0:
        return Route(uav_id, (), 0.0), set(), _trivial(problem)
    result = solve(problem, solver, config, rng)
    order, dropped = drop_to_budget(
        problem, result.order, em, protected, target_of=target_of, outside=outside
    )
    if dropped and len(order) > 1:
        sub = problem.subproblem(order)
        second = solve(sub, solver, config, reopt_rng if reopt_rng is not None else rng)
        if second.length < tour_length(sub, range(sub.n)):
            order = [order[i] for i in second.order]
        order, dropped = reinsert(problem, order, dropped, em, target_of, outside)
    refs = tuple(problem.refs[i] for i in order)
    length = tour_length(problem.subproblem(order), range(len(order))) if order else 0.0
    return Route(uav_id, refs, length), {problem.refs[i] for i in dropped}, result


def plan_solution(viewpoints, clustering, em: EnergyModel, solver: str = "pso",
                  config: SolverConfig = SolverConfig(), distance_mode: str = "3d",
                  protect_targets: bool = True) -> Solution:
    """Plan every cluster and assemble the solution.

    Clusters are handled in decreasing center-to-base distance so that later
    clusters know which targets earlier drops have put at risk; with
    ``protect_targets`` a target's last remaining viewpoint is dropped only
    as a last resort.
    """
    refs = [v.ref for v in viewpoints]
    positions = np.array([[v.position.x, v.position.y, v.position.z] for v in viewpoints], dtype=float)
    alive = {}
    for m, _k in refs:
        alive[m] = alive.get(m, 0) + 1
    N = clustering.n_clusters
    plan_order = sorted(range(N), key=lambda i: (-float(clustering.center_base_distances[i]), i))
    routes = [None] * N
    dropped = set()
    target_of = (lambda ref: ref[0]) if protect_targets else None
    for i in plan_order:
        members = clustering.members(i)
        problem = TourProblem(np.zeros(3), positions[members], tuple(refs[j] for j in members), distance_mode)
        outside = dict(alive)
        for m, _k in problem.refs:
            outside[m] -= 1
        route, lost, _ = plan_cluster(
            problem, em, solver, config, uav_id=i + 1,
            rng=substream(config.seed, "solver", i), reopt_rng=substream(config.seed, "reopt", i),
            target_of=target_of, outside=outside,
        )
        for m, _k in lost:
            alive[m] -= 1
        routes[i] = route
        dropped |= lost
    return Solution(tuple(routes), frozenset(dropped))
