"""Partition viewpoints into one cluster per UAV.

Three strategies are provided:

``adpc``
    Density-peak centers, then a sequential assignment that walks the
    viewpoints from the farthest to the nearest (relative to the base) and
    puts each one in the cluster with the smallest adaptive factor
    ``D(v, C_i) * size_i ** (xi * r_i)``. ``r_i`` is the center's base
    distance relative to the mean over centers, so large clusters far from
    the base become expensive to join.
``dpc``
    Classic density-peak clustering: same centers, each remaining point
    inherits the cluster of its nearest higher-density neighbor.
``kmeans``
    Lloyd iterations from a seeded k-means++ start. The member nearest each
    centroid becomes the cluster's center viewpoint.

Every tie (density, gamma, adaptive factor) is broken by ascending viewpoint
index, i.e. by (target_id, view_index) for ``generate_viewpoints`` output.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DegenerateGeometry, NotEnoughPoints, TooFewPoints, ValidationError
from .model import check_mode, distance_matrix

log = logging.getLogger(__name__)

METHODS = ("adpc", "dpc", "kmeans")


@dataclass(frozen=True)
class AdpcParams:
    xi: float = 0.5
    d_c_percentile: float = 2.0
    distance_mode: str = "3d"
    # Count only viewpoints of other targets in the density sum.
    exclude_same_target: bool = False
    # At most one center per target while enough targets remain.
    spread_centers: bool = False
    kmeans_n_init: int = 10

    def __post_init__(self):
        if not (math.isfinite(self.xi) and self.xi >= 0):
            raise ValidationError(f"xi must be >= 0, got {self.xi}")
        if not (0 < self.d_c_percentile < 100):
            raise ValidationError(f"d_c percentile must lie in (0, 100), got {self.d_c_percentile}")
        check_mode(self.distance_mode)
        if self.kmeans_n_init < 1:
            raise ValidationError(f"kmeans_n_init must be >= 1, got {self.kmeans_n_init}")


@dataclass(frozen=True, eq=False)
class DensityProfile:
    rho: np.ndarray
    delta: np.ndarray
    gamma: np.ndarray
    d_c: float
    nearest_higher: np.ndarray  # -1 for the density peak
    order: np.ndarray  # indices by decreasing density, ties by index


@dataclass(frozen=True, eq=False)
class Clustering:
    """Result of a clustering run.

    ``centers[i]`` is the viewpoint index of cluster ``i``'s center and
    ``labels[v]`` the cluster of viewpoint ``v``. For ADPC the assignment
    audit is kept: ``audit_order[j]`` is the j-th assigned viewpoint and
    ``audit_sigmas[j]`` its adaptive factor towards every cluster at that
    moment.
    """

    method: str
    centers: tuple
    labels: np.ndarray
    center_base_distances: np.ndarray
    ratios: np.ndarray | None = None
    audit_order: np.ndarray | None = None
    audit_sigmas: np.ndarray | None = None
    profile: DensityProfile | None = field(default=None, repr=False)

    @property
    def n_clusters(self) -> int:
        return len(self.centers)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_clusters)

    def members(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.labels == i)

    def same_as(self, other: "Clustering") -> bool:
        return self.centers == other.centers and np.array_equal(self.labels, other.labels)


def pairwise_distances(points, mode: str = "3d") -> np.ndarray:
    points = np.asarray(points, dtype=float)
    if len(points) < 2:
        raise TooFewPoints(f"need at least 2 points, got {len(points)}")
    return distance_matrix(points, mode=mode)


def cutoff_distance(table, percentile: float = 2.0) -> float:
    """Nearest-rank percentile of the off-diagonal pairwise distances.

    When the percentile lands on a zero (coincident points) the smallest
    positive distance is returned instead so the density kernel stays finite.
    """
    table = np.asarray(table, dtype=float)
    iu = np.triu_indices(len(table), k=1)
    values = np.sort(table[iu])
    if values.size == 0 or values[-1] <= 0.0:
        raise DegenerateGeometry("all pairwise distances are zero")
    rank = max(1, math.ceil(percentile / 100.0 * values.size))
    d_c = float(values[rank - 1])
    if d_c <= 0.0:
        d_c = float(values[values > 0.0][0])
    return d_c


def relative_density(table, d_c: float, groups=None) -> np.ndarray:
    """Gaussian-kernel density, excluding each point's own term.

    With ``groups`` (e.g. target ids) the sum also skips points that share
    the group of the point being scored.
    """
    table = np.asarray(table, dtype=float)
    k = np.exp(-((table / d_c) ** 2))
    np.fill_diagonal(k, 0.0)
    if groups is not None:
        g = np.asarray(groups)
        k[g[:, None] == g[None, :]] = 0.0
    return k.sum(axis=1)


def density_order(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    return np.lexsort((np.arange(len(rho)), -rho))


def _delta_and_neighbor(table, rho):
    table = np.asarray(table, dtype=float)
    n = len(table)
    order = density_order(rho)
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)
    higher = rank[None, :] < rank[:, None]
    masked = np.where(higher, table, np.inf)
    nearest = np.argmin(masked, axis=1)
    delta = masked[np.arange(n), nearest]
    peak = order[0]
    delta[peak] = table[peak].max()
    nearest[peak] = -1
    return delta, nearest.astype(np.int64), order


def distance_factor(table, rho) -> np.ndarray:
    """Distance to the nearest point of higher density.

    The density peak gets its largest distance to any point instead. Density
    ties rank the lower index as higher.
    """
    return _delta_and_neighbor(table, rho)[0]


def density_profile(table, params: AdpcParams = AdpcParams(), groups=None) -> DensityProfile:
    d_c = cutoff_distance(table, params.d_c_percentile)
    rho = relative_density(table, d_c, groups if params.exclude_same_target else None)
    delta, nearest, order = _delta_and_neighbor(table, rho)
    return DensityProfile(rho, delta, rho * delta, d_c, nearest, order)


def select_centers(gamma, N: int, groups=None) -> tuple:
    """Indices of the ``N`` largest ``gamma`` values, best first.

    With ``groups``, candidates whose group already holds a center are
    skipped; once every group has one, the skipped candidates fill the
    remaining slots in ``gamma`` order.
    """
    gamma = np.asarray(gamma, dtype=float)
    if N < 1 or N > len(gamma):
        raise NotEnoughPoints(f"cannot pick {N} centers from {len(gamma)} points")
    order = [int(i) for i in np.lexsort((np.arange(len(gamma)), -gamma))]
    if groups is None:
        return tuple(order[:N])
    groups = np.asarray(groups)
    taken, chosen = set(), []
    for i in order:
        if groups[i] not in taken:
            taken.add(groups[i])
            chosen.append(i)
            if len(chosen) == N:
                return tuple(chosen)
    chosen_set = set(chosen)
    chosen += [i for i in order if i not in chosen_set][:N - len(chosen)]
    return tuple(chosen)


def base_distances(points, mode: str = "3d") -> np.ndarray:
    return distance_matrix(np.asarray(points, dtype=float), np.zeros((1, 3)), mode)[:, 0]


def relative_distance_ratio(center_base_distances) -> np.ndarray:
    d = np.asarray(center_base_distances, dtype=float)
    mean = d.mean()
    if mean <= 0.0:
        raise DegenerateGeometry("every center coincides with the base")
    return d / mean


def adaptive_factor(distance: float, omega: int, ratio: float, xi: float) -> float:
    return distance * math.pow(omega, xi * ratio)


def adpc_assign(points, centers, params: AdpcParams = AdpcParams(), table=None) -> Clustering:
    """Assign every non-center viewpoint by minimum adaptive factor.

    Viewpoints are processed by decreasing distance to the base; the chosen
    cluster's size grows immediately, so later choices see it.
    """
    points = np.asarray(points, dtype=float)
    if table is None:
        table = pairwise_distances(points, params.distance_mode)
    n = len(points)
    centers = tuple(int(c) for c in centers)
    labels = np.full(n, -1, dtype=np.int64)
    labels[list(centers)] = np.arange(len(centers))
    to_base = base_distances(points, params.distance_mode)
    center_d = to_base[list(centers)]
    ratios = relative_distance_ratio(center_d)
    rest = np.flatnonzero(labels < 0)
    order = rest[np.lexsort((rest, -to_base[rest]))]
    dist_vc = np.ascontiguousarray(table[np.ix_(order, list(centers))])
    assigned, sigmas, _ = kernels.active().adpc_assign(
        dist_vc, ratios, float(params.xi), np.ones(len(centers), dtype=np.int64)
    )
    labels[order] = assigned
    return Clustering("adpc", centers, labels, center_d, ratios, order, sigmas)


def dpc_assign(points, centers, profile: DensityProfile, table, mode: str = "3d") -> Clustering:
    """Classic density-peak allocation along the nearest-higher-density chain.

    A non-center point with no denser neighbor (the peak, when it is not
    itself a center) joins its nearest center.
    """
    points = np.asarray(points, dtype=float)
    centers = tuple(int(c) for c in centers)
    labels = np.full(len(points), -1, dtype=np.int64)
    labels[list(centers)] = np.arange(len(centers))
    nearest = profile.nearest_higher.copy()
    for i in np.flatnonzero((nearest < 0) & (labels < 0)):
        labels[i] = int(np.argmin(table[i, list(centers)]))
    labels = kernels.active().follow_chain(profile.order, nearest, labels)
    center_d = base_distances(points[list(centers)], mode)
    return Clustering("dpc", centers, labels, center_d, profile=profile)


def _kmeanspp(points, N, rng):
    n = len(points)
    chosen = [int(rng.integers(n))]
    d2 = ((points - points[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, N):
        total = d2.sum()
        if total <= 0.0:
            free = np.setdiff1d(np.arange(n), chosen)
            nxt = int(free[0])
        else:
            cum = np.cumsum(d2)
            nxt = int(np.searchsorted(cum, rng.random() * total, side="right"))
            nxt = min(nxt, n - 1)
        chosen.append(nxt)
        d2 = np.minimum(d2, ((points - points[nxt]) ** 2).sum(axis=1))
    return points[chosen].copy()


def _nearest(points, centroids):
    d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1), d2


def _lloyd(points, N, rng, max_iters):
    n = len(points)
    centroids = _kmeanspp(points, N, rng)
    labels, d2 = _nearest(points, centroids)
    for _ in range(max_iters):
        for i in range(N):
            members = labels == i
            if not members.any():
                own = d2[np.arange(n), labels]
                far = int(np.argmax(own))
                log.warning("EmptyClusterRepair: cluster %d re-seeded at point %d", i, far)
                labels[far] = i
                members = labels == i
            centroids[i] = points[members].mean(axis=0)
        new_labels, d2 = _nearest(points, centroids)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    inertia = math.fsum(d2[np.arange(n), labels].tolist())
    return labels, centroids, d2, inertia


def kmeans_assign(points, N: int, seed, max_iters: int = 300, mode: str = "3d", n_init: int = 10) -> Clustering:
    """Seeded k-means++ / Lloyd clustering with center snapping.

    The best of ``n_init`` restarts by within-cluster sum of squares is kept
    (earliest restart on ties). An emptied cluster is re-seeded at the point
    farthest from its current centroid; each repair is logged as
    ``EmptyClusterRepair``.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    if N < 1 or N > n:
        raise NotEnoughPoints(f"cannot form {N} clusters from {n} points")
    if n_init < 1:
        raise ValidationError(f"n_init must be >= 1, got {n_init}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        run = _lloyd(points, N, rng, max_iters)
        if best is None or run[3] < best[3]:
            best = run
    labels, centroids, d2, _ = best
    centers = []
    for i in range(N):
        members = np.flatnonzero(labels == i)
        if members.size == 0:
            # keep the partition total: steal the point closest to this centroid
            members = np.array([int(np.argmin(d2[:, i]))])
            labels[members] = i
        sq = ((points[members] - centroids[i]) ** 2).sum(axis=1)
        centers.append(int(members[np.argmin(sq)]))
    center_d = base_distances(points[centers], mode)
    return Clustering("kmeans", tuple(centers), labels, center_d)


def cluster_viewpoints(method, points, N, params: AdpcParams = AdpcParams(), seed=0, groups=None) -> Clustering:
    """Run one of the supported strategies on an ``(n, 3)`` position array."""
    method = method.lower()
    points = np.asarray(points, dtype=float)
    if method == "kmeans":
        return kmeans_assign(points, N, seed, mode=params.distance_mode, n_init=params.kmeans_n_init)
    if method not in METHODS:
        raise ValidationError(f"unknown clustering method {method!r}; choose from {METHODS}")
    if N > len(points):
        raise NotEnoughPoints(f"cannot pick {N} centers from {len(points)} points")
    if len(points) == 1:
        return Clustering(method, (0,), np.zeros(1, dtype=np.int64), base_distances(points, params.distance_mode))
    table = pairwise_distances(points, params.distance_mode)
    profile = density_profile(table, params, groups)
    spread = groups if params.spread_centers else None
    centers = select_centers(profile.gamma, N, spread)
    if method == "dpc":
        return dpc_assign(points, centers, profile, table, params.distance_mode)
    result = adpc_assign(points, centers, params, table)
    return Clustering(
        result.method, result.centers, result.labels, result.center_base_distances,
        result.ratios, result.audit_order, result.audit_sigmas, profile,
    )


def format_clusters(clustering: Clustering, refs) -> str:
    """``clusters v1`` debug dump with the ADPC audit log when available."""
    def ref(i):
        m, k = refs[i]
        return f"{m}:{k}"

    lines = [f"clusters v1 method={clustering.method} N={clustering.n_clusters}"]
    sizes = clustering.sizes
    for i, c in enumerate(clustering.centers):
        r = "" if clustering.ratios is None else f" r={float(clustering.ratios[i])!r}"
        members = ",".join(ref(v) for v in clustering.members(i))
        lines.append(f"cluster {i + 1} center={ref(c)} omega={int(sizes[i])}{r} members={members}")
    if clustering.audit_order is not None:
        for v, sig in zip(clustering.audit_order, clustering.audit_sigmas):
            chosen = int(clustering.labels[v]) + 1
            lines.append(f"assign {ref(v)} -> {chosen} sigma={';'.join(repr(float(s)) for s in sig)}")
    return "\n".join(lines) + "\n"
