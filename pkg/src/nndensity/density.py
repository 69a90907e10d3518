"""Nearest-neighbor density of a tour, k-NN distance statistics and their
closed forms for uniform random points in the plane.

For node ``i`` let ``N(i)`` be its nearest neighbors (all nodes within the tie
tolerance of the minimal distance) and ``N'(i)`` its two neighbors on the tour.
The density is the mean over nodes of ``|N(i) & N'(i)| / |N(i)|``; without ties
it is simply the fraction of nodes whose nearest neighbor is adjacent on the tour.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import gammaln

from .core import Instance, InvalidInputError, Metric, Tour, check_permutation

BETA = 0.7124
BETA_UPPER = 0.90304
DEFECT_THRESHOLD = 0.001


@dataclass(frozen=True)
class AnalyticConstants:
    beta: float = BETA
    beta_upper: float = BETA_UPPER

    def __post_init__(self):
        if not 0 < self.beta < self.beta_upper:
            raise InvalidInputError("need 0 < beta < beta_upper")


@dataclass(frozen=True)
class NeighborSets:
    sets: tuple[tuple[int, ...], ...]
    nearest: np.ndarray  # r1 per node under the metric used
    metric: Metric
    tie_eps: float

    @property
    def n(self) -> int:
        return len(self.sets)

    @property
    def tie_count(self) -> int:
        return sum(len(s) > 1 for s in self.sets)


def default_tie_eps(instance: Instance) -> float:
    """0 for synthetic instances, 1e-9 (relative) for TSPLIB files with their grid ties."""
    return 1e-9 if instance.metric is Metric.TSPLIB else 0.0


def _threshold(r1: np.ndarray, tie_eps: float) -> np.ndarray:
    return r1 * (1.0 + tie_eps)


def _nn_sets_brute(coords: np.ndarray, metric: Metric, tie_eps: float):
    from .core import distance_matrix

    d = distance_matrix(coords, metric)
    np.fill_diagonal(d, np.inf)
    r1 = d.min(axis=1)
    thr = _threshold(r1, tie_eps)
    sets = tuple(tuple(int(j) for j in np.flatnonzero(d[i] <= thr[i])) for i in range(len(coords)))
    return sets, r1


def _nn_sets_tree(coords: np.ndarray, metric: Metric, tie_eps: float):
    n = coords.shape[0]
    if metric is Metric.TORUS:
        tree = cKDTree(np.mod(coords, 1.0), boxsize=1.0)
        pts = np.mod(coords, 1.0)
    else:
        tree = cKDTree(coords)
        pts = coords
    dd, ii = tree.query(pts, k=2)
    # the first hit is usually the node itself, but duplicates may come first
    r1_exact = np.where(ii[:, 0] == np.arange(n), dd[:, 1], dd[:, 0])
    if metric is Metric.TSPLIB:
        m = np.floor(r1_exact + 0.5)
        r1 = m
        radius = m + 0.5
    else:
        r1 = r1_exact
        radius = _threshold(r1_exact, tie_eps)
    # pad the ball so floating-point differences between cKDTree and the metric do not drop members
    cands = tree.query_ball_point(pts, radius * (1 + 1e-12) + 1e-15)
    sets = []
    from .core import _pair_distance

    thr = _threshold(r1, tie_eps)
    for i in range(n):
        c = np.array(sorted(j for j in cands[i] if j != i), dtype=np.int64)
        dist = _pair_distance(coords[i, 0] - coords[c, 0], coords[i, 1] - coords[c, 1], metric)
        sets.append(tuple(int(j) for j in c[dist <= thr[i]]))
    return tuple(sets), r1


def nn_sets(
    instance: Instance,
    metric: Metric | str | None = None,
    tie_eps: float | None = None,
    method: str = "auto",
) -> NeighborSets:
    """Nearest-neighbor sets of every node.

    ``j`` belongs to ``N(i)`` when ``d(i, j) <= r1(i) * (1 + tie_eps)``; with a zero
    nearest distance (duplicate points) only exact duplicates qualify. ``metric``
    defaults to exact Euclidean, also for TSPLIB instances. ``method`` is
    ``"brute"`` (all pairs), ``"tree"`` (k-d tree) or ``"auto"`` (tree above 200 nodes).
    """
    metric = Metric.EXACT if metric is None else Metric.parse(metric)
    tie_eps = default_tie_eps(instance) if tie_eps is None else float(tie_eps)
    if tie_eps < 0:
        raise InvalidInputError("tie_eps must be >= 0")
    coords = instance.coords
    if method == "auto":
        method = "tree" if instance.n > 200 else "brute"
    if method == "brute":
        sets, r1 = _nn_sets_brute(coords, metric, tie_eps)
    elif method == "tree":
        sets, r1 = _nn_sets_tree(coords, metric, tie_eps)
    else:
        raise InvalidInputError(f"unknown method {method!r}")
    return NeighborSets(sets, np.asarray(r1, dtype=float), metric, tie_eps)


@dataclass(frozen=True)
class DensityReport:
    rho: float
    per_node: np.ndarray
    tie_count: int
    metric: Metric
    tie_eps: float

    @property
    def n(self) -> int:
        return self.per_node.shape[0]


def _tour_neighbors(order: np.ndarray) -> np.ndarray:
    n = order.shape[0]
    nb = np.empty((n, 2), dtype=np.int64)
    nb[order, 0] = np.roll(order, 1)
    nb[order, 1] = np.roll(order, -1)
    return nb


def rho(instance: Instance, tour: Tour | Sequence[int], neighbor_sets: NeighborSets | None = None) -> DensityReport:
    """Nearest-neighbor density of ``tour`` on ``instance``."""
    order = tour.order if isinstance(tour, Tour) else np.asarray(tour)
    if len(order) != instance.n:
        raise InvalidInputError(f"tour has {len(order)} nodes, instance has {instance.n}")
    order = check_permutation(order, instance.n)
    ns = nn_sets(instance) if neighbor_sets is None else neighbor_sets
    if ns.n != instance.n:
        raise InvalidInputError(f"neighbor sets cover {ns.n} nodes, instance has {instance.n}")
    nb = _tour_neighbors(order)
    per = np.empty(instance.n)
    for i, s in enumerate(ns.sets):
        adj = {int(nb[i, 0]), int(nb[i, 1])}
        per[i] = sum(j in adj for j in s) / len(s)
    return DensityReport(float(np.mean(per)), per, ns.tie_count, ns.metric, ns.tie_eps)


def indicator_rho(instance: Instance, tour: Tour | Sequence[int]) -> float:
    """Tie-free shortcut: fraction of nodes whose single nearest neighbor is tour-adjacent."""
    order = check_permutation(tour.order if isinstance(tour, Tour) else tour, instance.n)
    d = instance.distances(Metric.EXACT)
    np.fill_diagonal(d, np.inf)
    nearest = d.argmin(axis=1)
    nb = _tour_neighbors(order)
    return float(np.mean((nb[:, 0] == nearest) | (nb[:, 1] == nearest)))


@dataclass(frozen=True)
class RhoSummary:
    count: int
    mean: float
    sd: float
    sem: float
    histogram: list[tuple[float, float, int]]


def histogram(values: Sequence[float], bins: int = 20, value_range: tuple[float, float] = (0.0, 1.0)):
    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins, range=value_range)
    return [(float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(len(counts))]


def summarize(values: Sequence[float], bins: int = 20) -> RhoSummary:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise InvalidInputError("no values to summarize")
    sd = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    return RhoSummary(int(v.size), float(np.mean(v)), sd, sd / math.sqrt(v.size), histogram(v, bins))


def rho_batch(instances: Sequence[Instance], tours: Sequence[Tour], bins: int = 20, metric=None, tie_eps=None) -> RhoSummary:
    """Mean, sample sd and histogram of per-instance densities."""
    if len(instances) != len(tours):
        raise InvalidInputError(f"{len(instances)} instances but {len(tours)} tours")
    values = [rho(inst, t, nn_sets(inst, metric, tie_eps)).rho for inst, t in zip(instances, tours)]
    return summarize(values, bins)


def defect_rate(gaps: Sequence[float], threshold: float = DEFECT_THRESHOLD) -> float:
    """Fraction of gaps strictly above ``threshold``."""
    g = np.asarray(gaps, dtype=float)
    if g.size == 0:
        raise InvalidInputError("defect rate of an empty list")
    if threshold <= 0:
        raise InvalidInputError("threshold must be positive")
    return float(np.mean(g > threshold))


def defect_by_rho(rhos: Sequence[float], gaps: Sequence[float], bins: int = 10, threshold: float = DEFECT_THRESHOLD):
    """Defect rate and mean gap per equal-count rho bin (deciles by default).

    Returns rows ``(rho_lo, rho_hi, count, defect_rate, mean_gap)`` in increasing rho.
    """
    r = np.asarray(rhos, dtype=float)
    g = np.asarray(gaps, dtype=float)
    if r.shape != g.shape or r.size == 0:
        raise InvalidInputError("need equally sized, nonempty rho and gap lists")
    idx = np.argsort(r, kind="stable")
    rows = []
    for chunk in np.array_split(idx, min(bins, r.size)):
        if chunk.size == 0:
            continue
        rows.append((float(r[chunk].min()), float(r[chunk].max()), int(chunk.size),
                     float(np.mean(g[chunk] > threshold)), float(np.mean(g[chunk]))))
    return rows


def _unit_ball_radius_factor(dim: float) -> float:
    return math.exp(gammaln(dim / 2 + 1) / dim) / math.sqrt(math.pi)


def analytic_E_rk(n: int, k: int, dim: int = 2, asymptotic: bool = False) -> float:
    """Mean distance to the k-th nearest of ``n - 1`` other uniform points in unit volume.

    ``asymptotic=True`` gives the large-n form ``Gamma(k + 1/2) / (Gamma(k) sqrt(n pi))``
    (2-D only).
    """
    if not 1 <= k < n:
        raise InvalidInputError(f"need 1 <= k < n, got k={k}, n={n}")
    if dim < 1:
        raise InvalidInputError("dim must be >= 1")
    if asymptotic:
        if dim != 2:
            raise InvalidInputError("the asymptotic form is 2-D only")
        return math.exp(gammaln(k + 0.5) - gammaln(k)) / math.sqrt(n * math.pi)
    a = 1.0 / dim
    return _unit_ball_radius_factor(dim) * math.exp(gammaln(k + a) - gammaln(k) + gammaln(n) - gammaln(n + a))


def analytic_E_rk2(n: int, k: int, dim: int = 2, asymptotic: bool = False) -> float:
    """Second moment of the k-th nearest-neighbor distance (same setting as :func:`analytic_E_rk`)."""
    if not 1 <= k < n:
        raise InvalidInputError(f"need 1 <= k < n, got k={k}, n={n}")
    if asymptotic:
        if dim != 2:
            raise InvalidInputError("the asymptotic form is 2-D only")
        return math.exp(gammaln(k + 1.0) - gammaln(k)) / (n * math.pi)
    a = 2.0 / dim
    return _unit_ball_radius_factor(dim) ** 2 * math.exp(gammaln(k + a) - gammaln(k) + gammaln(n) - gammaln(n + a))


def tour_coefficients() -> tuple[float, float]:
    """Limits of ``sqrt(n) * (E r1 + E r2) / 2`` and ``sqrt(n) * (E r2 + E r3) / 2``: 5/8 and 27/32."""
    c = [math.exp(gammaln(k + 0.5) - gammaln(k)) / math.sqrt(math.pi) for k in (1, 2, 3)]
    return (c[0] + c[1]) / 2, (c[1] + c[2]) / 2


def analytic_pdf_r1(n: int, r) -> np.ndarray | float:
    """Density of the nearest-neighbor distance, ``2 pi (n-1) r (1 - pi r^2)^(n-2)`` on [0, 1/sqrt(pi)]."""
    if n < 2:
        raise InvalidInputError("n must be >= 2")
    r = np.asarray(r, dtype=float)
    inside = (r >= 0) & (r <= 1 / math.sqrt(math.pi))
    base = np.clip(1 - math.pi * r * r, 0.0, None)
    out = np.where(inside, 2 * math.pi * (n - 1) * r * base ** (n - 2), 0.0)
    return float(out) if out.ndim == 0 else out


def analytic_cdf_r1(n: int, r) -> np.ndarray | float:
    r = np.asarray(r, dtype=float)
    rr = np.clip(r, 0.0, 1 / math.sqrt(math.pi))
    out = 1 - (1 - math.pi * rr * rr) ** (n - 1)
    return float(out) if out.ndim == 0 else out


def analytic_mode_r1(n: int) -> float:
    return 1 / math.sqrt(math.pi * (2 * n - 3))


def rho_lower_bound(beta: float = BETA) -> float:
    """Asymptotic lower bound ``(27 - 32 beta) / 7`` on the density of uniform instances.

    Returns 0 with a warning when ``beta >= 27/32`` (the bound is vacuous there).
    """
    if beta <= 0:
        raise InvalidInputError("beta must be positive")
    if beta >= 27 / 32:
        warnings.warn(f"beta={beta} >= 27/32: the density lower bound is vacuous", RuntimeWarning, stacklevel=2)
        return 0.0
    return (27 - 32 * beta) / 7


@dataclass(frozen=True)
class NnDistanceStats:
    k: int
    samples: np.ndarray  # (n, k) sorted distances to the 1st..k-th neighbor

    @property
    def mean(self) -> np.ndarray:
        return self.samples.mean(axis=0)

    @property
    def var(self) -> np.ndarray:
        return self.samples.var(axis=0, ddof=1)


def nn_distance_samples(instance: Instance, k_max: int, metric: Metric | str | None = None) -> NnDistanceStats:
    """Distances from every node to its 1st..``k_max``-th nearest neighbors."""
    if not 1 <= k_max < instance.n:
        raise InvalidInputError(f"need 1 <= k_max < n, got {k_max}")
    metric = instance.metric if metric is None else Metric.parse(metric)
    if metric is Metric.TSPLIB:
        d = instance.distances(metric)
        np.fill_diagonal(d, np.inf)
        return NnDistanceStats(k_max, np.sort(d, axis=1)[:, :k_max])
    pts = np.mod(instance.coords, 1.0) if metric is Metric.TORUS else instance.coords
    tree = cKDTree(pts, boxsize=1.0 if metric is Metric.TORUS else None)
    dd, ii = tree.query(pts, k=k_max + 1)
    out = np.empty((instance.n, k_max))
    for i in range(instance.n):
        # drop the self hit (which duplicates can displace from column 0)
        keep = np.flatnonzero(ii[i] != i)[:k_max]
        out[i] = dd[i, keep]
    return NnDistanceStats(k_max, out)


def uncovered_nn_edges(tour: Tour | Sequence[int], neighbor_sets: NeighborSets) -> list[tuple[int, int]]:
    """Undirected nearest-neighbor pairs ``(i, j), i < j`` where ``j`` is in ``N(i)`` or
    ``i`` in ``N(j)`` but the two are not adjacent on the tour."""
    order = np.asarray(tour.order if isinstance(tour, Tour) else tour)
    nb = _tour_neighbors(order)
    out = set()
    for i, s in enumerate(neighbor_sets.sets):
        for j in s:
            if j != nb[i, 0] and j != nb[i, 1]:
                out.add((min(i, j), max(i, j)))
    return sorted(out)


def uncovered_relations(tour: Tour | Sequence[int], neighbor_sets: NeighborSets) -> int:
    """Count of (node, nearest neighbor) relations not realized by a tour edge."""
    order = np.asarray(tour.order if isinstance(tour, Tour) else tour)
    nb = _tour_neighbors(order)
    return sum(1 for i, s in enumerate(neighbor_sets.sets) for j in s if j != nb[i, 0] and j != nb[i, 1])
