"""Tour construction: nearest-neighbor heuristic, Held-Karp, multi-start 2-opt/Or-opt."""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .core import Instance, InvalidInputError, Tour
from .seeding import ordered_map, sub_seed

EXACT_MAX_N = 24
NEIGHBOR_K = 16


class SizeLimitError(InvalidInputError):
    pass


class Algorithm(str, enum.Enum):
    NN = "nn"
    EXACT = "exact"
    LOCAL_SEARCH = "ls"


@dataclass(frozen=True)
class SolveConfig:
    algorithm: Algorithm = Algorithm.LOCAL_SEARCH
    start_node: int | None = None
    restarts: int = 20
    max_no_improve: int = 10
    seed: int = 0
    neighbors: int = NEIGHBOR_K
    noise: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if self.restarts < 1:
            raise InvalidInputError("restarts must be >= 1")
        if self.max_no_improve < 1:
            raise InvalidInputError("max_no_improve must be >= 1")


def _as_tour(instance: Instance, order: np.ndarray, dist: np.ndarray) -> Tour:
    return Tour.from_order(instance, order, dist)


def nn_tour(instance: Instance, start: int = 0, dist: np.ndarray | None = None) -> Tour:
    """Greedy tour from ``start``; equal distances go to the lowest node index."""
    if not 0 <= start < instance.n:
        raise InvalidInputError(f"start node {start} outside 0..{instance.n - 1}")
    dist = instance.distances() if dist is None else dist
    order = _kernels.nearest_neighbor(dist, start, 0.0, 0)
    return _as_tour(instance, order, dist)


def exact_tour(instance: Instance, dist: np.ndarray | None = None) -> Tour:
    """Globally optimal tour by Held-Karp; rotated to start at 0 with the smaller neighbor second."""
    if instance.n > EXACT_MAX_N:
        raise SizeLimitError(
            f"exact solver is limited to n <= {EXACT_MAX_N} (got {instance.n}); use local search"
        )
    dist = np.ascontiguousarray(instance.distances() if dist is None else dist, dtype=np.float64)
    # any tour length is a valid pruning bound; a good one makes the DP much cheaper
    upper = local_search_tour(instance, SolveConfig(restarts=3, max_no_improve=3), dist).length
    order, _ = _kernels.held_karp(dist, upper)
    return _as_tour(instance, order, dist).canonical()


def candidate_lists(dist: np.ndarray, k: int | None) -> np.ndarray:
    """Per-node neighbors sorted by distance (stable, so ties go to lower indices), self excluded."""
    n = dist.shape[0]
    d = dist.copy()
    np.fill_diagonal(d, np.inf)
    order = np.argsort(d, axis=1, kind="stable")[:, : n - 1]
    if k is not None:
        order = order[:, : min(k, n - 1)]
    return np.ascontiguousarray(order, dtype=np.int64)


def improve(dist: np.ndarray, order, k: int = NEIGHBOR_K) -> np.ndarray:
    """Run 2-opt/Or-opt from ``order`` to a local optimum and return the new order."""
    dist = np.ascontiguousarray(dist, dtype=np.float64)
    tour = np.array(order, dtype=np.int64)
    eps = 1e-12 * max(1.0, float(dist.max()))
    return _kernels.local_optimum(dist, tour, candidate_lists(dist, k), candidate_lists(dist, None), eps)


def local_search_tour(instance: Instance, cfg: SolveConfig | None = None, dist: np.ndarray | None = None) -> Tour:
    """Best of ``cfg.restarts`` independent runs.

    A run builds a randomized greedy tour, alternates 2-opt and Or-opt (segments
    of 1-3 nodes) to a joint local optimum, then applies segment-local
    double-bridge kicks, re-optimizing after each and keeping only improvements,
    until ``cfg.max_no_improve`` kicks in a row fail.

    Run ``r`` is seeded by ``sub_seed(cfg.seed, r)``. Run 0 starts from the plain
    nearest-neighbor tour from ``cfg.start_node`` (default 0); later runs start at a
    random node and take the second-nearest city with probability ``cfg.noise``.
    """
    cfg = cfg or SolveConfig()
    n = instance.n
    dist = instance.distances() if dist is None else dist
    dist = np.ascontiguousarray(dist, dtype=np.float64)
    if n <= 3:
        return _as_tour(instance, np.arange(n), dist).canonical()
    cand = candidate_lists(dist, cfg.neighbors)
    full = candidate_lists(dist, None)
    eps = 1e-12 * max(1.0, float(dist.max()))
    best, best_cost = None, np.inf
    for r in range(cfg.restarts):
        s = sub_seed(cfg.seed, r)
        if r == 0:
            start, noise = (cfg.start_node or 0), 0.0
        else:
            start, noise = int(s % n), cfg.noise
        tour = _kernels.nearest_neighbor(dist, start, noise, s % (2**32))
        tour = _kernels.iterated_local_search(dist, tour, cand, full, eps, cfg.max_no_improve, s >> 1)
        cost = _kernels.tour_cost(dist, tour)
        if cost < best_cost - eps:
            best, best_cost = tour.copy(), cost
    return _as_tour(instance, best, dist).canonical()


def solve(instance: Instance, cfg: SolveConfig | None = None) -> Tour:
    cfg = cfg or SolveConfig()
    if cfg.algorithm is Algorithm.NN:
        return nn_tour(instance, cfg.start_node or 0)
    if cfg.algorithm is Algorithm.EXACT:
        return exact_tour(instance)
    return local_search_tour(instance, cfg)


@dataclass(frozen=True)
class SolveFailure:
    index: int
    error: str

    def __bool__(self):
        return False


def _solve_item(args):
    i, instance, cfg = args
    try:
        return solve(instance, replace(cfg, seed=sub_seed(cfg.seed, i)))
    except Exception as exc:  # recorded per item; the batch carries on
        return SolveFailure(i, f"{type(exc).__name__}: {exc}")


def solve_batch(instances, cfg: SolveConfig | None = None, jobs: int = 1) -> list[Tour | SolveFailure]:
    """Solve each instance with ``cfg``; item ``i`` uses seed ``sub_seed(cfg.seed, i)``.

    Results are index-aligned with ``instances`` and independent of ``jobs``.
    Failures come back as :class:`SolveFailure` entries.
    """
    cfg = cfg or SolveConfig()
    return ordered_map(_solve_item, [(i, inst, cfg) for i, inst in enumerate(instances)], jobs)


def comb_tour(n: int) -> np.ndarray:
    """Up one line, back down the other, for the two-line layouts whose first
    ``n/2`` nodes sit on one line and the rest on the other, both in the same order."""
    if n % 2:
        raise InvalidInputError("comb tour needs an even node count")
    h = n // 2
    return np.concatenate((np.arange(h), np.arange(n - 1, h - 1, -1)))
