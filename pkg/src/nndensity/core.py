"""Points, metrics, instances, tours and gap arithmetic."""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Iterable, NamedTuple, Sequence

import numpy as np


class InvalidInputError(ValueError):
    """Raised on malformed numeric input (NaN coordinates, bad sizes, ...)."""


class InvalidTourError(ValueError):
    """Raised when a tour is not a permutation of the instance's nodes."""


class Metric(str, enum.Enum):
    EXACT = "exact"
    TSPLIB = "tsplib"
    TORUS = "torus"

    @classmethod
    def parse(cls, value: "Metric | str") -> "Metric":
        if isinstance(value, Metric):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidInputError(f"unknown metric {value!r}") from None


class Point(NamedTuple):
    x: float
    y: float


def nint(d):
    """TSPLIB rounding: ``(int)(d + 0.5)``."""
    return np.floor(np.asarray(d, dtype=float) + 0.5)


def _check_coords(coords: np.ndarray, metric: Metric) -> None:
    if not np.all(np.isfinite(coords)):
        raise InvalidInputError("coordinates must be finite")
    if metric is Metric.TORUS and (coords.min(initial=0.0) < 0.0 or coords.max(initial=0.0) > 1.0):
        raise InvalidInputError("torus metric requires coordinates in [0, 1]")


def _pair_distance(dx, dy, metric: Metric):
    if metric is Metric.TORUS:
        dx = np.abs(dx)
        dy = np.abs(dy)
        dx = np.minimum(dx, 1.0 - dx)
        dy = np.minimum(dy, 1.0 - dy)
    d = np.sqrt(dx * dx + dy * dy)
    if metric is Metric.TSPLIB:
        d = nint(d)
    return d


def distance(a: Sequence[float], b: Sequence[float], metric: Metric | str = Metric.EXACT) -> float:
    """Distance between two points under ``metric``."""
    metric = Metric.parse(metric)
    pts = np.array([a, b], dtype=float)
    _check_coords(pts, metric)
    return float(_pair_distance(pts[0, 0] - pts[1, 0], pts[0, 1] - pts[1, 1], metric))


def distance_matrix(coords: np.ndarray, metric: Metric | str = Metric.EXACT) -> np.ndarray:
    """All-pairs distances as an ``(n, n)`` float array with an exact zero diagonal."""
    metric = Metric.parse(metric)
    coords = np.asarray(coords, dtype=float)
    _check_coords(coords, metric)
    dx = coords[:, None, 0] - coords[None, :, 0]
    dy = coords[:, None, 1] - coords[None, :, 1]
    d = _pair_distance(dx, dy, metric)
    np.fill_diagonal(d, 0.0)
    return d


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Instance:
    """A named 2-D point set with the metric its tours are measured in.

    ``provenance`` is ``{"family": ..., "params": {...}, "seed": ...}`` for
    generated instances and ``None`` for files read from disk.
    """

    name: str
    coords: np.ndarray
    metric: Metric = Metric.EXACT
    provenance: dict[str, Any] | None = field(default=None)

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise InvalidInputError(f"coords must have shape (n, 2), got {coords.shape}")
        if coords.shape[0] < 3:
            raise InvalidInputError(f"an instance needs at least 3 nodes, got {coords.shape[0]}")
        metric = Metric.parse(self.metric)
        _check_coords(coords, metric)
        object.__setattr__(self, "coords", _frozen(coords))
        object.__setattr__(self, "metric", metric)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def points(self) -> list[Point]:
        return [Point(float(x), float(y)) for x, y in self.coords]

    def distances(self, metric: Metric | str | None = None) -> np.ndarray:
        return distance_matrix(self.coords, self.metric if metric is None else metric)

    def with_metric(self, metric: Metric | str) -> "Instance":
        return Instance(self.name, self.coords, Metric.parse(metric), self.provenance)

    def same_as(self, other: "Instance") -> bool:
        return (
            self.name == other.name
            and self.metric is other.metric
            and np.array_equal(self.coords, other.coords)
            and self.provenance == other.provenance
        )


def check_permutation(order: Iterable[int], n: int) -> np.ndarray:
    """Return ``order`` as an int array, raising :class:`InvalidTourError` unless it is a permutation of ``0..n-1``."""
    arr = np.asarray(list(order) if not isinstance(order, np.ndarray) else order)
    if arr.ndim != 1 or arr.shape[0] != n:
        raise InvalidTourError(f"tour must visit {n} nodes, got {arr.size}")
    if arr.dtype.kind not in "iu":
        if arr.dtype.kind == "f" and np.all(arr == np.round(arr)):
            arr = arr.astype(np.int64)
        else:
            raise InvalidTourError("tour entries must be integers")
    arr = arr.astype(np.int64)
    if arr.min() < 0 or arr.max() >= n:
        raise InvalidTourError(f"tour index out of range 0..{n - 1}")
    if np.unique(arr).size != n:
        raise InvalidTourError("tour repeats a node")
    return arr


def edge_lengths(dist: np.ndarray, order: np.ndarray) -> np.ndarray:
    return dist[order, np.roll(order, -1)]


def _tour_sum(lengths: np.ndarray) -> float:
    # sorting makes the sum independent of rotation/reversal; np.sum is pairwise
    return float(np.sum(np.sort(lengths)))


def tour_length(instance: Instance, order: Iterable[int], dist: np.ndarray | None = None) -> float:
    """Closed tour length: consecutive distances plus the closing edge.

    The sum is taken over the sorted edge lengths with pairwise summation, so
    rotated and reversed orders give bit-identical results.
    """
    order = check_permutation(order, instance.n)
    if dist is None:
        c = instance.coords
        nxt = np.roll(order, -1)
        lengths = _pair_distance(c[order, 0] - c[nxt, 0], c[order, 1] - c[nxt, 1], instance.metric)
    else:
        lengths = edge_lengths(dist, order)
    return _tour_sum(lengths)


@dataclass(frozen=True, eq=False)
class Tour:
    order: np.ndarray
    length: float

    def __post_init__(self):
        object.__setattr__(self, "order", _frozen(np.asarray(self.order, dtype=np.int64)))
        object.__setattr__(self, "length", float(self.length))

    @classmethod
    def from_order(cls, instance: Instance, order: Iterable[int], dist: np.ndarray | None = None) -> "Tour":
        order = check_permutation(order, instance.n)
        return cls(order, tour_length(instance, order, dist))

    @property
    def n(self) -> int:
        return self.order.shape[0]

    def neighbors(self) -> np.ndarray:
        """``(n, 2)`` array of each node's predecessor and successor on the tour."""
        n = self.n
        nb = np.empty((n, 2), dtype=np.int64)
        nb[self.order, 0] = np.roll(self.order, 1)
        nb[self.order, 1] = np.roll(self.order, -1)
        return nb

    def canonical(self) -> "Tour":
        """Rotate to start at node 0 and orient so the second node is the smaller neighbor."""
        order = np.roll(self.order, -int(np.flatnonzero(self.order == 0)[0]))
        if self.n > 2 and order[1] > order[-1]:
            order = np.concatenate(([order[0]], order[:0:-1]))
        return Tour(order, self.length)


def optimality_gap(candidate_length: float, reference_length: float, tolerance: float = 1e-9) -> float:
    """``candidate / reference - 1``.

    A candidate shorter than the reference by more than ``tolerance`` (relative)
    only warns, since references are often heuristic themselves.
    """
    if not (math.isfinite(candidate_length) and math.isfinite(reference_length)):
        raise InvalidInputError("lengths must be finite")
    if reference_length <= 0:
        raise InvalidInputError(f"reference length must be positive, got {reference_length}")
    gap = candidate_length / reference_length - 1.0
    if gap < -tolerance:
        warnings.warn(
            f"candidate length {candidate_length} is below reference {reference_length}",
            RuntimeWarning,
            stacklevel=2,
        )
    return gap


def aggregate_gaps(candidate_lengths: Sequence[float], reference_lengths: Sequence[float]) -> dict[str, float]:
    """Batch gaps under both conventions: mean of per-instance gaps, and ratio of mean lengths."""
    cand = np.asarray(candidate_lengths, dtype=float)
    ref = np.asarray(reference_lengths, dtype=float)
    if cand.shape != ref.shape or cand.size == 0:
        raise InvalidInputError("need equally sized, nonempty length lists")
    if np.any(ref <= 0):
        raise InvalidInputError("reference lengths must be positive")
    return {
        "mean_of_gaps": float(np.mean(cand / ref - 1.0)),
        "ratio_of_means": float(np.mean(cand) / np.mean(ref) - 1.0),
    }
