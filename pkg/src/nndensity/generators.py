"""Seeded instance families.

Every generator is a pure function of ``(config, seed)``. Randomness comes from
``numpy.random.default_rng(seed)``; batches derive per-instance seeds with
:func:`nndensity.seeding.sub_seed`.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import Instance, InvalidInputError, Metric
from .seeding import ordered_map, sub_seed


class InvalidConfigError(InvalidInputError):
    pass


def _need(cond: bool, message: str) -> None:
    if not cond:
        raise InvalidConfigError(message)


@dataclass(frozen=True)
class RueConfig:
    n: int
    family = "rue"

    def validate(self):
        _need(self.n >= 3, "n must be >= 3")


@dataclass(frozen=True)
class RneConfig:
    n: int
    mean: float = 0.5
    sd: float = 0.2
    family = "rne"

    def validate(self):
        _need(self.n >= 3, "n must be >= 3")
        _need(self.sd > 0, "sd must be positive")


@dataclass(frozen=True)
class ScaleFreeConfig:
    n: int
    m0: int = 10
    m: int = 10
    k_attract: float = 0.1
    layout_iterations: int = 500
    layout_tolerance: float = 1e-6
    family = "scale_free"

    def validate(self):
        _need(self.n >= 3, "n must be >= 3")
        _need(1 <= self.m <= self.m0 < self.n, "need 1 <= m <= m0 < n")
        _need(self.k_attract > 0, "k_attract must be positive")
        _need(self.layout_iterations >= 1, "layout_iterations must be >= 1")


@dataclass(frozen=True)
class ParallelConfig:
    """Two parallel point rows with Gaussian perturbation and a random rotation.

    The rows are ``y = slope*x`` and ``y = slope*x + d`` sampled at ``n/2`` equally
    spaced ``x`` in [0, 1]; nodes ``0..n/2-1`` lie on the first row.
    """

    n: int
    d: float = 0.05
    alpha: float = 0.0
    sigma_large: float = 0.0
    sigma_small: float = 0.0
    rotate: bool = True
    slope: float = 1.0
    family = "parallel"

    def validate(self):
        _need(self.n >= 4 and self.n % 2 == 0, "n must be even and >= 4")
        _need(0 < self.d < 1, "d must be in (0, 1)")
        _need(0 <= self.alpha <= 1, "alpha must be in [0, 1]")
        _need(0 <= self.sigma_small <= self.sigma_large, "need 0 <= sigma_small <= sigma_large")
        _need(math.isfinite(self.slope), "slope must be finite")


@dataclass(frozen=True)
class ConvolutionConfig:
    n: int
    lambda_max: float = 1.0
    family = "convolution"

    def validate(self):
        _need(self.n >= 3, "n must be >= 3")
        _need(0 < self.lambda_max <= 1, "lambda_max must be in (0, 1]")


GeneratorConfig = Union[RueConfig, RneConfig, ScaleFreeConfig, ParallelConfig, ConvolutionConfig]

FAMILIES: dict[str, type] = {
    c.family: c for c in (RueConfig, RneConfig, ScaleFreeConfig, ParallelConfig, ConvolutionConfig)
}


def config_params(cfg: GeneratorConfig) -> dict:
    return dataclasses.asdict(cfg)


def make_config(family: str, **params) -> GeneratorConfig:
    """Build a config from a family name and keyword parameters (strings are coerced)."""
    family = family.lower().replace("-", "_")
    if family == "scalefree":
        family = "scale_free"
    if family not in FAMILIES:
        raise InvalidConfigError(f"unknown family {family!r}; choose from {sorted(FAMILIES)}")
    cls = FAMILIES[family]
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in params.items():
        if key not in fields:
            raise InvalidConfigError(f"{family} has no parameter {key!r}")
        kwargs[key] = _coerce(value, fields[key].type)
    try:
        cfg = cls(**kwargs)
    except TypeError as exc:
        raise InvalidConfigError(str(exc)) from None
    cfg.validate()
    return cfg


def _coerce(value, annotation: str):
    if not isinstance(value, str):
        return value
    if annotation == "int":
        return int(value)
    if annotation == "float":
        return float(value)
    if annotation == "bool":
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise InvalidConfigError(f"not a boolean: {value!r}")
    return value


def _instance(cfg: GeneratorConfig, seed: int, coords: np.ndarray, name: str | None = None) -> Instance:
    prov = {"family": cfg.family, "params": config_params(cfg), "seed": int(seed)}
    return Instance(name or f"{cfg.family}_n{cfg.n}_s{seed}", coords, Metric.EXACT, prov)


def gen_rue(n: int, seed: int) -> Instance:
    """``n`` points i.i.d. uniform on the unit square."""
    cfg = RueConfig(n)
    cfg.validate()
    rng = np.random.default_rng(seed)
    return _instance(cfg, seed, rng.random((n, 2)))


def gen_rne(n: int, seed: int, mean: float = 0.5, sd: float = 0.2) -> Instance:
    """``n`` points with i.i.d. ``Normal(mean, sd)`` coordinates; no clipping."""
    cfg = RneConfig(n, mean, sd)
    cfg.validate()
    rng = np.random.default_rng(seed)
    return _instance(cfg, seed, rng.normal(mean, sd, size=(n, 2)))


@dataclass(frozen=True)
class DegreeGraph:
    n: int
    edges: np.ndarray  # (E, 2) int array, u < v
    degrees: np.ndarray

    def adjacency(self) -> list[set[int]]:
        adj: list[set[int]] = [set() for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].add(int(v))
            adj[v].add(int(u))
        return adj

    def is_connected(self) -> bool:
        adj = self.adjacency()
        seen = {0}
        stack = [0]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n


def ba_graph(n: int, m0: int, m: int, seed: int | np.random.Generator) -> DegreeGraph:
    """Barabasi-Albert growth with preferential attachment.

    The seed network is a path over ``m0`` nodes. Each new node attaches to ``m``
    distinct existing nodes, drawn one at a time with probability proportional to
    degree, without replacement. While every existing degree is zero (only when
    ``m0 == 1``) targets are uniform.
    """
    _need(1 <= m <= m0 < n, f"need 1 <= m <= m0 < n, got m={m}, m0={m0}, n={n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    deg = np.zeros(n, dtype=np.int64)
    edges = [(i, i + 1) for i in range(m0 - 1)]
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    for new in range(m0, n):
        weights = deg[:new].astype(float)
        targets = []
        for _ in range(m):
            total = weights.sum()
            if total > 0:
                t = int(rng.choice(new, p=weights / total))
            else:
                free = np.flatnonzero([i not in targets for i in range(new)])
                t = int(rng.choice(free))
            targets.append(t)
            weights[t] = 0.0
        for t in targets:
            edges.append((t, new))
            deg[t] += 1
        deg[new] += m
    return DegreeGraph(n, np.array(edges, dtype=np.int64).reshape(-1, 2), deg)


def degrees_to_distances(graph: DegreeGraph, k_attract: float) -> np.ndarray:
    """Target distances ``exp(-k * (deg u + deg v))`` for every node pair; zero diagonal."""
    _need(k_attract > 0, "k_attract must be positive")
    deg = graph.degrees.astype(float)
    d = np.exp(-k_attract * (deg[:, None] + deg[None, :]))
    np.fill_diagonal(d, 0.0)
    return d


def stress(pos: np.ndarray, targets: np.ndarray, weights: np.ndarray | None = None) -> float:
    """``sum_{u<v} w_uv (|p_u - p_v| - d_uv)^2`` with ``w = d^-2`` by default."""
    iu = np.triu_indices(targets.shape[0], 1)
    d = targets[iu]
    w = d ** -2.0 if weights is None else weights[iu]
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))[iu]
    return float(np.sum(w * (dist - d) ** 2))


@dataclass(frozen=True)
class LayoutResult:
    points: np.ndarray  # rescaled into [0, 1]^2
    raw: np.ndarray  # before rescaling
    initial_stress: float
    final_stress: float
    iterations: int
    converged: bool


def rescale_unit(pos: np.ndarray) -> np.ndarray:
    """Shift to the origin and scale uniformly so the longer side spans [0, 1]."""
    lo = pos.min(axis=0)
    span = float((pos.max(axis=0) - lo).max())
    out = pos - lo
    return out / span if span > 0 else out


def spring_layout(
    targets: np.ndarray,
    iterations: int = 500,
    tolerance: float = 1e-6,
    seed: int | np.random.Generator = 0,
) -> LayoutResult:
    """2-D embedding minimizing weighted stress by majorization (SMACOF, ``w = d^-2``).

    Starts from a seeded uniform random layout scaled to the mean target distance
    and stops when the relative stress decrease falls below ``tolerance``. Stress
    never increases between iterations. Running out of iterations is reported via
    ``converged=False``, not raised.
    """
    targets = np.asarray(targets, dtype=float)
    n = targets.shape[0]
    _need(targets.shape == (n, n) and np.allclose(targets, targets.T), "targets must be a symmetric matrix")
    off = ~np.eye(n, dtype=bool)
    _need(bool(np.all(targets[off] > 0)), "off-diagonal targets must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    w = np.zeros_like(targets)
    w[off] = targets[off] ** -2.0
    lap = -w.copy()
    np.fill_diagonal(lap, w.sum(axis=1))
    lap_pinv = np.linalg.pinv(lap)

    x = rng.random((n, 2)) * float(targets[off].mean())
    x -= x.mean(axis=0)
    s0 = s = stress(x, targets, w)
    converged = False
    it = 0
    for it in range(1, iterations + 1):
        diff = x[:, None, :] - x[None, :, :]
        dist = np.sqrt((diff**2).sum(-1))
        with np.errstate(divide="ignore", invalid="ignore"):
            b = np.where(dist > 0, -w * targets / dist, 0.0)
        np.fill_diagonal(b, 0.0)
        np.fill_diagonal(b, -b.sum(axis=1))
        x_new = lap_pinv @ (b @ x)
        s_new = stress(x_new, targets, w)
        if s_new > s:  # guard against rounding; majorization is monotone
            break
        x, s_prev, s = x_new, s, s_new
        if s_prev == 0 or (s_prev - s) / s_prev < tolerance:
            converged = True
            break
    return LayoutResult(rescale_unit(x), x, s0, s, it, converged)


def gen_scale_free(cfg: ScaleFreeConfig, seed: int) -> Instance:
    """Barabasi-Albert graph -> degree-based target distances -> stress layout in [0, 1]^2."""
    cfg.validate()
    rng = np.random.default_rng(seed)
    graph = ba_graph(cfg.n, cfg.m0, cfg.m, rng)
    targets = degrees_to_distances(graph, cfg.k_attract)
    layout = spring_layout(targets, cfg.layout_iterations, cfg.layout_tolerance, rng)
    return _instance(cfg, seed, layout.points)


def parallel_base(n: int, d: float = 0.05, slope: float = 1.0) -> np.ndarray:
    """Unperturbed rows ``y = slope*x`` and ``y = slope*x + d`` with ``n/2`` equally spaced x in [0, 1]."""
    h = n // 2
    x = np.linspace(0.0, 1.0, h)
    return np.concatenate((np.column_stack((x, slope * x)), np.column_stack((x, slope * x + d))))


def gen_parallel_perturbed(cfg: ParallelConfig, seed: int) -> Instance:
    """Perturbed parallel-row instance.

    ``floor(alpha*n)`` randomly chosen points get Gaussian noise with sd
    ``sigma_large`` and the rest get ``sigma_small``; then (if ``rotate``) all points
    turn about their centroid by an angle uniform in [0, 180) degrees, and the set is
    rescaled uniformly into [0, 1]^2.
    """
    cfg.validate()
    rng = np.random.default_rng(seed)
    pts = parallel_base(cfg.n, cfg.d, cfg.slope)
    n_large = int(math.floor(cfg.alpha * cfg.n))
    sd = np.full(cfg.n, cfg.sigma_small)
    sd[rng.permutation(cfg.n)[:n_large]] = cfg.sigma_large
    pts = pts + rng.standard_normal((cfg.n, 2)) * sd[:, None]
    if cfg.rotate:
        theta = math.radians(rng.uniform(0.0, 180.0))
        c, s = math.cos(theta), math.sin(theta)
        centroid = pts.mean(axis=0)
        pts = (pts - centroid) @ np.array([[c, s], [-s, c]]) + centroid
    return _instance(cfg, seed, rescale_unit(pts))


def gen_convolution(cfg: ConvolutionConfig, seed: int) -> Instance:
    """Uniform point plus zero-mean Gaussian offset, ``z = x + y``.

    Per instance ``lam ~ U(0, lambda_max)`` and a diagonal covariance with entries
    ``~ U(0, lam)``; per node ``x ~ U([0,1]^2)`` and ``y ~ N(0, cov)``. No clipping.
    """
    cfg.validate()
    rng = np.random.default_rng(seed)
    lam = rng.uniform(0.0, cfg.lambda_max)
    var = rng.uniform(0.0, lam, size=2)
    x = rng.random((cfg.n, 2))
    y = rng.standard_normal((cfg.n, 2)) * np.sqrt(var)
    return _instance(cfg, seed, x + y)


def generate(cfg: GeneratorConfig, seed: int) -> Instance:
    """Dispatch on the config type."""
    if isinstance(cfg, RueConfig):
        return gen_rue(cfg.n, seed)
    if isinstance(cfg, RneConfig):
        return gen_rne(cfg.n, seed, cfg.mean, cfg.sd)
    if isinstance(cfg, ScaleFreeConfig):
        return gen_scale_free(cfg, seed)
    if isinstance(cfg, ParallelConfig):
        return gen_parallel_perturbed(cfg, seed)
    if isinstance(cfg, ConvolutionConfig):
        return gen_convolution(cfg, seed)
    raise InvalidConfigError(f"unsupported config {cfg!r}")


def _generate_item(args):
    cfg, seed, i = args
    inst = generate(cfg, seed)
    return dataclasses.replace(inst, name=f"{cfg.family}_n{cfg.n}_{i:06d}")


def gen_batch(cfg: GeneratorConfig, count: int, master_seed: int, jobs: int = 1) -> list[Instance]:
    """``count`` instances; instance ``i`` is ``generate(cfg, sub_seed(master_seed, i))``."""
    _need(count >= 1, "count must be >= 1")
    cfg.validate()
    items = [(cfg, sub_seed(master_seed, i), i) for i in range(count)]
    return ordered_map(_generate_item, items, jobs)


def augmentation_sweep(n: int, count: int, master_seed: int) -> list[ParallelConfig]:
    """Configs spanning the path from clean parallel rows to Gaussian clouds.

    Per instance: small-noise sd on a geometric grid from 1e-4 to 0.3, large-noise
    sd a further random factor of 1-100 above it (capped at 1), large-noise
    fraction ``alpha ~ U(0, 1)`` and row gap ``d ~ U(0.02, 0.08)``.
    """
    rng = np.random.default_rng(sub_seed(master_seed, 2**40))
    grid = np.geomspace(1e-4, 0.3, count)
    out = []
    for i in range(count):
        small = float(grid[i])
        large = float(min(1.0, small * 10 ** rng.uniform(0.0, 2.0)))
        out.append(
            ParallelConfig(
                n=n,
                d=float(rng.uniform(0.02, 0.08)),
                alpha=float(rng.uniform(0.0, 1.0)),
                sigma_large=max(large, small),
                sigma_small=small,
                rotate=True,
            )
        )
    return out
