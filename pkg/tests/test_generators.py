import dataclasses
import math

import numpy as np
import pytest

from nndensity import generators as G
from nndensity.seeding import sub_seed, sub_seeds


def test_rue_range_and_determinism():
    a = G.gen_rue(50, 42)
    assert a.n == 50 and np.all((a.coords >= 0) & (a.coords <= 1))
    assert a.same_as(G.gen_rue(50, 42))
    assert not np.array_equal(a.coords, G.gen_rue(50, 43).coords)
    assert a.provenance == {"family": "rue", "params": {"n": 50}, "seed": 42}


def test_rue_pooled_mean():
    pts = np.concatenate([G.gen_rue(100, s).coords for s in range(100)])
    assert np.all(np.abs(pts.mean(axis=0) - 0.5) < 0.02)


def test_rne_moments_and_degenerate_limit():
    pts = np.concatenate([G.gen_rne(100, s, 0.5, 0.2).coords for s in range(100)])
    assert np.all(np.abs(pts.std(axis=0) / 0.2 - 1) < 0.05)
    tight = G.gen_rne(50, 7, 0.5, 1e-15)
    assert np.allclose(tight.coords, 0.5)
    assert G.gen_rne(20, 3).same_as(G.gen_rne(20, 3))


def test_ba_graph_small():
    g = G.ba_graph(5, 2, 2, 0)
    assert g.is_connected()
    assert len(g.edges) == 1 + 2 * 3
    assert g.degrees.sum() == 2 * len(g.edges)
    assert len({tuple(e) for e in g.edges.tolist()}) == len(g.edges)


def test_ba_graph_tree_when_m_is_one():
    g = G.ba_graph(4, 1, 1, 5)
    assert len(g.edges) == 3 and g.is_connected()


def test_ba_graph_heavy_tail():
    g = G.ba_graph(2000, 3, 3, 11)
    assert g.degrees.max() > 10 * np.median(g.degrees)


def test_ba_graph_rejects_bad_params():
    for args in [(5, 1, 2), (5, 5, 1), (5, 2, 0)]:
        with pytest.raises(G.InvalidConfigError):
            G.ba_graph(*args, 0)


def test_degrees_to_distances():
    g = G.DegreeGraph(3, np.array([[0, 1], [1, 2]]), np.array([1, 2, 1]))
    d = G.degrees_to_distances(g, 0.5)
    assert d[0, 2] == pytest.approx(math.exp(-1), abs=1e-5)
    assert d[0, 1] < d[0, 2]
    assert np.allclose(d, d.T) and np.all(np.diag(d) == 0)
    tiny = G.degrees_to_distances(g, 1e-12)
    assert np.allclose(tiny[~np.eye(3, dtype=bool)], 1.0)


def test_spring_layout_equilateral():
    t = np.ones((3, 3)) - np.eye(3)
    res = G.spring_layout(t, seed=1)
    p = res.raw
    d = [np.linalg.norm(p[i] - p[j]) for i, j in [(0, 1), (1, 2), (0, 2)]]
    assert max(d) / min(d) < 1.01
    assert res.final_stress <= res.initial_stress


def test_spring_layout_two_nodes():
    res = G.spring_layout(np.array([[0, 0.3], [0.3, 0]]), seed=0)
    assert np.linalg.norm(res.raw[0] - res.raw[1]) == pytest.approx(0.3, rel=1e-6)


def test_spring_layout_reports_non_convergence():
    g = G.ba_graph(30, 3, 3, 0)
    res = G.spring_layout(G.degrees_to_distances(g, 0.1), iterations=1, tolerance=0.0, seed=0)
    assert not res.converged and res.iterations == 1
    assert res.final_stress <= res.initial_stress


def test_scale_free_radial_pattern():
    inst = G.gen_scale_free(G.ScaleFreeConfig(100), 3)
    p = inst.coords
    assert np.all((p >= 0) & (p <= 1))
    d = inst.distances()
    np.fill_diagonal(d, np.inf)
    r1 = d.min(axis=1)
    order = np.argsort(np.linalg.norm(p - p.mean(axis=0), axis=1))
    q = len(order) // 4
    assert r1[order[:q]].mean() < r1[order[-q:]].mean()


def test_parallel_counterexample_layout():
    inst = G.generate(G.ParallelConfig(50, rotate=False), 0)
    x = np.linspace(0, 1, 25)
    # before the unit rescale the rows are y = x and y = x + 0.05
    base = G.parallel_base(50, 0.05)
    assert np.array_equal(base[:25], np.column_stack((x, x)))
    assert np.allclose(base[25:], np.column_stack((x, x + 0.05)))
    span = (base.max(axis=0) - base.min(axis=0)).max()
    assert np.allclose(inst.coords, (base - base.min(axis=0)) / span)


def test_parallel_zero_noise_stays_on_two_lines():
    inst = G.generate(G.ParallelConfig(40, d=0.05), 9)
    p = inst.coords
    for rows in (p[:20], p[20:]):
        c = rows - rows.mean(axis=0)
        # smallest singular value = perpendicular residual from the fitted line
        assert np.linalg.svd(c, compute_uv=False)[-1] < 1e-12


def test_parallel_rejects_odd_n():
    with pytest.raises(G.InvalidConfigError):
        G.generate(G.ParallelConfig(51), 0)


def test_convolution_small_lambda_is_uniform_like():
    inst = G.gen_convolution(G.ConvolutionConfig(2000, lambda_max=1e-12), 1)
    assert np.all((inst.coords > -1e-4) & (inst.coords < 1 + 1e-4))


def test_gen_batch_distinct_and_job_independent():
    cfg = G.RueConfig(50)
    a = G.gen_batch(cfg, 3, 5)
    assert len({x.coords.tobytes() for x in a}) == 3
    b = G.gen_batch(cfg, 3, 5, jobs=2)
    assert all(x.same_as(y) for x, y in zip(a, b))
    assert a[1].provenance["seed"] == sub_seed(5, 1)


def test_sub_seeds_no_collisions():
    s = sub_seeds(123, 10**6)
    assert np.unique(s).size == 10**6
    assert int(s[17]) == sub_seed(123, 17)


def test_make_config_coerces_strings():
    cfg = G.make_config("scale-free", n="30", k_attract="0.2", m="3", m0="3")
    assert cfg == G.ScaleFreeConfig(30, m0=3, m=3, k_attract=0.2)
    assert G.make_config("parallel", n=10, rotate="false").rotate is False
    with pytest.raises(G.InvalidConfigError):
        G.make_config("nope", n=10)


def test_augmentation_sweep_configs_valid():
    cfgs = G.augmentation_sweep(50, 20, 0)
    for c in cfgs:
        c.validate()
    assert cfgs == G.augmentation_sweep(50, 20, 0)
    assert dataclasses.asdict(cfgs[0])["n"] == 50
