# %% [markdown]
# # Nearest-neighbor density
#
# The share of nodes whose nearest neighbor sits next to them on the optimal tour.

# %%
from pathlib import Path

import numpy as np

from nndensity import density as D
from nndensity import generators as G
from nndensity import solvers as S
from nndensity.tsplib_io import read_instance_file

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"

# %%
insts = G.gen_batch(G.RueConfig(20), 40, 0)
tours = S.solve_batch(insts, S.SolveConfig(algorithm="exact"))
s = D.rho_batch(insts, tours)
print(f"RUE n=20: mean {s.mean:.4f}, sd {s.sd:.4f} over {s.count}")

# %% [markdown]
# The counterexample: two staggered rows. The optimal tour runs up one row and back
# down the other, covering the nearest neighbor of only 2 of the 50 nodes.

# %%
clean = G.generate(G.ParallelConfig(50, rotate=False), 0)
comb = S.comb_tour(50)
ns = D.nn_sets(clean)
print("rho", D.rho(clean, comb, ns).rho, "uncovered pairs", len(D.uncovered_nn_edges(comb, ns)))

# %% [markdown]
# TSPLIB instances have grid ties; a280 even has a duplicated node.

# %%
for name in ("eil51", "berlin52", "a280"):
    inst = read_instance_file(DATA / f"{name}.tsp")
    t = S.local_search_tour(inst, S.SolveConfig(restarts=5))
    rep = D.rho(inst, t)
    print(f"{name}: length {t.length:g}, rho {rep.rho:.4f}, nodes with ties {rep.tie_count}")

# %% [markdown]
# Gaps of the greedy heuristic against local search, binned by density.

# %%
insts = G.gen_batch(G.RueConfig(50), 60, 1)
ref = S.solve_batch(insts, S.SolveConfig(restarts=3))
gaps = [S.nn_tour(i).length / t.length - 1 for i, t in zip(insts, ref)]
rhos = [D.rho(i, t).rho for i, t in zip(insts, ref)]
print("defect rate", D.defect_rate(gaps))
for lo, hi, count, rate, gap in D.defect_by_rho(rhos, gaps, bins=4):
    print(f"rho {lo:.2f}-{hi:.2f}: n={count} mean gap {gap:.3f}")
