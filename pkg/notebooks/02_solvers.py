# %% [markdown]
# # Tours: greedy, exact and local search

# %%
import math
from pathlib import Path

from nndensity import generators as G
from nndensity import solvers as S
from nndensity.tsplib_io import read_instance_file

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"

# %%
inst = G.gen_rue(20, 1)
nn = S.nn_tour(inst)
exact = S.exact_tour(inst)
ls = S.local_search_tour(inst, S.SolveConfig(restarts=5, seed=3))
print(f"greedy {nn.length:.4f}  exact {exact.length:.4f}  local search {ls.length:.4f}")
print("greedy bound 0.5*(ceil(log2 n)+1) =", 0.5 * (math.ceil(math.log2(inst.n)) + 1), "ratio", nn.length / exact.length)

# %% [markdown]
# Held-Karp is capped at 24 nodes; larger instances go to local search.

# %%
try:
    S.exact_tour(G.gen_rue(30, 0))
except S.SizeLimitError as exc:
    print(exc)

# %%
for name, opt in (("eil51", 426), ("berlin52", 7542)):
    tsp = read_instance_file(DATA / f"{name}.tsp")
    t = S.local_search_tour(tsp, S.SolveConfig(restarts=20))
    print(name, t.length, "published optimum", opt)

# %% [markdown]
# Batches derive one seed per index, so results do not depend on the worker count.

# %%
insts = G.gen_batch(G.RueConfig(40), 4, 9)
print([round(t.length, 4) for t in S.solve_batch(insts, S.SolveConfig(restarts=3))])
