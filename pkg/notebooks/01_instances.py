# %% [markdown]
# # Instance families and file formats
#
# Every generator is a pure function of a config and a seed.

# %%
import numpy as np

from nndensity import generators as G
from nndensity.tsplib_io import dump_json, parse_instance, write_instance

# %%
rue = G.gen_rue(50, 42)
rne = G.gen_rne(50, 42, sd=0.2)
conv = G.generate(G.ConvolutionConfig(50), 42)
print(rue.coords.min(), rue.coords.max())
print(rne.coords.std(axis=0))

# %% [markdown]
# Scale-free instances: a Barabasi-Albert graph, degree-based target distances,
# then a stress-majorization layout. High-degree nodes end up in a dense core.

# %%
g = G.ba_graph(100, 10, 10, 0)
targets = G.degrees_to_distances(g, 0.1)
layout = G.spring_layout(targets, seed=0)
print(f"stress {layout.initial_stress:.1f} -> {layout.final_stress:.1f} in {layout.iterations} iterations")
sf = G.gen_scale_free(G.ScaleFreeConfig(100), 0)
r = np.linalg.norm(sf.coords - sf.coords.mean(axis=0), axis=1)
print("radius of the 5 highest-degree nodes:", np.round(r[np.argsort(g.degrees)[-5:]], 3))

# %% [markdown]
# Two parallel rows (the counterexample layout) and its noisy, rotated variants.

# %%
clean = G.generate(G.ParallelConfig(50, rotate=False), 0)
noisy = G.generate(G.ParallelConfig(50, alpha=0.3, sigma_large=0.05, sigma_small=0.005), 0)
print(clean.coords[:3], noisy.coords[:3], sep="\n")

# %% [markdown]
# TSPLIB text and the JSON interchange format round-trip exactly.

# %%
text = write_instance(rue)
assert np.array_equal(parse_instance(text).coords, rue.coords)
print(text.splitlines()[:6])
print(dump_json(rue)[:120], "...")

# %%
batch = G.gen_batch(G.RueConfig(20), 3, master_seed=7)
print([inst.name for inst in batch], [inst.provenance["seed"] for inst in batch])
