# %% [markdown]
# # Batch pipeline and overlays
#
# One config and one master seed determine every report byte.

# %%
import tempfile
from pathlib import Path

from nndensity import bench
from nndensity import generators as G
from nndensity import solvers as S

# %%
out = Path(tempfile.mkdtemp())
cfg = bench.ExperimentConfig(
    generator=G.ConvolutionConfig(20),
    count=20,
    master_seed=1,
    solver=S.SolveConfig(algorithm="exact"),
    out_dir=out,
)
res = bench.run_pipeline(cfg)
print({k: res.summary[k] for k in ("rho_mean", "rho_sd", "mean_len", "defect_rate")})
print((out / "instances.csv").read_text().splitlines()[:3])
print(sorted(p.name for p in out.iterdir()))

# %% [markdown]
# Calibrating the scale-free attraction constant against a density target.

# %%
rep = bench.calibrate_k(30, [0.05, 0.1, 0.2], 10, 0, target=0.75, solver=S.SolveConfig(restarts=2))
for row in rep["table"]:
    print(row["k"], round(row["rho_mean"], 4))
print("best k", rep["best_k"])

# %% [markdown]
# The same runs from the shell:
#
#     nndensity stats --family rue --n 20 --count 100 --algo exact --seed 1 --out reports/
#     nndensity render --instance tests/data/berlin52.tsp --tour tests/data/berlin52.opt.tour --out b.svg
