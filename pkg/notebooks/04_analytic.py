# %% [markdown]
# # Closed forms for nearest-neighbor distances

# %%
import math

import numpy as np
from scipy import integrate

from nndensity import density as D
from nndensity import generators as G

# %%
n = 10**6
print([round(math.sqrt(n) * D.analytic_E_rk(n, k), 6) for k in (1, 2, 3)])
print("tour coefficients", D.tour_coefficients())
print("density lower bound at beta=0.7124:", round(D.rho_lower_bound(0.7124), 4))

# %% [markdown]
# The pdf of the nearest-neighbor distance integrates to one, and the torus (no
# boundary) matches it closely.

# %%
n = 200
total, _ = integrate.quad(lambda r: D.analytic_pdf_r1(n, r), 0, 1 / math.sqrt(math.pi), points=[D.analytic_mode_r1(n)])
print("integral", total)
samples = np.concatenate([
    D.nn_distance_samples(G.gen_rue(n, s).with_metric("torus"), 1).samples[:, 0] for s in range(20)
])
print("empirical mean", samples.mean(), "analytic", D.analytic_E_rk(n, 1))
edges = np.linspace(0, 0.08, 9)
hist, _ = np.histogram(samples, edges, density=True)
mid = (edges[:-1] + edges[1:]) / 2
for m, h in zip(mid, hist):
    print(f"r={m:.3f}  empirical {h:6.2f}  analytic {D.analytic_pdf_r1(n, m):6.2f}")
