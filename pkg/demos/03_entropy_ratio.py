# %% [markdown]
# # How much of the Joule entropy do the probes produce?
#
# The ratio T_0 S_P / P compares the entropy the probes inject into the wire
# with the entropy expected from the dissipated power. It grows with the
# number of probes and with their coupling, and to a good approximation
# depends only on the product N gamma_p / t.

# %%
from collections import defaultdict

from joulewire import experiments as ex

spec = ex.SweepSpec(tuple(range(1, 101)), (0.25, 0.5, 1.0, 2.0, 5.0), t=2.7, T0=232.0, delta_mu=0.2)
rows = ex.sweep_ratio(spec, workers=2)

# %%
for g in spec.gamma_values:
    n, r = ex.ratio_table(rows, g)
    print(f"gamma_p/t={g:<5} N=1: {r[0]:.3f}  N=10: {r[9]:.3f}  N=100: {r[-1]:.3f}")

# %% [markdown]
# Points with the same N gamma_p / t land on top of each other.

# %%
groups = defaultdict(list)
for row in rows:
    groups[round(row.N_gamma_over_t, 9)].append((row.N, row.gamma_over_t, row.ratio))
for key in (10.0, 25.0, 50.0):
    print(key, [(n, g, round(r, 4)) for n, g, r in groups[key]])
