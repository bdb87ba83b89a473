# %% [markdown]
# # Approach to full Joule entropy with length
#
# For long wires the missing entropy behaves like an end correction, so the
# ratio is often plotted against 1/N. Over N = 20..100 the least-squares
# lines do not yet reach 1 at 1/N -> 0: the ends stay hot and the
# asymptotic 1/N tail only sets in for much longer wires.

# %%
from joulewire import experiments as ex

spec = ex.SweepSpec(tuple(range(20, 101)), (0.25, 0.5, 1.0, 2.0, 5.0), t=2.7, T0=100.0, delta_mu=0.1)
for f in ex.deficit_fit(spec, n_min=20, workers=2):
    print(f"gamma_p/t={f.gamma_over_t:<5} intercept={f.fit.intercept:.3f} slope={f.fit.slope:+.2f} "
          f"R^2={f.fit.r_squared:.3f}")

# %% [markdown]
# Longer wires push the ratio closer to 1.

# %%
for n in (100, 400, 1600):
    print(n, round(ex.solve_point(n, 5.0, 2.7, 100.0, 0.1).report.ratio, 4))
