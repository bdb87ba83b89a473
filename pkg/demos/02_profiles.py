# %% [markdown]
# # Floating probe profiles
#
# Each probe adjusts its chemical potential and temperature until it draws
# no particle and no heat current. In linear response this is two sparse
# linear systems. The potential drops monotonically from source to drain;
# the temperature peaks in the middle of the wire, where Joule heat piles up.

# %%
import numpy as np

from joulewire import experiments as ex

t, T0, dmu = 2.7, 100.0, 0.1

# %%
for g in (0.25, 1.0, 5.0):
    prof = ex.profiles(30, g, t, T0, dmu)
    print(f"gamma_p/t={g:<5} mu_P: {prof.mus[0]:+.4f} .. {prof.mus[-1]:+.4f} eV   "
          f"T_P: ends {prof.temps[0]:.1f} K, max {prof.temps.max():.1f} K   "
          f"monotone={prof.mu_monotone} one-peak={prof.single_interior_max}")

# %% [markdown]
# The linearised solution can be checked against the full nonlinear one,
# where every transmission keeps its energy dependence.

# %%
som = ex.profiles(10, 1.0, t, T0, 0.02)
exact = ex.profiles(10, 1.0, t, T0, 0.02, exact=True)
print("max |mu_exact - mu_linear| =", np.max(np.abs(exact.mus - som.mus)), "eV")
print("max |T_exact - T_linear|   =", np.max(np.abs(exact.temps - som.temps)), "K")
