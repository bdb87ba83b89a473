# %% [markdown]
# # Transmission through a probed chain
#
# A chain of N sites sits between two semi-infinite leads. Every site is
# also coupled to a wide-band probe of width gamma_p. Here we look at the
# terminal transmission matrix and at how the probes eat into the direct
# source-to-drain channel.

# %%
import numpy as np

from joulewire.negf import WireModel, transmission_at, transmission_on_grid

t = 2.7  # eV

# %% [markdown]
# A clean chain is ballistic: T_12 = 1 everywhere inside the band.

# %%
clean = WireModel(20, t)
energies = np.linspace(-5.0, 5.0, 5)
print("clean chain T_12:", transmission_on_grid(clean, energies)[:, 0, 1])

# %% [markdown]
# With probes attached the direct channel decays with length while the
# source-to-probe transmissions pick up the difference. For one site the
# numbers are simple: T_12 = 0.64 and T_1P = 0.32 at gamma_p = t.

# %%
print("single site, gamma_p = t:", transmission_at(WireModel(1, t, t), 0.0)[:3, :3].round(6))
for n in (1, 5, 20, 50):
    tm = transmission_at(WireModel(n, t, 0.5 * t), 0.0)
    print(f"N={n:3d}  T_12={tm[0, 1]:.3e}  sum_n T_1Pn={tm[0, 2:].sum():.4f}")
