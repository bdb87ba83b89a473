# %% [markdown]
# # Local distributions versus probe Fermi functions
#
# A probe reports a Fermi function, but the electrons on its site are not
# in equilibrium: near the ends the local occupation is a mixture of the
# source and drain distributions. The entropy difference Delta S_n between
# the probe's Fermi function and the local distribution measures how far
# the site is from local equilibrium.

# %%
import numpy as np

from joulewire import experiments as ex
from joulewire.negf import K_B

t, T0 = 2.7, 115.0
dmu = 10 * K_B * T0

# %%
for g in (0.25, 1.0):
    snaps = ex.distribution_snapshots(11, g, t, T0, dmu)
    print(f"gamma_p/t={g}: " + ", ".join(f"site {s.site}: max|f_n - f_Pn|={s.max_deviation:.3f}" for s in snaps))

# %% [markdown]
# Delta S_n is non-negative, largest at the ends and much smaller for strong
# coupling, where the probes thermalise the wire.

# %%
for g in (0.25, 5.0):
    d = ex.entropy_deficit_profile(30, g, t, T0, dmu).delta
    print(f"gamma_p/t={g:<5} ends {d[0]:.2e}  center {d[14]:.2e}  median {np.median(d):.2e}")
