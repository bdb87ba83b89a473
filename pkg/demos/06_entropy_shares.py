# %% [markdown]
# # Which probes inject the entropy?
#
# Normalised by the total, the probe injections show where entropy enters
# the wire. Probes near the ends carry the largest shares; which of the
# first two sites wins depends on the coupling.

# %%
import numpy as np

from joulewire import experiments as ex
from joulewire.negf import K_B

T0 = 115.0
for g in (0.25, 1.0, 5.0):
    sh = ex.probe_entropy_shares(30, g, 2.7, T0, 10 * K_B * T0)
    s = sh.shares
    print(f"gamma_p/t={g:<5} first sites {np.round(s[:3], 4)}  center {s[14]:.4f}  sum {s.sum():.6f}")
