# %% [markdown]
# # Resistance of a probed wire
#
# Floating probes act as inelastic scatterers and make the wire resistive.
# Weakly coupled probes add resistance linearly, about gamma_p / 4t each.
# For strong coupling transport becomes sequential, hopping between probes,
# and R grows quadratically with a coefficient of about 1/16 per link.

# %%
from joulewire import experiments as ex

weak = ex.resistance_scan(50, regime="weak")
print(f"weak:   R = {weak.intercept:.6f} + {weak.slope_or_quad_coeff:.4f} gamma/t   (slope/N = {weak.per_link:.5f})")
strong = ex.resistance_scan(50, regime="strong")
print(f"strong: quadratic coefficient / (N-1) = {strong.per_link:.5f}")
print("gamma_p -> 0:", ex.resistance(50, 1e-9), "h/e^2")
