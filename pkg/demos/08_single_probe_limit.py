# %% [markdown]
# # One probe can only do half the job
#
# With a single probe, no matter how strongly it couples, the injected
# entropy stays below half of the Joule entropy. The closed form and the
# full pipeline agree to rounding.

# %%
from joulewire import experiments as ex
from joulewire.entropy import single_probe_analytic
from joulewire.negf import K_B

T0 = 232.0
dmu = 0.1 * K_B * T0
for g in (1e-2, 1.0, 1e2, 1e3):
    pipeline = ex.solve_point(1, g, 2.7, T0, dmu).report.ratio
    closed = single_probe_analytic(2.7, g * 2.7, ex.bias(0.0, dmu), T0)
    print(f"gamma_p/t={g:<7g} pipeline {pipeline:.8f}  closed form {closed.ratio:.8f}  "
          f"leading order {closed.ratio_leading_order:.8f}")
