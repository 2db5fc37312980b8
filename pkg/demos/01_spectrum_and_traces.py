"""Eigenvalues of the Riesz operator and the traces they determine.

On D = [0, 1] the squared trace has the closed form 8/3 at alpha = 1/4.
We compare that value with the spectrum, with Monte Carlo over the
cyclic integral and with the Weyl law for the decay of lambda_k.
"""
# %%
import numpy as np

from rosenblatt_lrd.cycle_traces import cycle_trace_mc, cycle_trace_spectral
from rosenblatt_lrd.domains import Box, Interval
from rosenblatt_lrd.riesz_spectrum import RieszConfig, eigenvalues, trace_squared, weyl_prefactor

D = Interval(0.0, 1.0)
alpha = 0.25
spec = eigenvalues(RieszConfig(D, alpha, 2000), 200)
lam = spec.reliable
print("leading eigenvalues:", np.round(lam[:5], 5))

# %% The squared trace three ways
print("closed form   ", trace_squared(D, alpha).value)
print("spectral      ", cycle_trace_spectral(spec, 2).value)
mc = cycle_trace_mc(D, alpha, 2, n=10**6, seed=1)
print(f"Monte Carlo    {mc.value:.5f} +- {mc.stderr:.5f}")

# %% Higher cycles: spectral power sums agree with MC
for m in (3, 4):
    s = cycle_trace_spectral(spec, m).value
    e = cycle_trace_mc(D, alpha, m, n=10**6, seed=m)
    print(f"c_{m}: spectral {s:.5f}, MC {e.value:.5f} +- {e.stderr:.5f}")

# %% Weyl law: lambda_k k^{(d - alpha)/d} settles at the Weyl prefactor
k = np.arange(1, lam.size + 1)
print("lambda_k k^0.75 at k = 10, 50, 200:", np.round((lam * k**0.75)[[9, 49, 199]], 4))
print("Weyl prefactor:", round(weyl_prefactor(D, alpha), 4))

# %% The same check in two dimensions (about 6 s)
sq = eigenvalues(RieszConfig(Box((1.0, 1.0)), 0.5, 200), 200)
k2 = np.arange(50, 201)
print("unit square, alpha 0.5: median lambda_k k^0.75 =", round(float(np.median(sq.eigenvalues[49:200] * k2**0.75)), 4))
print("Weyl prefactor:", round(weyl_prefactor(Box((1.0, 1.0)), 0.5), 4))
