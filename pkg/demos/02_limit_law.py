"""The limit law S = sum_k lambda_k (eps_k^2 - 1) and its distribution.

Sampling, characteristic-function inversion and cumulants must describe
the same law. Its right tail is exponential at rate 1/(2 lambda_1). Its
left tail is sub-Gaussian.
"""
# %%
import math

import numpy as np
from scipy import stats

from rosenblatt_lrd.domains import Interval
from rosenblatt_lrd.rosenblatt import build_spec, cdf, cumulants, density, density_bound, sample, sf

spec = build_spec(Interval(0.0, 1.0), 0.25)
print("kappa_2..kappa_4:", np.round(cumulants(spec, 4)[1:], 4))

# %% Samples against the inverted cdf
s = sample(spec, 10**5, seed=7)
print("KS distance:", round(stats.kstest(s, lambda x: cdf(spec, x)).statistic, 5))
print("sample skewness:", round(float(stats.skew(s)), 4),
      " exact:", round(cumulants(spec, 3)[2] / spec.kappa2**1.5, 4))

# %% Density on a grid, with the two-eigenvalue bound
x = np.linspace(-8, 30, 2001)
f = density(spec, x)
print(f"mode near {x[f.argmax()]:.3f}, max {f.max():.4f}, bound {density_bound(spec):.4f}")

# %% Tails
lam1 = spec.lambdas[0]
u = 30 * lam1
print("sf(u + lambda_1) / sf(u) =", round(float(sf(spec, u + lam1) / sf(spec, u)), 4), " e^{-1/2} =", round(math.exp(-0.5), 4))
for t in (1, 2, 3):
    print(f"P[S < -{t}] = {float(cdf(spec, -t)):.3e} <= exp(-{t}^2/2) = {math.exp(-t * t / 2):.3e}")
