"""Lévy structure of the limit law and its OU-type representation.

The Lévy density q(u) is a sum of exponentials over 2u. We read off its
two power laws and the Thorin criteria. We then draw S as the
stationary marginal of an OU process driven by compound Poisson noise.
"""
# %%
import math

import numpy as np
from scipy import stats

from rosenblatt_lrd.domains import Interval
from rosenblatt_lrd.levy import (
    LevyView,
    background_levy_variance,
    levy_density,
    levy_moment,
    sample_ou_stationary,
    thorin_atoms,
)
from rosenblatt_lrd.rosenblatt import build_spec, sample

spec = build_spec(Interval(0.0, 1.0), 0.25)
view = LevyView(spec)

# %% Small-u power law, with and without the Weyl tail of the spectrum
u = np.geomspace(1e-5, 1e-3, 30)
for v, label in ((view, "with tail"), (LevyView(spec, weyl_tail=False), "truncated")):
    slope = np.polyfit(np.log(u), np.log(levy_density(v, u)), 1)[0]
    print(f"{label:10s} log-log slope {slope:.4f}")
print("expected -7/3 =", round(-7 / 3, 4))

# %% Second moment of the Lévy measure is the variance
print("int u^2 q(u) du =", round(levy_moment(view, 2), 5), " kappa_2 =", round(spec.kappa2, 5))
print("first Thorin atoms:", thorin_atoms(view)[:3])

# %% OU marginal against the series sampler
ou = sample_ou_stationary(view, 10**4, seed=3, workers=2)
ref = sample(spec, 10**5, seed=4)
sd = math.sqrt(0.5 * background_levy_variance(view, 1.0))
print("OU var", round(ou.var(), 4), " pinned", round(sd**2, 4))
print("KS(OU, series) =", round(stats.ks_2samp(ou / sd, ref / sd).statistic, 4))
