"""From a long-range dependent Gaussian field to the limit law.

Y has covariance (1 + |z|^beta)^{-gamma}. We integrate Y^2 - 1 over the
dilated domain T D and normalize. As T grows, the law of the functional
approaches S. A rank-4 Hermite component decays too, but only slowly.
"""
# %%
import numpy as np
from numpy.polynomial.hermite_e import HermiteE

from rosenblatt_lrd.domains import Interval
from rosenblatt_lrd.field_sim import FieldConfig, convergence_report, sample_functionals, simulate_field
from rosenblatt_lrd.rosenblatt import build_spec

D = Interval(0.0, 1.0)
base = FieldConfig(1.0, 0.3, 256.0, 1.0, D)
spec = build_spec(D, base.alpha)

real = simulate_field(base.with_T(1024.0), seed=1)
print("one realization: lattice", real.values.shape, " sample var", round(float(real.inside.var()), 3))

# %% KS distance to the limit law shrinks with T
for row in convergence_report(base, [2**8, 2**10, 2**12], 300, spec, seed=2, workers=2):
    print(f"T = {row.T:6.0f}  KS {row.ks:.4f}  var {row.var:.3f}  (kappa_2 {spec.kappa2:.3f})")

# %% H_2 + H_4: the H_4 part decays like T^{-(1 - 2 alpha)}
G = HermiteE([0, 0, 1, 0, 1])
for T in (2**8, 2**12):
    d = sample_functionals(base.with_T(float(T)), 300, seed=3, G=G)
    frac = (d[:, 1] - d[:, 0]).var() / d[:, 0].var()
    print(f"T = {T:5d}  residual var / Var(S_T) = {frac:.3f}")
