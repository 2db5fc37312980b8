import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from rosenblatt_lrd.cycle_traces import cycle_trace_mc
from rosenblatt_lrd.domains import Interval
from rosenblatt_lrd.errors import ParameterRangeError
from rosenblatt_lrd.riesz_spectrum import weyl_prefactor
from rosenblatt_lrd.rosenblatt import (
    RosenblattSpec,
    build_spec,
    cdf,
    char_fn,
    cumulants,
    density,
    density_bound,
    riesz_constant,
    sample,
    sf,
)


def series_cf(lambdas, z, terms=60):
    # exp(1/2 sum_{m>=2} (2iz)^m c_m / m), valid for |z| < 1/(2 lambda_1)
    c = lambda m: sum(l**m for l in lambdas)
    return np.exp(0.5 * sum((2j * z) ** m * c(m) / m for m in range(2, terms + 1)))


@pytest.fixture(scope="module")
def gamma_spec():
    # eight equal weights: S + 2 = 0.25 chi^2_8 ~ Gamma(4, scale 0.5)
    return RosenblattSpec(1, 0.25, None, [0.25] * 8, 0.0)


def test_build_spec_example(spec_quarter):
    assert spec_quarter.kappa2 == pytest.approx(16 / 3, rel=1e-12)
    assert spec_quarter.tail_var >= 0
    assert np.all(np.diff(spec_quarter.lambdas) <= 0)
    assert spec_quarter.K == 200


def test_build_spec_errors(unit_interval):
    with pytest.raises(ParameterRangeError):
        build_spec(unit_interval, 0.5)
    with pytest.raises(ValueError):
        build_spec(unit_interval, 0.25, resolution=500, K=200)


def test_spec_validation_and_round_trip(spec_quarter):
    with pytest.raises(ValueError):
        RosenblattSpec(1, 0.25, None, [0.1, 0.2])
    with pytest.raises(ParameterRangeError):
        RosenblattSpec(1, 0.6, None, [0.2])
    assert RosenblattSpec(1, 0.25, None, [0.2], tail_var=-1e-12).tail_var == 0.0
    back = RosenblattSpec.from_dict(json.loads(json.dumps(spec_quarter.to_dict())))
    assert back == RosenblattSpec(1, 0.25, Interval(0, 1), spec_quarter.lambdas, spec_quarter.tail_var)


def test_riesz_constant_value():
    d, a = 1, 0.25
    assert riesz_constant(d, a) == pytest.approx(math.gamma(0.375) / (math.sqrt(math.pi) * 2**0.25 * math.gamma(0.125)))


def test_char_fn_normalization_and_curvature(spec_quarter):
    assert char_fn(spec_quarter, 0.0) == 1
    h = 1e-4
    second = (char_fn(spec_quarter, h) - 2 + char_fn(spec_quarter, -h)).real / h**2
    assert second == pytest.approx(-spec_quarter.kappa2, rel=1e-4)


def test_char_fn_matches_trace_series(toy_spec):
    z = np.linspace(-0.5, 0.5, 41)
    assert np.max(np.abs(char_fn(toy_spec, z) - series_cf([0.3, 0.1], z))) < 1e-10


@settings(max_examples=80, deadline=None)
@given(st.floats(-200, 200, allow_nan=False))
def test_char_fn_axioms(z):
    spec = RosenblattSpec(1, 0.25, None, [0.9, 0.4, 0.2, 0.05], 0.01)
    v = char_fn(spec, z)
    assert abs(v) <= 1 + 1e-15
    assert char_fn(spec, -z) == pytest.approx(np.conj(v), abs=1e-15)


def test_cumulants(spec_quarter):
    kap = cumulants(spec_quarter, 4)
    assert kap[0] == 0.0
    assert kap[1] == pytest.approx(16 / 3, rel=1e-12)
    mc = cycle_trace_mc(Interval(0, 1), 0.25, 3, n=10**6, seed=31)
    assert abs(kap[2] - 8 * mc.value) < 3 * 8 * mc.stderr
    with pytest.raises(ValueError):
        cumulants(spec_quarter, 1)


def test_truncated_third_moment_small(spec_quarter):
    # sum_{k > K} 8 lambda_k^3 via the Weyl tail, against kappa_3
    k = np.arange(spec_quarter.K + 1, 10**6)
    tail = 8 * np.sum((weyl_prefactor(Interval(0, 1), 0.25) * k**-0.75) ** 3)
    assert tail < 0.01 * cumulants(spec_quarter, 3)[2]


def test_skewness_decreases_with_alpha(unit_interval):
    skew = []
    for a in (0.05, 0.15, 0.25, 0.35, 0.45):
        kap = cumulants(build_spec(unit_interval, a, resolution=1000, K=200), 3)
        skew.append(kap[2] / kap[1] ** 1.5)
    assert np.all(np.diff(skew) < 0)


def test_sample_moments(spec_quarter):
    n = 10**6
    s = sample(spec_quarter, n, seed=5)
    assert abs(s.mean()) < 3 * math.sqrt(spec_quarter.kappa2 / n)
    assert s.var() == pytest.approx(spec_quarter.kappa2, rel=1e-2)


def test_sample_deterministic_across_workers(spec_quarter):
    a = sample(spec_quarter, 70000, seed=8, workers=1)
    b = sample(spec_quarter, 70000, seed=8, workers=3)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample(spec_quarter, 70000, seed=9))


def test_density_and_cdf_against_gamma_law(gamma_spec):
    law = stats.gamma(a=4, scale=0.5, loc=-2)
    x = np.linspace(-1.9, 8, 60)
    assert np.max(np.abs(density(gamma_spec, x) - law.pdf(x))) < 1e-8
    assert np.max(np.abs(cdf(gamma_spec, x) - law.cdf(x))) < 1e-8
    assert np.max(np.abs(sf(gamma_spec, x) - law.sf(x))) < 1e-8


def test_inversion_needs_eight_terms(toy_spec):
    for fn in (density, cdf, sf):
        with pytest.raises(ValueError):
            fn(toy_spec, [0.0])


def test_density_normalized_bounded_unimodal(spec_quarter):
    sd = math.sqrt(spec_quarter.kappa2)
    x = np.linspace(-6 * sd, 12 * sd, 4001)
    f = density(spec_quarter, x)
    assert np.trapezoid(f, x) == pytest.approx(1.0, abs=1e-3)
    assert f.max() <= density_bound(spec_quarter)
    mode = x[np.argmax(f)]
    peak = f.max()
    assert peak > density(spec_quarter, [mode - 5 * sd])[0]
    assert peak > density(spec_quarter, [mode + 5 * sd])[0]
    slope = np.sign(np.diff(f[f > 1e-10]))
    slope = slope[slope != 0]
    assert np.count_nonzero(np.diff(slope)) <= 1


def test_density_bound_is_two_term_maximum():
    # the two-term density lambda_1 e1^2 + lambda_2 e2^2 approaches the bound at 0+
    spec = RosenblattSpec(1, 0.25, None, [0.6, 0.3], 0.0)
    x = np.random.default_rng(0).standard_normal((2, 10**6)) ** 2
    s = 0.6 * x[0] + 0.3 * x[1]
    near_zero = np.mean(s < 0.01) / 0.01
    assert near_zero == pytest.approx(density_bound(spec), rel=0.05)


def test_cdf_limits_and_monotone(spec_quarter):
    sd = math.sqrt(spec_quarter.kappa2)
    assert cdf(spec_quarter, 20 * sd) == pytest.approx(1.0, abs=1e-3)
    grid = np.linspace(-4 * sd, 15 * sd, 100)
    c = cdf(spec_quarter, grid)
    assert np.all(np.diff(c) >= 0)
    assert np.all((c >= 0) & (c <= 1))
    assert np.allclose(c + sf(spec_quarter, grid), 1.0, atol=1e-12)


def test_tail_ratio(spec_quarter):
    lam1 = spec_quarter.lambdas[0]
    u = 30 * lam1
    ratio = sf(spec_quarter, u + lam1) / sf(spec_quarter, u)
    assert ratio == pytest.approx(math.exp(-0.5), rel=0.05)


def test_lower_tail_inequality(spec_quarter):
    n = 10**6
    s = sample(spec_quarter, n, seed=21)
    for x in (1, 2, 3):
        p = np.mean(s < -x)
        assert p <= math.exp(-x * x / 2) + 3 * math.sqrt(max(p * (1 - p), 1 / n) / n)
        assert cdf(spec_quarter, -x) <= math.exp(-x * x / 2)
