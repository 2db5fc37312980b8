import math

import numpy as np
import pytest
from scipy import special, stats

from rosenblatt_lrd.levy import (
    LevyView,
    background_levy_variance,
    levy_density,
    levy_moment,
    ou_integral,
    power_series_G,
    sample_background_levy,
    sample_ou_stationary,
    thorin_atoms,
)
from rosenblatt_lrd.riesz_spectrum import weyl_prefactor
from rosenblatt_lrd.rosenblatt import RosenblattSpec, sample


@pytest.fixture(scope="module")
def view(spec_quarter):
    return LevyView(spec_quarter)


def compound_poisson_var_A1(terms=60):
    # A(1) = gamma(N, scale 2) - 1 with N ~ Poisson(1/2): E[G^2 | N] = 4N + 4N^2
    n = np.arange(terms)
    pmf = stats.poisson.pmf(n, 0.5)
    second = np.sum(pmf * (4 * n + 4 * n * n))
    first = np.sum(pmf * 2 * n)
    return second - first**2


def test_view_validation(spec_quarter):
    with pytest.raises(ValueError):
        LevyView(spec_quarter, k_used=0)
    with pytest.raises(ValueError):
        LevyView(spec_quarter, k_used=201)
    v = LevyView(spec_quarter, k_used=50)
    assert v.tail_sq == pytest.approx(spec_quarter.tail_var + np.sum(spec_quarter.lambdas[50:] ** 2))
    assert not LevyView(RosenblattSpec(1, 0.25, None, [0.5, 0.1])).weyl_tail


def test_density_positive_and_domain(view):
    assert np.all(levy_density(view, np.array([1e-4, 1.0, 10.0])) > 0)
    with pytest.raises(ValueError):
        levy_density(view, 0.0)


def test_density_is_sum_of_exponentials():
    spec = RosenblattSpec(1, 0.25, None, [0.6, 0.2], 0.0)
    v = LevyView(spec)
    u = 0.7
    assert levy_density(v, u) == pytest.approx((math.exp(-u / 1.2) + math.exp(-u / 0.4)) / (2 * u), rel=1e-15)


def test_large_u_asymptotics(view):
    lam = view.lambdas
    # beyond this point the k >= 2 terms are negligible next to the first
    u = max(40 * lam[1] * lam[0] / (lam[0] - lam[1]) * math.log(view.k_used), 20 * lam[0])
    ratio = levy_density(view, u) * 2 * u * math.exp(u / (2 * lam[0]))
    assert ratio == pytest.approx(1.0, rel=0.02)


def test_small_u_slope(view):
    u = np.geomspace(1e-5, 1e-3, 30)
    slope = np.polyfit(np.log(u), np.log(levy_density(view, u)), 1)[0]
    target = (0.25 - 2) / (1 - 0.25)
    assert target == pytest.approx(-7 / 3)
    assert slope == pytest.approx(target, rel=0.05)


def test_truncated_sum_alone_misses_small_u_law(spec_quarter):
    # without the Weyl tail the finite sum behaves like K / (2u) near 0
    v = LevyView(spec_quarter, weyl_tail=False)
    u = np.geomspace(1e-5, 1e-3, 30)
    slope = np.polyfit(np.log(u), np.log(levy_density(v, u)), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.01)


def test_second_moment_identity(view, spec_quarter):
    assert levy_moment(view, 2) == pytest.approx(spec_quarter.kappa2, rel=5e-3)
    v = LevyView(spec_quarter, weyl_tail=False)
    assert levy_moment(v, 2) == pytest.approx(2 * np.sum(spec_quarter.lambdas**2), rel=5e-3)


def test_self_decomposability_monotone(view):
    u = np.geomspace(1e-4, 60, 400)
    q = levy_density(view, u)
    assert np.all(np.diff(u * q) < 0)
    assert np.all(np.diff(q / u) < 0)


def divided_differences(x, f, order):
    out = [f]
    for n in range(1, order + 1):
        prev = out[-1]
        out.append((prev[1:] - prev[:-1]) / (x[n:] - x[:-n]))
    return out


def test_complete_monotonicity_of_u_q(view):
    u = np.geomspace(1e-3, 20, 40)
    h = u * levy_density(view, u)
    for n, dd in enumerate(divided_differences(u, h, 4)):
        assert np.all((-1) ** n * dd > 0), n


def test_thorin_atoms():
    atoms = thorin_atoms(LevyView(RosenblattSpec(1, 0.25, None, [0.6, 0.2])))
    assert atoms[0][0] == pytest.approx(1 / 1.2)
    assert atoms[0][1] == 0.5
    merged = thorin_atoms(LevyView(RosenblattSpec(1, 0.25, None, [0.5, 0.5, 0.2])))
    assert merged == [(1.0, 1.0), (2.5, 0.5)]


def test_thorin_laplace_transform(spec_quarter):
    v = LevyView(spec_quarter, weyl_tail=False)
    atoms = thorin_atoms(v)
    locs = np.array([a for a, _ in atoms])
    assert np.all(np.diff(locs) > 0)
    for u in (0.01, 0.3, 4.0):
        lt = sum(m * math.exp(-y * u) for y, m in atoms)
        assert u * levy_density(v, u) == pytest.approx(lt, rel=1e-12)


def test_background_process_oracle(view, spec_quarter):
    assert compound_poisson_var_A1() == pytest.approx(4.0, rel=1e-12)
    assert sample_background_levy(view, 0.0, seed=1) == 0.0
    z = sample_background_levy(view, 1.0, seed=2, size=10**5)
    var = background_levy_variance(view, 1.0)
    assert var == pytest.approx(compound_poisson_var_A1() * (np.sum(view.lambdas**2) + view.tail_sq))
    assert abs(z.mean()) < 3 * math.sqrt(var / z.size)
    assert z.var() == pytest.approx(var, rel=0.02)
    # the OU integral carries half of the unit-time variance
    assert var * 0.5 == pytest.approx(spec_quarter.kappa2, rel=1e-12)


def test_ou_degenerate_path():
    lam = np.array([0.5, 0.2])
    empty = np.array([], int)
    val = ou_integral(lam, empty, np.array([]), np.array([]), horizon=20.0, step=1e-2)
    drift = 1e-2 * np.sum(np.exp(-(np.arange(2000) + 0.5) * 1e-2))
    assert val == pytest.approx(-0.7 * drift, rel=1e-14)
    assert val == pytest.approx(-0.7 * (1 - math.exp(-20)), rel=1e-4)


def test_ou_single_jump_weight():
    val = ou_integral([0.5], [0], [1.234], [3.0], horizon=20.0, step=1e-2)
    assert val + 0.5 * (1 - math.exp(-20)) == pytest.approx(0.5 * 3.0 * math.exp(-1.235), rel=1e-4)


def test_ou_validation(view):
    with pytest.raises(ValueError):
        sample_ou_stationary(view, 10, horizon=10.0, seed=0)
    with pytest.raises(ValueError):
        sample_ou_stationary(view, 10, step=0.05, seed=0)


def test_ou_variance(view, spec_quarter):
    draws = sample_ou_stationary(view, 10**5, seed=3, workers=4)
    assert abs(draws.mean()) < 3 * math.sqrt(spec_quarter.kappa2 / draws.size)
    assert draws.var() == pytest.approx(spec_quarter.kappa2, rel=0.03)


def test_ou_matches_series_sampler(view, spec_quarter):
    ou = sample_ou_stationary(view, 10**4, seed=4)
    ref = sample(spec_quarter, 10**6, seed=5)
    assert stats.ks_2samp(ou, ref).statistic <= 0.05


def test_ou_worker_independent(view):
    a = sample_ou_stationary(view, 1500, seed=6, workers=1)
    b = sample_ou_stationary(view, 1500, seed=6, workers=3)
    assert np.array_equal(a, b)


def test_power_series_small_x(view):
    c = 1 / (2 * view.lambdas)
    u = math.log(1e3 * view.k_used) / (c[1] - c[0])
    x = math.exp(-u)
    assert power_series_G(view, x) / x ** c[0] == pytest.approx(1.0, rel=0.02)


def test_power_series_near_one(view):
    a = 1 - 0.25
    C = weyl_prefactor(view.spec.domain, 0.25)
    limit = special.gamma(1 / a + 1) * (2 * C) ** (1 / a)
    x = 1 - 1e-6
    assert power_series_G(view, x) * (1 - x) ** (1 / a) == pytest.approx(limit, rel=0.1)
    with pytest.raises(ValueError):
        power_series_G(view, 1.0)


def test_power_series_is_two_u_q(view):
    u = np.array([0.01, 0.5, 3.0])
    assert np.allclose(power_series_G(view, np.exp(-u)), 2 * u * levy_density(view, u), rtol=1e-12)
