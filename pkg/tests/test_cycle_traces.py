import csv
import math

import numpy as np
import pytest

from rosenblatt_lrd.cycle_traces import (
    CycleTraceEstimate,
    cycle_trace_mc,
    cycle_trace_spectral,
    weyl_tail_power_sum,
    write_traces_csv,
)
from rosenblatt_lrd.domains import Annulus, Ball, Box, Interval, UnionOfBalls
from rosenblatt_lrd.errors import ParameterRangeError
from rosenblatt_lrd.riesz_spectrum import RieszConfig, eigenvalues, trace_squared


@pytest.fixture(scope="module")
def spec_1d():
    return eigenvalues(RieszConfig(Interval(0, 1), 0.25, 2000), 400)


def test_estimate_contract():
    with pytest.raises(ValueError):
        CycleTraceEstimate(1, 1.0)
    e = CycleTraceEstimate(3, 2.5, 0.1, "mc")
    assert float(e) == 2.5


def test_mc_validation():
    with pytest.raises(ParameterRangeError):
        cycle_trace_mc(Interval(0, 1), 0.5, 2, n=10**4)
    with pytest.raises(ValueError):
        cycle_trace_mc(Interval(0, 1), 0.25, 1, n=10**4)
    with pytest.raises(ValueError):
        cycle_trace_mc(Interval(0, 1), 0.25, 2, n=100)


def test_mc_m2_matches_closed_form():
    est = cycle_trace_mc(Interval(0, 1), 0.25, 2, n=10**6, seed=3)
    assert est.method == "mc"
    assert abs(est.value - 8 / 3) < 3 * est.stderr


def test_mc_independent_of_workers():
    a = cycle_trace_mc(Box((1.0, 1.0)), 0.4, 3, n=3 * 10**5, seed=9, workers=1)
    b = cycle_trace_mc(Box((1.0, 1.0)), 0.4, 3, n=3 * 10**5, seed=9, workers=3)
    assert a == b


def test_mc_small_alpha_limit():
    # c_3 -> |D|^3 = 1 as alpha -> 0; first order 1 + 3 alpha E[-log|U - V|] = 1 + 4.5 alpha
    est = cycle_trace_mc(Interval(0, 1), 0.01, 3, n=10**6, seed=1)
    assert abs(est.value - 1.045) < 3 * est.stderr + 2e-3
    est0 = cycle_trace_mc(Interval(0, 1), 1e-4, 3, n=10**5, seed=1)
    assert est0.value == pytest.approx(1.0, abs=1e-3)


def test_weyl_tail_is_hurwitz_zeta():
    # direct summation plus integral remainder as an independent oracle
    C, p, m, start = 0.7, 0.75, 3, 400
    k = np.arange(start + 1, 10**6 + 1, dtype=float)
    direct = np.sum((C * k**-p) ** m)
    s = m * p
    remainder = C**m * (10**6 + 0.5) ** (1 - s) / (s - 1)
    assert weyl_tail_power_sum(C, p, m, start) == pytest.approx(direct + remainder, rel=1e-9)
    with pytest.raises(ParameterRangeError):
        weyl_tail_power_sum(C, 0.5, 2, 10)


def test_spectral_m2_within_one_percent(spec_1d):
    est = cycle_trace_spectral(spec_1d, 2)
    assert est.method == "spectral" and est.stderr == 0.0
    assert est.value == pytest.approx(8 / 3, rel=1e-2)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_spectral_agrees_with_mc_1d(spec_1d, m):
    s = cycle_trace_spectral(spec_1d, m)
    mc = cycle_trace_mc(Interval(0, 1), 0.25, m, n=10**6, seed=100 + m)
    assert abs(s.value - mc.value) < 3 * mc.stderr


def test_power_sum_domination(spec_1d):
    ev = spec_1d.eigenvalues
    for m in range(2, 8):
        assert np.sum(ev ** (m + 1)) <= ev[0] * np.sum(ev**m)
        assert cycle_trace_spectral(spec_1d, m).value > 0


DOMAINS_2D = {
    "box": Box((1.0, 1.0)),
    "ball": Ball((0.0, 0.0), 1.0),
    "annulus": Annulus((0.0, 0.0), 0.5, 1.0),
    "union": UnionOfBalls((Ball((-1.0, 0.0), 1.0), Ball((1.0, 0.0), 1.0))),
}


@pytest.mark.parametrize("name", ["interval"] + sorted(DOMAINS_2D))
def test_mc_and_spectral_agree_every_variant(name):
    dom = Interval(0, 1) if name == "interval" else DOMAINS_2D[name]
    alpha = 0.2 * dom.dim
    res = 2000 if dom.dim == 1 else 100
    spec = eigenvalues(RieszConfig(dom, alpha, res), 400)
    for m in (2, 3, 4, 5):
        s = cycle_trace_spectral(spec, m)
        mc = cycle_trace_mc(dom, alpha, m, n=10**6, seed=[17, m], workers=4)
        assert abs(s.value - mc.value) < 3 * mc.stderr, (m, s.value, mc.value, mc.stderr)


@pytest.mark.parametrize("name", sorted(DOMAINS_2D))
def test_mc_m2_equals_trace_squared(name):
    dom = DOMAINS_2D[name]
    tr = trace_squared(dom, 0.6, n=10**6, seed=5)
    mc = cycle_trace_mc(dom, 0.6, 2, n=10**6, seed=6)
    err = math.hypot(tr.stderr, mc.stderr)
    assert abs(tr.value - mc.value) < 3 * err


def test_write_csv(tmp_path, spec_1d):
    path = tmp_path / "traces.csv"
    ests = [cycle_trace_spectral(spec_1d, 2), CycleTraceEstimate(3, 3.6, 0.01, "mc")]
    write_traces_csv(path, ests)
    rows = list(csv.DictReader(open(path)))
    assert [r["method"] for r in rows] == ["spectral", "mc"]
    assert float(rows[0]["value"]) == ests[0].value
