import math
import warnings

import numpy as np
import pytest

from loewner_lab import Event, rate_experiment, return_prob_experiment, rn_martingale_check, tightness_experiment, wilson
from loewner_lab.experiments import bessel_check, cone_check, rate_cell, wilson_coverage


def test_wilson_interval():
    lo, hi = wilson(0, 100)
    assert lo == pytest.approx(0.0, abs=1e-15) and 0 < hi < 0.05
    lo, hi = wilson(50, 100)
    assert lo < 0.5 < hi and 0.5 - lo == pytest.approx(hi - 0.5)
    assert wilson(0, 0) == (0.0, 1.0)


@pytest.mark.parametrize("p", [0.02, 0.2, 0.5])
def test_wilson_coverage(p):
    assert wilson_coverage(p, samples=200, replications=2000, seed=1).coverage >= 0.93


def test_vacuous_cone():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        est = rate_experiment(Event("cone", math.pi / 2), (1.0, 0.5), samples=200, n_steps=128)
    assert all(r["p_hat"] == 1.0 and r["klogp"] == 0.0 for r in est.rows)


def test_zero_hits_flagged():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        est = rate_experiment(Event("target", r=0.01), (0.25,), samples=100, n_steps=64)
    row = est.rows[0]
    assert row["hits"] == 0 and row["klogp"] is None and row["flag"] != "ok"


def test_rate_warns_and_validates():
    with pytest.warns(UserWarning):
        rate_experiment(Event("cone"), (1.0,), samples=10, n_steps=32)
    with pytest.raises(ValueError):
        rate_experiment(Event("cone"), (0.5, 1.0), samples=1000, n_steps=32)


def test_rate_klogp_and_fit():
    est = rate_experiment(Event("cone"), (1.0, 0.5, 0.25), samples=1000, n_steps=128, seed=3)
    for r in est.rows:
        assert 0 <= r["p_hat"] <= 1 and r["ci_lo"] <= r["p_hat"] <= r["ci_hi"]
        if r["hits"]:
            assert r["klogp"] == pytest.approx(r["kappa"] * math.log(r["p_hat"]))
    assert est.extrapolation is not None and len(est.extrapolation["residuals"]) >= 2
    assert set(cone_check(est, math.pi / 3)) >= {"bound", "kappa", "pass"}


def test_workers_do_not_change_results():
    ev = Event("cone")
    a = rate_cell(ev, 0.5, 0, 1200, 64, seed=4, workers=1)
    b = rate_cell(ev, 0.5, 0, 1200, 64, seed=4, workers=2)
    assert a == b


def test_return_prob_validation_and_monotone():
    with pytest.raises(ValueError):
        return_prob_experiment("chordal", 2, (2,), 3.0, 100)
    res = return_prob_experiment("chordal", 1, (2, 3, 4), 3.0, 500, horizon_T=16.0, n_steps=256, seed=1)
    hits = [r["hits"] for r in res["rows"]]
    assert hits == sorted(hits, reverse=True)
    assert all(r["hits"] + r["no_return"] + r["not_yet"] == 500 for r in res["rows"])


def test_return_radial_runs():
    res = return_prob_experiment("radial", 1, (2,), 2.0, 50, n_steps=128, seed=0)
    row = res["rows"][0]
    assert row["hits"] + row["no_return"] + row["not_yet"] == 50


def test_rn_zero_horizon():
    res = rn_martingale_check(2.0, 0.0, 0.3, 50)
    assert res["mean"] == 1.0 and res["sigma"] == 0.0 and res["pass"]
    assert np.all(res["per_sample"]["weight"] == 1.0)


def test_rn_small_run():
    res = rn_martingale_check(2.0, 0.5, 0.3, 2000, seed=5, n_steps=200)
    assert res["pass"]
    assert res["max_weight"] <= res["bound"] * 1.01 or res["stopped_fraction"] > 0


def test_rn_variance_reported():
    v = [rn_martingale_check(2.0, 0.5, d, 1000, seed=6, n_steps=200)["variance"] for d in (0.5, 0.2)]
    assert all(x >= 0 for x in v)


def test_tightness_trends():
    rows = tightness_experiment((1.0, 0.5, 0.2, 0.0), (8, 32, 128), None, 300, 0, 512)
    freq = {(r["kappa"], r["n"]): r["freq_H"] for r in rows}
    for n in (8, 32, 128):
        assert freq[(1.0, n)] >= freq[(0.5, n)] >= freq[(0.2, n)] >= freq[(0.0, n)] == 0.0
    assert freq[(0.2, 8)] >= freq[(0.2, 32)] >= freq[(0.2, 128)]
    only = tightness_experiment((1.0, 0.5, 0.2, 0.0), (8, 32, 128), None, 300, 0, 512, only_cell=5)
    assert only[0]["viol_H"] == rows[5]["viol_H"]


def test_tightness_with_L():
    rows = tightness_experiment((0.5,), (16,), None, 20, 0, 256, eval_L=True)
    assert rows[0]["freq_L"] is not None


def test_bessel_check_small():
    res = bessel_check(samples=2000, seed=2)
    assert res["p_exact"] == 0.5 and res["hits"] + res["escaped"] <= 2000
