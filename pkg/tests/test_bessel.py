import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import solve_ivp

from loewner_lab import (
    OutOfDomain,
    bessel_hit_ensemble,
    exact_hit_probability,
    q_drift,
    simulate_bessel,
    simulate_Z,
    stay_small_bound,
    stay_small_mc,
)
from loewner_lab.bessel import bessel_terminal, lemma_hit_check, path_seeds, simulate_Z_batch


def test_exact_probability_values():
    assert exact_hit_probability(2.0, 2.0, 1.0, 0.5) == pytest.approx(0.5)
    assert exact_hit_probability(2.0, 1.0, -3.0, 3.0) == 1.0
    with pytest.raises(OutOfDomain):
        exact_hit_probability(2.0, 4.0, 1.0, 0.5)


@pytest.mark.parametrize("M", [0.5, 1, 2, 4, 8])
@pytest.mark.parametrize("kappa", [0.25, 0.5, 1, 2])
def test_lemma_bound_grid(M, kappa):
    p, bound = lemma_hit_check(2.0, kappa, M)
    assert p <= bound * (1 + 1e-15)


def test_zero_noise_limit():
    p = simulate_bessel(2.0, 0.0, 1.0, 1e-4, 1.0, seed=0)
    assert p.values[-1] == pytest.approx(math.sqrt(1 + 4.0), rel=1e-4)
    assert p.values[0] == 1.0 and p.hit_zero_at is None


def test_sign_constant_until_zero():
    for s in range(20):
        p = simulate_bessel(0.2, 1.0, 0.3, 1e-3, 2.0, seed=s)
        assert np.all(p.values[:-1] > 0) if p.hit_zero_at is not None else np.all(p.values > 0)


def test_level_records_ordered():
    p = simulate_bessel(0.2, 1.0, 1.0, 1e-3, 5.0, seed=3, levels=(0.8, 0.5, 0.2))
    rec = p.hit_level_records
    times = [rec[k] for k in sorted(rec, reverse=True) if rec[k] is not None]
    assert times == sorted(times)


def test_monotone_coupling():
    noise = np.random.default_rng(4).standard_normal(20_000)
    for x, y in ((0.2, 0.5), (0.5, 0.5001), (1.0, 3.0)):
        a = simulate_bessel(2.0, 2.0, x, 1e-4, 2.0, noise=noise)
        b = simulate_bessel(2.0, 2.0, y, 1e-4, 2.0, noise=noise)
        m = min(len(a.values), len(b.values))
        assert np.all(a.values[:m] <= b.values[:m] + 1e-12)


def test_hit_ensemble_oracle_small():
    est = bessel_hit_ensemble(2.0, 2.0, 1.0, 0.5, 4000, seed=1)
    assert abs(est.p_hat - 0.5) <= 3 * est.sigma
    assert est.bias_bound < 1e-3


def test_ensemble_deterministic():
    a = bessel_hit_ensemble(2.0, 1.5, 1.0, 0.4, 500, seed=9)
    b = bessel_hit_ensemble(2.0, 1.5, 1.0, 0.4, 500, seed=9)
    assert a == b
    np.testing.assert_array_equal(path_seeds(9, 0, 5), path_seeds(9, 0, 5))


def test_markov_time_shift():
    # X run to s then restarted for u must match X run to s + u in law
    a, kappa, s, u, m = 2.0, 1.0, 0.3, 0.4, 3000
    mid, _ = bessel_terminal(a, kappa, 1.0, s, 1e-3, path_seeds(1, 0, m))
    two, _ = bessel_terminal(a, kappa, mid, u, 1e-3, path_seeds(1, 1, m))
    one, _ = bessel_terminal(a, kappa, 1.0, s + u, 1e-3, path_seeds(1, 2, m))
    assert stats.ks_2samp(two, one).pvalue > 0.01


def test_stay_small_bound_properties():
    assert stay_small_bound(0.2, 1.0, 1.0) > 0
    vals = [stay_small_bound(e, 1.0, 1.0) for e in (0.3, 0.2, 0.1, 0.05)]
    assert vals == sorted(vals, reverse=True) and vals[-1] < 1e-100
    grid = [stay_small_bound(0.2, 1.0, k) for k in (0.25, 0.5, 1.0)]
    assert grid == sorted(grid)
    with pytest.raises(OutOfDomain):
        stay_small_bound(0.2, 1.0, 5.0)
    with pytest.raises(OutOfDomain):
        stay_small_bound(2.0, 1.0, 1.0)


def test_stay_small_mc_below_bound():
    est = stay_small_mc(2.0, 1.0, 0.05, 0.2, 1.0, 20_000, seed=0)
    assert est.p_hat <= est.bound + 3 * est.sigma


def test_q_drift():
    assert q_drift(math.pi / 2) == pytest.approx(0.0, abs=1e-15)
    assert q_drift(0.1) == pytest.approx(10.0)
    np.testing.assert_allclose(q_drift(np.array([0.1, 1.0, 2.0])), [10.0, 1.0, 2 / math.tan(2.0)])


def test_Z_small_kappa_follows_drift_ode():
    T = 1.0
    z = simulate_Z(1e-8, T, 1e-3, seed=0)
    ref = solve_ivp(lambda t, y: q_drift(y[0]), (0, T), [math.pi / 2], rtol=1e-10, atol=1e-12)
    assert abs(z.z[-1] - ref.y[0, -1]) < 1e-3


def test_Z_below_theta():
    violations = cut = 0
    for p in simulate_Z_batch(2.0, 1.0, 1e-3, master=0, samples=1000):
        violations += int(np.sum(p.z > p.theta + 1e-12))
        cut += p.cut
    assert violations == 0
    # paths whose Z gets within ~1e-7 of 0 run out of splits and stop early
    assert cut < 100
