"""Acceptance criteria 1-13, one PASS/FAIL line each.

The slow ones (Bessel oracle at 1e5 paths, return decay at 1e5 traces) take
several minutes on one core.  Run with ``pytest tests/test_acceptance.py -s``
to see the lines as they come; they are also repeated in the terminal
summary.
"""

import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import brentq

from loewner_lab import (
    Event,
    chordal_forward,
    concat_consistency,
    dirichlet_energy,
    exact_hit_probability,
    hausdorff_distance,
    make_driver,
    radial_forward,
    rate_experiment,
    return_prob_experiment,
    rn_martingale_check,
    self_intersects,
    sup_metric,
    unparam_metric,
    unzip_curve,
)
from loewner_lab import cli
from loewner_lab.bessel import bessel_hit_ensemble
from loewner_lab.chordal import hcap_of_polyline
from loewner_lab.drivers import resample_driver, uniform_times
from loewner_lab.experiments import cone_bound, cone_check
from loewner_lab.geometry import trace_cloud


def random_pl_driver(rng, pieces=16, energy_max=16.0):
    """Piecewise-linear driver on [0, 1] with dyadic knots and energy in (0.5, energy_max]."""
    t = np.linspace(0.0, 1.0, pieces + 1)
    s = rng.normal(size=pieces)
    s *= math.sqrt(rng.uniform(0.5, energy_max) / (0.5 * np.sum(s**2) / pieces))
    return make_driver(t, np.concatenate(([0.0], np.cumsum(s / pieces))))


def test_01_zero_driver_exact(report):
    d = make_driver(uniform_times(4.0, 64), np.zeros(65))
    g = chordal_forward(d)
    err = 0.0
    for t in (0.25, 1.0, 4.0):
        k = int(np.argmin(np.abs(g.cap_times - t)))
        assert g.cap_times[k] == t
        err = max(err, abs(g.points[k] - 2j * math.sqrt(t)))
    assert report(1, err < 1e-10, f"zero-driver tip error {err:.2e} (< 1e-10)")


def test_02_round_trip_order(report):
    rng = np.random.default_rng(20)
    levels = (256, 512, 1024)
    worst_order, monotone = math.inf, True
    for _ in range(20):
        d = random_pl_driver(rng)
        assert dirichlet_energy(d).value <= 16.0
        errs = []
        for n in levels:
            back = unzip_curve(chordal_forward(resample_driver(d, n)))
            errs.append(float(np.max(np.abs(back.values - d(back.times)))))
        monotone &= errs[0] > errs[1] > errs[2]
        worst_order = min(worst_order, math.log2(errs[0] / errs[2]) / 2)
    ok = monotone and worst_order >= 0.4
    assert report(2, ok, f"20 drivers, monotone={monotone}, worst empirical order {worst_order:.3f} (>= 0.4)")


def test_03_hcap_segment(report):
    pts = 1j * np.linspace(0.0, 1.0, 1025)
    h = hcap_of_polyline(pts)
    assert report(3, abs(h - 0.5) <= 1e-3, f"hcap([0, i]) = {h:.12f} at 1024 steps (0.5 +- 1e-3)")


def test_04_bessel_oracle(report):
    est = bessel_hit_ensemble(2.0, 2.0, 1.0, 0.5, 100_000, dt=1e-4, seed=0)
    z = (est.p_hat - est.p_exact) / est.sigma
    ok = abs(z) <= 3.0
    assert report(4, ok, f"p_hat {est.p_hat:.5f} vs 0.5, z = {z:+.2f} (|z| <= 3), escaped {est.escaped}")


def test_05_lemma_inequality(report):
    # (delta/|x|)^{2a/kappa - 1} <= e^{-M/kappa} with delta = e^{-M/a}, a = 2:
    # both sides are powers of e, so compare exponents as rationals
    a = Fraction(2)
    bad = []
    for M in (1, 2, 4):
        for kappa in (Fraction(1, 2), Fraction(1), Fraction(2)):
            lhs_exp = -Fraction(M) / a * (2 * a / kappa - 1)
            rhs_exp = -Fraction(M) / kappa
            if lhs_exp > rhs_exp:
                bad.append((M, kappa))
            # floating evaluation agrees on the ordering
            p = exact_hit_probability(2.0, float(kappa), 1.0, math.exp(-M / 2.0))
            assert (p <= math.exp(-M / float(kappa)) * (1 + 1e-15)) == (lhs_exp <= rhs_exp)
    assert report(5, not bad, f"9 grid points, violations {len(bad)}")


def test_06_radial_zero_tip(report):
    beta_ref = brentq(lambda b: 4 * b / (1 + b) ** 2 - math.exp(-1.0), 1e-9, 1.0)
    d = make_driver(uniform_times(1.0, 4096), np.zeros(4097), "radial")
    tip = radial_forward(d).points[-1]
    beta = abs(tip)
    resid = 4 * beta / (1 + beta) ** 2 - math.exp(-1.0)
    ok = abs(resid) <= 1e-4 and abs(tip.imag) < 1e-12
    assert report(6, ok, f"beta {beta:.9f} (root {beta_ref:.9f}), residual {resid:.2e} (<= 1e-4)")


def test_07_rn_martingale(report):
    res = rn_martingale_check(2.0, 0.5, 0.3, 10_000, seed=0, n_steps=500)
    z = (res["mean"] - 1.0) / res["sigma"]
    assert report(7, res["pass"], f"mean weight {res['mean']:.4f} +- {res['sigma']:.4f}, z = {z:+.2f} (|z| <= 3)")


def test_08_simplicity_sweep(report):
    rng = np.random.default_rng(8)
    hits = 0
    for _ in range(100):
        d = resample_driver(random_pl_driver(rng), 1024)
        assert dirichlet_energy(d).value <= 16.0 + 1e-9
        hits += self_intersects(chordal_forward(d))
    assert report(8, hits == 0, f"100 traces at 1024 steps, self-intersections {hits}")


def test_09_metric_lattice(report):
    rng = np.random.default_rng(9)
    traces = [chordal_forward(resample_driver(random_pl_driver(rng), 256)) for _ in range(60)]
    order_viol = 0
    for _ in range(100):
        a, b = rng.choice(len(traces), 2, replace=False)
        order_viol += unparam_metric(traces[a], traces[b]) > sup_metric(traces[a], traces[b])
    metrics = {
        "sup": sup_metric,
        "frechet": unparam_metric,
        "hausdorff": lambda x, y: hausdorff_distance(trace_cloud(x), trace_cloud(y)),
    }
    tri_viol = sym_viol = 0
    for _ in range(1000):
        a, b, c = (traces[i] for i in rng.choice(len(traces), 3, replace=False))
        for f in metrics.values():
            ab, bc, ac = f(a, b), f(b, c), f(a, c)
            tri_viol += ac > ab + bc + 1e-12
            sym_viol += abs(ab - f(b, a)) > 1e-12
    ok = order_viol == 0 and tri_viol == 0 and sym_viol == 0
    assert report(9, ok, f"order violations {order_viol}/100, triangle {tri_viol}, symmetry {sym_viol} over 1000 triples x 3 metrics")


def test_10_return_decay(report):
    res = return_prob_experiment("chordal", 1, (2, 4), 3.0, 100_000, horizon_T=16.0, seed=0, n_steps=1024)
    hits = [r["hits"] for r in res["rows"]]
    slope = res["slope"]
    detail = f"hits {hits} of 1e5, slope {slope if slope is None else round(slope, 3)} (<= {res['slope_target']:.3f}), monotone {res['monotone']}"
    assert report(10, res["pass"], detail)


def test_11_cone_bound(report):
    theta = math.pi / 3
    est = rate_experiment(Event("cone", theta), (1.0, 0.5, 0.25), samples=20_000, n_steps=256, seed=0)
    chk = cone_check(est, theta)
    detail = (
        f"kappa {chk['kappa']}: klogp {chk['klogp']:.4f} <= {cone_bound(theta):.4f} + width {chk['width']:.4f}"
        if chk["kappa"] is not None
        else "no cell with hits"
    )
    assert report(11, chk["pass"], detail)


def test_12_concatenation(report):
    z1 = make_driver(uniform_times(0.7, 40), np.zeros(41))
    z2 = make_driver(uniform_times(1.3, 60), np.zeros(61))
    zero = concat_consistency(z1, z2)
    rng = np.random.default_rng(12)
    decreasing = True
    seq = []
    for _ in range(3):
        d1, d2 = random_pl_driver(rng, 8), random_pl_driver(rng, 8)
        disc = [concat_consistency(d1, d2, n_steps=n).discrepancy for n in (257, 513, 1025)]
        decreasing &= disc[0] > disc[1] > disc[2]
        seq.append(disc)
    ok = zero.discrepancy < 1e-8 and decreasing
    shown = ", ".join("/".join(f"{v:.1e}" for v in s) for s in seq)
    assert report(12, ok, f"zero pair {zero.discrepancy:.1e} (< 1e-8); random pairs {shown}")


def test_13_reproducibility(report, tmp_path):
    argv = ["rate", "--event", "cone", "--kappas", "1,0.5", "--samples", "1200", "--n-steps", "128", "--seed", "7"]
    digests = []
    for workers in (1, 2):
        out = tmp_path / f"w{workers}"
        args = cli.build_parser().parse_args(argv + ["--out", str(out), "--workers", str(workers)])
        cli.execute("rate", vars(args).copy(), out)
        digests.append((out / "rate.csv").read_bytes())
    full = cli.verify(tmp_path / "w1" / "manifest.json", full=True)
    cell = cli.verify(tmp_path / "w2" / "manifest.json", cell=1)
    ok = digests[0] == digests[1] and full["match"] and cell["match"]
    assert report(13, ok, f"workers 1 vs 2 identical={digests[0] == digests[1]}, full rerun match={full['match']}, cell rerun match={cell['match']}")
