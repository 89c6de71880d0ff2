import math

import numpy as np
import pytest

from loewner_lab import (
    DomainViolation,
    EmptySet,
    LowerHalfPlane,
    ModeMismatch,
    ReturnEventSpec,
    chordal_forward,
    concat_consistency,
    d_D_metric,
    empty_driver,
    hausdorff_distance,
    make_driver,
    make_point_cloud,
    make_trace,
    phi_H,
    return_event_hit,
    sample_brownian_driver,
    self_intersects,
    sup_metric,
    unparam_metric,
)
from loewner_lab.drivers import resample_driver, uniform_times
from loewner_lab.geometry import polylines_intersect, segments_intersect, trace_cloud
from loewner_lab.rng import substream


def slit(T=1.0, n=64):
    t = uniform_times(T, n)
    return make_trace(2j * np.sqrt(t), t)


def test_phi_H_normalization():
    assert phi_H(0) == pytest.approx(1)
    assert phi_H(2j) == pytest.approx(0)
    assert phi_H(1j) == pytest.approx(1 / 3)
    assert phi_H(math.inf) == -1
    x = np.linspace(-50, 50, 101)
    np.testing.assert_allclose(np.abs(phi_H(x)), 1.0)
    with pytest.raises(LowerHalfPlane):
        phi_H(1 - 1j)


def test_d_D_metric():
    assert d_D_metric(0.3 + 0.2j, 0.3 + 0.2j) == 0
    assert d_D_metric(0, math.inf, "chordal") == pytest.approx(2.0)
    with pytest.raises(DomainViolation):
        d_D_metric(2.0, 0.0, "radial")
    rng = np.random.default_rng(0)
    for _ in range(200):
        a, b, c = rng.uniform(-3, 3, 3) + 1j * rng.uniform(0, 3, 3)
        assert d_D_metric(a, c, "chordal") <= d_D_metric(a, b, "chordal") + d_D_metric(b, c, "chordal") + 1e-15


def test_hausdorff_examples():
    rng = np.random.default_rng(1)
    A = make_point_cloud(0.5 * (rng.uniform(-1, 1, 50) + 1j * rng.uniform(-1, 1, 50)))
    B = make_point_cloud(0.5 * (rng.uniform(-1, 1, 70) + 1j * rng.uniform(-1, 1, 70)))
    assert hausdorff_distance(A, A) == 0
    assert hausdorff_distance(make_point_cloud([1]), make_point_cloud([1j])) == pytest.approx(math.sqrt(2))
    assert hausdorff_distance(A, B) == hausdorff_distance(B, A)
    with pytest.raises(EmptySet):
        hausdorff_distance(np.array([]), A)
    with pytest.raises(DomainViolation):
        make_point_cloud([1.5])


def test_hausdorff_downsampling_is_upper_bound():
    g = chordal_forward(sample_brownian_driver(1.0, 1.0, 3000, 2))
    h = chordal_forward(sample_brownian_driver(1.0, 1.0, 3000, 3))
    a, b = trace_cloud(g), trace_cloud(h)
    exact = hausdorff_distance(a, b, max_points=10_000)
    coarse = hausdorff_distance(a, b, max_points=500)
    assert coarse >= exact


def test_sup_metric_basics():
    g = chordal_forward(sample_brownian_driver(1.0, 1.0, 128, 4))
    assert sup_metric(g, g) == 0
    # equal on [0, 1], one extended: distance is the excursion from the frozen endpoint
    short = slit(1.0, 64)
    long = slit(2.0, 128)
    want = abs(phi_H(2j * math.sqrt(2.0)) - phi_H(2j))
    assert sup_metric(short, long) == pytest.approx(want, rel=1e-12)


def test_sup_dominates_hausdorff_and_frechet():
    rng = np.random.default_rng(5)
    for i in range(30):
        g = chordal_forward(sample_brownian_driver(rng.uniform(0.2, 2), 1.0, 128, substream(3, i)))
        h = chordal_forward(sample_brownian_driver(rng.uniform(0.2, 2), 1.0, 128, substream(4, i)))
        s = sup_metric(g, h)
        assert unparam_metric(g, h) <= s
        assert hausdorff_distance(trace_cloud(g), trace_cloud(h)) <= s + 1e-12


def test_frechet_reparameterization_and_shift():
    g = slit(1.0, 64)
    fine = make_trace(2j * np.sqrt(uniform_times(1.0, 512)), uniform_times(1.0, 512))
    # discrete alignment resolves the curve only up to its largest step
    step = np.max(np.abs(np.diff(phi_H(fine.points))))
    assert unparam_metric(g, fine) <= step
    # two parallel segments in the disk at horizontal offset 0.1
    t = uniform_times(1.0, 50)
    shifted = make_trace(np.concatenate(([1.0 + 0j], 1 - 0.5 * t[1:] + 0.1j)), t, "radial")
    base = make_trace(np.concatenate(([1.0 + 0j], 1 - 0.5 * t[1:])), t, "radial")
    assert unparam_metric(base, shifted, "E") == pytest.approx(0.1, abs=1e-12)


def test_metric_mode_mismatch():
    with pytest.raises(ModeMismatch):
        sup_metric(slit(), make_trace([1.0, 0.5], [0, 1], "radial"))


def test_self_intersects():
    assert not self_intersects(slit())
    bowtie = make_trace([0, 1j, 1 + 2j, 1 + 1j, -1 + 2j], [0, 1, 2, 3, 4])
    assert self_intersects(bowtie)
    back_to_axis = make_trace([0, 1j, 1 + 1j, 2.0], [0, 1, 2, 3])
    assert self_intersects(back_to_axis)
    assert segments_intersect(np.array([0, 1j, 2j, 1j]))


def test_polylines_intersect():
    a = np.array([0, 2j])
    assert polylines_intersect(a, np.array([-1 + 1j, 1 + 1j]))
    assert not polylines_intersect(a, np.array([1 + 1j, 2 + 1j]))


def test_return_events():
    spec = ReturnEventSpec(1, 2)
    assert return_event_hit(slit(4.0, 256), spec).status == "no-return"
    assert return_event_hit(slit(0.5, 64), spec).status == "not-yet"
    t = np.arange(5.0)
    loop = make_trace([0, 3j, 3 + 3j, 0.5 + 0.5j, 0.5 + 3j], t)
    res = return_event_hit(loop, spec)
    assert res.hit and res.entry_time < res.violation_time
    # radial: enter e^-N D, then leave the closed e^-n D
    r = make_trace([1.0, 0.05, 0.5], [0, 1, 2], "radial")
    rres = return_event_hit(r, ReturnEventSpec(1, 2, "radial"))
    assert rres.hit and rres.entry_time < rres.violation_time
    never = make_trace([1.0, 0.8, 0.6], [0, 1, 2], "radial")
    assert return_event_hit(never, ReturnEventSpec(1, 2, "radial")).status == "not-yet"


def test_return_spec_validation():
    with pytest.raises(ValueError):
        ReturnEventSpec(2, 2)
    with pytest.raises(ModeMismatch):
        return_event_hit(slit(), ReturnEventSpec(1, 2, "radial"))


def test_concat_zero_and_empty():
    z1 = make_driver(uniform_times(0.5, 32), np.zeros(33))
    z2 = make_driver(uniform_times(0.75, 48), np.zeros(49))
    assert concat_consistency(z1, empty_driver()).discrepancy == 0
    assert concat_consistency(z1, z2).discrepancy <= 1e-10
    assert concat_consistency(z1, z2, n_steps=81).discrepancy <= 1e-10


def test_concat_refinement():
    d1 = resample_driver(make_driver([0, 0.3, 0.6], [0, 0.4, -0.1]), 8)
    d2 = resample_driver(make_driver([0, 0.2, 0.5], [0, -0.3, 0.2]), 8)
    coarse = concat_consistency(d1, d2, n_steps=513).discrepancy
    fine = concat_consistency(d1, d2, n_steps=1025).discrepancy
    assert fine < coarse
    exact = concat_consistency(d1, d2)
    assert exact.passed and exact.discrepancy < 1e-8
