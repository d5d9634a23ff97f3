import math

import numpy as np
import pytest
from scipy import stats

from mtlab.flows_unimodularity import (
    OneManifoldMeasure,
    TorusDensity,
    UnitTangentSample,
    binned_pushforward_gap,
    defect_noise_scale,
    exact_lift_bin_masses,
    flow,
    invariance_defect,
    m1_mtp_sides,
    uniform_lift,
)


def perturbed():
    return TorusDensity(lambda x, y: 1.0 + 0.5 * np.cos(2 * np.pi * x))


# ---------------------------------------------------------------------------
# densities and samples

def test_density_rejects_negative():
    with pytest.raises(ValueError):
        TorusDensity(lambda x, y: np.cos(2 * np.pi * x))


def test_density_normalizes():
    mu = TorusDensity(lambda x, y: 3.0 * np.ones_like(np.asarray(x, float)))
    assert mu.density(0.2, 0.9) == pytest.approx(1.0, abs=1e-12)
    assert mu.total_mass() == pytest.approx(1.0, abs=1e-9)


def test_perturbed_density_integrates_to_one():
    assert perturbed().total_mass() == pytest.approx(1.0, abs=1e-6)


def test_unit_tangent_sample_ranges():
    UnitTangentSample(0.0, 0.999, 6.28)
    with pytest.raises(ValueError):
        UnitTangentSample(1.0, 0.5, 1.0)
    with pytest.raises(ValueError):
        UnitTangentSample(0.5, -0.1, 1.0)
    with pytest.raises(ValueError):
        UnitTangentSample(0.5, 0.5, 2.0 * math.pi)


# ---------------------------------------------------------------------------
# the flow itself

def test_flow_identity_and_wrap():
    s = UnitTangentSample(0.25, 0.5, 0.0)
    t0 = flow(s, 0.0)
    assert (t0.x, t0.y, t0.theta) == (s.x, s.y, s.theta)
    wrapped = flow(s, 1.0)     # full wrap along the x axis
    assert (wrapped.x, wrapped.y) == pytest.approx((s.x, s.y), abs=1e-12)


def test_flow_composition_law():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        s = UnitTangentSample(float(rng.random()), float(rng.random()),
                              float(rng.random() * 2 * np.pi))
        a = flow(flow(s, 0.7), 0.3)
        b = flow(s, 1.0)
        assert abs(a.x - b.x) <= 1e-12
        assert abs(a.y - b.y) <= 1e-12
        assert a.theta == b.theta


# ---------------------------------------------------------------------------
# uniform lift sampling

def test_lift_directions_uniform_even_for_peaked_density():
    bump = TorusDensity(
        lambda x, y: (1.0 + np.cos(2 * np.pi * x)) ** 8
        * (1.0 + np.cos(2 * np.pi * y)) ** 8)
    _, _, theta = uniform_lift(bump).sample_arrays(100_000, seed=2)
    counts, _ = np.histogram(theta, bins=12, range=(0.0, 2 * np.pi))
    expected = 100_000 / 12.0
    stat = float(((counts - expected) ** 2 / expected).sum())
    assert stats.chi2.sf(stat, 11) > 1e-3


def test_lift_footpoint_marginal_matches_density():
    xs, _, _ = uniform_lift(perturbed()).sample_arrays(100_000, seed=4)
    cdf = lambda x: x + np.sin(2 * np.pi * x) / (4 * np.pi)
    assert stats.kstest(xs, cdf).pvalue > 1e-3


# ---------------------------------------------------------------------------
# invariance defect

def test_defect_requires_seed_and_enough_samples():
    with pytest.raises(ValueError):
        invariance_defect(TorusDensity.uniform(), 0.3, n=200_000)
    with pytest.raises(ValueError):
        invariance_defect(TorusDensity.uniform(), 0.3, n=10_000, seed=1)


def test_uniform_lift_is_flow_invariant():
    uni = TorusDensity.uniform()
    scale = defect_noise_scale(uni, n=200_000)
    for t in (0.1, 0.37, 1.7):
        d = invariance_defect(uni, t, n=200_000, seed=7)
        assert d < 4.0 * scale
        assert d < 0.02


def test_exact_bin_masses_sum_to_one():
    masses = exact_lift_bin_masses(perturbed())
    assert masses.sum() == pytest.approx(1.0, abs=1e-9)
    uni = exact_lift_bin_masses(TorusDensity.uniform())
    assert np.allclose(uni, 1.0 / uni.size)


def test_perturbed_density_defect_beats_quadrature_bound():
    mu = perturbed()
    lb = binned_pushforward_gap(mu, 0.37)
    d = invariance_defect(mu, 0.37, n=200_000, seed=7)
    assert lb > 0.1
    assert d > lb


def test_oblique_directions_detect_time_one_shift():
    # axis-aligned directions wrap exactly at t = 1; the full-angle
    # statistic still sees the non-invariance
    mu = perturbed()
    lb = binned_pushforward_gap(mu, 1.0)
    d = invariance_defect(mu, 1.0, n=200_000, seed=7)
    assert lb > 0.1
    assert d > lb


def test_uniform_binned_gap_vanishes():
    assert binned_pushforward_gap(TorusDensity.uniform(), 0.37) <= 1e-12


# ---------------------------------------------------------------------------
# rooted 1-manifolds

def test_one_manifold_measure_validation():
    OneManifoldMeasure([(1.0, 0.5), (math.inf, 0.5)])
    with pytest.raises(ValueError):
        OneManifoldMeasure([])
    with pytest.raises(ValueError):
        OneManifoldMeasure([(1.0, 0.7)])
    with pytest.raises(ValueError):
        OneManifoldMeasure([(0.0, 1.0)])
    with pytest.raises(ValueError):
        OneManifoldMeasure([(1.0, 1.5), (2.0, -0.5)])


def test_m1_indicator_on_unit_circle():
    nu = OneManifoldMeasure([(1.0, 1.0)])
    f = lambda x, y: np.where(np.asarray(y) <= 0.5, 1.0, 0.0)
    left, right, gap = m1_mtp_sides(nu, f, h=1e-3)
    assert left == pytest.approx(1.0, abs=1e-9)
    assert gap <= 1e-3 + 1e-12


def test_m1_constant_kernel_exact():
    f = lambda x, y: np.ones_like(np.asarray(y, dtype=float))
    for x in (1.0, 2.5):
        left, right, gap = m1_mtp_sides(OneManifoldMeasure([(x, 1.0)]), f)
        assert left == pytest.approx(2.0 * x, abs=1e-12)
        assert gap <= 1e-12


def test_m1_gap_first_order_in_resolution():
    nu = OneManifoldMeasure([(1.0, 1.0)])
    c = 1.0 / math.e
    f = lambda x, y: np.where(np.asarray(y) <= c, 1.0, 0.0)
    for h in (1e-2, 1e-3, 1e-4):
        _, _, gap = m1_mtp_sides(nu, f, h=h)
        # one boundary cell on each arc: the error is a definite fraction of h
        frac = (c / h) - math.floor(c / h)
        assert gap == pytest.approx(h * abs(2.0 * frac - 1.0), abs=5e-9)
        assert 0.3 * h <= gap <= h


def test_m1_mixture_is_linear():
    f = lambda x, y: np.exp(-np.asarray(y, dtype=float))
    lA, rA, _ = m1_mtp_sides(OneManifoldMeasure([(1.0, 1.0)]), f, h=1e-3)
    lB, rB, _ = m1_mtp_sides(OneManifoldMeasure([(2.5, 1.0)]), f, h=1e-3)
    l2, r2, _ = m1_mtp_sides(
        OneManifoldMeasure([(1.0, 0.6), (2.5, 0.4)]), f, h=1e-3)
    assert l2 == pytest.approx(0.6 * lA + 0.4 * lB, abs=1e-12)
    assert r2 == pytest.approx(0.6 * rA + 0.4 * rB, abs=1e-12)


def test_m1_line_needs_bounded_support():
    nu = OneManifoldMeasure([(math.inf, 1.0)])
    f = lambda x, y: np.where(np.asarray(y) <= 0.5, 1.0, 0.0)
    with pytest.raises(ValueError):
        m1_mtp_sides(nu, f)
    left, right, gap = m1_mtp_sides(nu, f, h=1e-3, support=0.75)
    assert left == pytest.approx(1.0, abs=1e-9)
    assert gap <= 1e-3 + 1e-12
