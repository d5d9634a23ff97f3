import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from mtlab.graphs_core import RootedGraph, complete_graph, cycle_graph
from mtlab.poisson_rooting import (WeightedSpace, desingularization_identity,
                                   desingularization_weight,
                                   graph_automorphisms, independence_audit,
                                   poisson_audit, presence_probability,
                                   restriction_audit, sample_poisson,
                                   stabilizer_statistics)


def test_space_validation():
    with pytest.raises(ValueError):
        WeightedSpace(["a"], [0.0])
    with pytest.raises(ValueError):
        WeightedSpace(["a", "b"], [1.0])
    with pytest.raises(ValueError):
        WeightedSpace(["a", "b"], [1.0, 2.0], automorphisms=[(1, 0)])
    X = WeightedSpace(["a", "b"], [1.0, 1.0], automorphisms=[(0, 1), (1, 0)])
    assert X.volume == 2.0


def test_single_point_presence_probability():
    assert abs(presence_probability(math.log(2)) - 0.5) < 1e-15
    X = WeightedSpace(["p"], [math.log(2)])
    hits = sum(1 for s in range(20000) if not sample_poisson(X, s).empty)
    assert abs(hits / 20000 - 0.5) < 0.015   # 4 sigma ~ 0.014


def test_empty_probability_multiplies_across_points():
    X = WeightedSpace(["a", "b"], [math.log(2) / 2, math.log(2) / 2])
    empties = sum(1 for s in range(20000) if sample_poisson(X, s).empty)
    assert abs(empties / 20000 - 0.5) < 0.015


def test_vanishing_intensity_gives_empty_samples():
    X = WeightedSpace(["a", "b", "c"], [1e-9, 1e-9, 1e-9])
    assert all(sample_poisson(X, s).empty for s in range(200))


def test_desingularization_values():
    assert abs(desingularization_weight(math.log(2)) - 2.0) < 1e-12
    assert abs(desingularization_weight(math.log(4 / 3)) - 4.0) < 1e-12
    assert abs(desingularization_weight(50.0) - 1.0) < 1e-12
    with pytest.raises(ValueError):
        desingularization_weight(0.0)
    with pytest.raises(ValueError):
        desingularization_weight(-1.0)


def test_desingularization_identity_exact():
    for vol in (0.1, math.log(2), 1.0, 3.7, 25.0):
        assert desingularization_identity(vol) == Fraction(1)


def test_audit_on_empty_region():
    X = WeightedSpace(["a", "b"], [1.0, 2.0])
    rep = poisson_audit(X, [], 1000, seed=1)
    assert rep["count_hist"] == {0: 1.0}
    assert rep["count_pvalue"] == 1.0


def test_audit_requires_enough_samples_and_valid_region():
    X = WeightedSpace(["a", "b"], [1.0, 2.0])
    with pytest.raises(ValueError):
        poisson_audit(X, [0], 10, seed=1)
    with pytest.raises(ValueError):
        poisson_audit(X, [0, 0], 1000, seed=1)
    with pytest.raises(ValueError):
        poisson_audit(X, [5], 1000, seed=1)


def test_audit_count_and_placement_laws():
    X = WeightedSpace(list("abcde"), [0.3, 0.2, 0.25, 0.15, 0.1])
    rep = poisson_audit(X, [0, 1, 2, 3, 4], 100000, seed=42)
    assert rep["volume"] == pytest.approx(1.0)
    assert rep["count_pvalue"] > 1e-3
    assert rep["janossy_uniformity"] > 1e-3
    # P(count = 0) within 4 binomial sigmas of 1/e
    p0 = rep["count_hist"].get(0, 0.0)
    sigma = math.sqrt(math.e ** -1 * (1 - math.e ** -1) / 100000)
    assert abs(p0 - math.exp(-1)) < 4 * sigma


def test_audit_flags_wrong_volume():
    # counts drawn at volume 2 cannot match a claimed volume under 4-sigma care:
    # simulate by auditing a region whose weights were doubled relative to the
    # reference law the test uses; here we just check the p-value machinery
    # rejects a bad fit
    X = WeightedSpace(["a"], [2.0])
    rep = poisson_audit(X, [0], 50000, seed=7)
    assert rep["count_pvalue"] > 1e-3   # correct law accepted
    from scipy import stats
    counts = np.random.default_rng(7).poisson(2.0, 50000)
    lam_wrong = 1.0
    from mtlab.poisson_rooting import _chi_square_counts
    assert _chi_square_counts(counts, lam_wrong, 50000) < 1e-6


def test_disjoint_regions_uncorrelated():
    X = WeightedSpace(list("abcdef"), [0.5, 0.4, 0.3, 0.2, 0.6, 0.7])
    rep = independence_audit(X, [0, 1, 2], [3, 4, 5], 50000, seed=3)
    assert abs(rep["correlation"]) < rep["four_sigma"]
    with pytest.raises(ValueError):
        independence_audit(X, [0, 1], [1, 2], 1000, seed=3)


def test_restriction_matches_subspace_process():
    X = WeightedSpace(list("abcd"), [0.8, 0.3, 0.5, 1.2])
    rep = restriction_audit(X, [1, 3], 40000, seed=5)
    assert rep["pvalue"] > 1e-3


def test_automorphism_counts():
    assert len(graph_automorphisms(complete_graph(2))) == 2
    assert len(graph_automorphisms(cycle_graph(4))) == 8
    # branches of distinct lengths pin every vertex
    asym = RootedGraph(7, [(0, 1), (1, 2), (2, 3), (3, 4), (1, 5), (5, 6)], 0)
    assert len(graph_automorphisms(asym)) == 1
    with pytest.raises(ValueError):
        graph_automorphisms(cycle_graph(11))


def test_stabilizer_statistics_on_edge():
    rep = stabilizer_statistics(complete_graph(2), 30000, seed=9)
    # exact law: singletons have trivial stabilizer, the full pair is swapped
    p = 1 - math.exp(-1)
    q = math.exp(-1)
    z = 1 - q * q
    assert rep["exact"][1] == pytest.approx(2 * p * q / z)
    assert rep["exact"][2] == pytest.approx(p * p / z)
    assert rep["max_dev_sigma"] < 4.0
    assert rep["aut_order"] == 2


def test_stabilizer_statistics_on_square():
    rep = stabilizer_statistics(cycle_graph(4), 40000, seed=11)
    assert rep["aut_order"] == 8
    assert abs(sum(rep["exact"].values()) - 1) < 1e-12
    assert rep["max_dev_sigma"] < 4.0


def test_stabilizers_trivial_on_asymmetric_graph():
    asym = RootedGraph(7, [(0, 1), (1, 2), (2, 3), (3, 4), (1, 5), (5, 6)], 0)
    rep = stabilizer_statistics(asym, 5000, seed=13)
    assert set(rep["exact"]) == {1}
    assert set(rep["empirical"]) == {1}


def test_space_json_roundtrip():
    X = WeightedSpace(["a", "b"], [1.0, 1.0], automorphisms=[(0, 1), (1, 0)])
    Y = WeightedSpace.from_json(X.to_json())
    assert Y.points == X.points
    assert np.allclose(Y.weights, X.weights)
    assert Y.automorphisms == X.automorphisms


def test_count_ks_calibrated_and_has_power():
    # ties would sink a raw KS; the randomized transform must leave a
    # healthy p-value on correct samples
    X = WeightedSpace(["a", "b", "c"], [0.3, 0.5, 0.2])
    ps = [poisson_audit(X, [0, 1, 2], 5000, s)["ks_pvalue"]
          for s in range(6)]
    assert all(p > 1e-3 for p in ps)
    assert max(ps) > 0.05
    rng = np.random.default_rng(0)
    counts = rng.poisson(lam=1.3, size=5000)
    law = stats.poisson(1.0)
    u = law.cdf(counts - 1) + rng.random(5000) * law.pmf(counts)
    assert stats.kstest(u, "uniform").pvalue < 1e-6
