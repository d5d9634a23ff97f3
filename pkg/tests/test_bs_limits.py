from fractions import Fraction

import pytest

from mtlab.bs_limits import (ball_statistics, barbell_graph, bs_distance,
                             bs_distance_rows, limit_diagnostic, torus_graph,
                             total_variation, wilson_interval)
from mtlab.graphs_core import (GraphGenerator, canonical_code, cycle_graph,
                               path_graph, star_graph)
from mtlab.mass_transport import uniform_root_measure

LINE = GraphGenerator("integer_line")
GRID = GraphGenerator("grid2d")


def test_cycle_statistics_collapse_to_one_code():
    stats = ball_statistics(cycle_graph(10), 2)
    assert stats.freqs == {canonical_code(path_graph(5, root=2)): Fraction(1)}


def test_path_statistics_split_ends_and_interior():
    stats = ball_statistics(path_graph(4), 1)
    assert sorted(stats.freqs.values()) == [Fraction(1, 2), Fraction(1, 2)]


def test_generator_statistics_are_point_masses():
    for R in (1, 2, 3):
        stats = ball_statistics(LINE, R)
        assert list(stats.freqs.values()) == [Fraction(1)]
    with pytest.raises(ValueError):
        ball_statistics(GraphGenerator("marked_line"), 1)


def test_measure_input_matches_graph_input():
    G = star_graph(3)
    a = ball_statistics(G, 1)
    b = ball_statistics(uniform_root_measure(G), 1)
    assert a.freqs == b.freqs


def test_distance_identity_and_long_cycles():
    mu = cycle_graph(10)
    assert bs_distance(mu, mu, 3) == 0
    assert bs_distance(cycle_graph(10), LINE, 3) == 0
    assert bs_distance(cycle_graph(8), LINE, 3) == 0


def test_triangle_against_line_matches_hand_sum():
    assert bs_distance(cycle_graph(3), LINE, 2) == Fraction(3, 4)
    assert bs_distance(cycle_graph(3), LINE, 3) == Fraction(7, 8)
    rows = bs_distance_rows(cycle_graph(3), LINE, 2)
    assert [r["tv"] for r in rows] == [1, 1]
    assert [r["contribution"] for r in rows] == [Fraction(1, 2), Fraction(1, 4)]


def test_square_against_line_differs_from_radius_two_on():
    # radius-1 balls agree (a path of three, center root); larger ones wrap
    assert bs_distance(cycle_graph(4), LINE, 3) == Fraction(3, 8)


def test_cycle_family_diagnostic():
    fam = [cycle_graph(n) for n in (4, 8, 16, 32)]
    rows = limit_diagnostic(fam, LINE, 3)
    assert [r["distance"] for r in rows] == [Fraction(3, 8), 0, 0, 0]
    assert [r["size"] for r in rows] == [4, 8, 16, 32]


def test_torus_family_diagnostic():
    fam = [torus_graph(n) for n in (3, 6, 12)]
    rows = limit_diagnostic(fam, GRID, 2)
    dists = [r["distance"] for r in rows]
    assert dists[0] > 0
    assert dists[1] == 0
    assert dists[2] == 0


def test_barbell_distance_decreases_with_size():
    d4 = bs_distance(barbell_graph(4), GRID, 2)
    d8 = bs_distance(barbell_graph(8), GRID, 2)
    assert d4 > d8 > 0


def test_monte_carlo_tracks_exact():
    stats = ball_statistics(cycle_graph(10), 2, mc_samples=2000, seed=5)
    assert list(stats.freqs.values()) == [1.0]
    assert stats.n_samples == 2000

    mc = ball_statistics(path_graph(4), 1, mc_samples=20000, seed=9)
    for f in mc.freqs.values():
        assert abs(f - 0.5) < 0.02
    lo, hi = next(iter(mc.intervals.values()))
    assert lo < 0.5 < hi

    with pytest.raises(ValueError):
        ball_statistics(path_graph(4), 1, mc_samples=100)   # seed missing


def test_mc_distance_close_to_exact():
    exact = bs_distance(cycle_graph(3), LINE, 2)
    noisy = bs_distance(cycle_graph(3), LINE, 2, mc_samples=5000, seed=3)
    assert abs(noisy - float(exact)) < 0.02


def test_metric_axioms_on_small_corpus():
    corpus = [cycle_graph(3), cycle_graph(6), path_graph(4),
              star_graph(3), uniform_root_measure(path_graph(5))]
    for a in corpus:
        for b in corpus:
            dab = bs_distance(a, b, 3)
            assert dab == bs_distance(b, a, 3)
            for c in corpus:
                assert bs_distance(a, c, 3) <= dab + bs_distance(b, c, 3)


def test_wilson_interval_brackets_estimate():
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert 0 <= lo and hi <= 1


def test_reproducible_sampling():
    a = ball_statistics(barbell_graph(4), 2, mc_samples=5000, seed=17)
    b = ball_statistics(barbell_graph(4), 2, mc_samples=5000, seed=17)
    assert a.freqs == b.freqs
