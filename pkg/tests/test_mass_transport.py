from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtlab.graphs_core import (GraphGenerator, RootedGraph, canonical_code,
                               complete_graph, cycle_graph,
                               doubly_rooted_ball_code, path_graph, star_graph)
from mtlab.mass_transport import (Atom, FiniteGroup, RootedDistribution,
                                  TransportKernel, cover_measure, hash_kernel,
                                  indicator_kernel, is_unimodular,
                                  laplacian_selfadjoint_gap, mtp_sides,
                                  no_core_audit, restrict_saturated,
                                  uniform_root_measure)


def neighbor_kernel():
    # pays 1 to each neighbor of the first root
    return TransportKernel(1, lambda m: Fraction(1) if m.second_root != m.graph.root else Fraction(0))


def test_uniform_root_measure_merges_orbits():
    mu = uniform_root_measure(complete_graph(2))
    assert len(mu.atoms) == 1
    assert mu.atoms[0].weight == 1

    mu = uniform_root_measure(path_graph(3))
    weights = sorted(a.weight for a in mu.atoms)
    assert weights == [Fraction(1, 3), Fraction(2, 3)]

    mu = uniform_root_measure(star_graph(3))
    by_degree = {a.graph.degree(a.graph.root): a.weight for a in mu.atoms}
    assert by_degree == {3: Fraction(1, 4), 1: Fraction(3, 4)}


def test_mtp_exact_on_uniform_measures():
    left, right, gap = mtp_sides(uniform_root_measure(complete_graph(2)), neighbor_kernel())
    assert (left, right, gap) == (1, 1, 0)

    # expected degree of a 3-path under a uniform root
    left, right, gap = mtp_sides(uniform_root_measure(path_graph(3)), neighbor_kernel())
    assert left == right == Fraction(4, 3)
    assert gap == 0


def test_mtp_indicator_balances_on_uniform_root():
    P3 = path_graph(3, root=1)
    code = doubly_rooted_ball_code(P3, 0, 1, 1)   # edge-ball at an end, center marked
    f = indicator_kernel(code, 1)
    left, right, gap = mtp_sides(uniform_root_measure(P3), f)
    assert left == right == Fraction(2, 3)
    assert gap == 0


def test_mtp_detects_center_rooted_path():
    P3 = path_graph(3, root=1)
    mu = RootedDistribution([Atom(P3, Fraction(1))])
    code = doubly_rooted_ball_code(P3, 1, 0, 1)   # full path seen from center, end marked
    left, right, gap = mtp_sides(mu, indicator_kernel(code, 1))
    assert (left, right) == (2, 0)
    assert gap == 2


def test_is_unimodular_pass_and_witness():
    assert is_unimodular(uniform_root_measure(cycle_graph(5)), 2)
    assert is_unimodular(uniform_root_measure(path_graph(3)), 1)

    verdict = is_unimodular(RootedDistribution([Atom(path_graph(3, root=1), Fraction(1))]), 1)
    assert not verdict
    assert verdict.witness_gap == 2
    assert verdict.witness_code is not None
    assert verdict.kernels_checked > 0


def test_transitive_point_mass_is_unimodular():
    mu = RootedDistribution([Atom(cycle_graph(6, root=2), Fraction(1))])
    assert is_unimodular(mu, 2)


@st.composite
def connected_graphs(draw):
    n = draw(st.integers(2, 7))
    order = draw(st.permutations(list(range(n))))
    edges = {(min(order[i - 1], order[i]), max(order[i - 1], order[i]))
             for i in range(1, n)}
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)),
                          max_size=6))
    for u, v in extra:
        if u != v:
            edges.add((min(u, v), max(u, v)))
    return RootedGraph(n, edges, 0)


@settings(max_examples=30, deadline=None)
@given(connected_graphs(), st.integers(0, 2), st.text("abcdef", min_size=1, max_size=4))
def test_mtp_gap_vanishes_on_random_graphs(G, r, salt):
    f = hash_kernel(r, salt)
    left, right, gap = mtp_sides(uniform_root_measure(G), f)
    assert gap == 0
    assert left == right


def test_mtp_monte_carlo_agrees_with_exact():
    mu = uniform_root_measure(path_graph(3))
    left, right, gap = mtp_sides(mu, neighbor_kernel(), mc_samples=3000, seed=11)
    assert abs(left - 4 / 3) < 0.08
    assert abs(right - 4 / 3) < 0.08
    with pytest.raises(ValueError):
        mtp_sides(mu, neighbor_kernel(), mc_samples=10)   # no seed


def test_restriction_keeps_mass_and_identity():
    mix = RootedDistribution(
        [Atom(cycle_graph(4), Fraction(1, 2)),
         Atom(complete_graph(2), Fraction(1, 2))])
    sub = restrict_saturated(mix, lambda g: g.vertex_count == 4)
    assert sub.total_weight() == Fraction(1, 2)
    assert not sub.probability
    assert len(sub.atoms) == 1
    assert is_unimodular(sub, 2)


def test_restriction_rejects_root_dependent_predicate():
    mu = uniform_root_measure(path_graph(3))
    with pytest.raises(ValueError):
        restrict_saturated(mu, lambda g: g.degree(g.root) == 1)


def test_laplacian_selfadjoint_on_uniform_root():
    F = lambda g: Fraction(g.degree(g.root))
    H = lambda g: Fraction(1) if g.degree(g.root) == 1 else Fraction(0)
    for G in (path_graph(4), cycle_graph(5), star_graph(3)):
        assert laplacian_selfadjoint_gap(uniform_root_measure(G), F, H) == 0


def test_laplacian_gap_on_center_rooted_path():
    mu = RootedDistribution([Atom(path_graph(3, root=1), Fraction(1))])
    F = lambda g: Fraction(g.degree(g.root))
    H = lambda g: Fraction(1)
    assert laplacian_selfadjoint_gap(mu, F, H) == 2


def test_no_core_probability_corpus_consistent():
    mu = RootedDistribution(
        [Atom(cycle_graph(6), Fraction(1, 2)),
         Atom(star_graph(3, root=0), Fraction(1, 2))])
    rep = no_core_audit(mu, lambda g: g.degree(g.root) >= 3)
    assert rep.verdict == "CONSISTENT"
    masses = sorted(r["core_mass"] for r in rep.rows)
    assert masses == [0, 1]


def test_no_core_flags_sigma_finite_marked_line():
    line = GraphGenerator("marked_line", {"core_set": [0, 1]})
    mu = RootedDistribution([Atom(line, Fraction(1))], probability=False)
    rep = no_core_audit(mu, lambda g: False)
    assert rep.verdict == "FLAGGED"
    assert rep.rows[0]["core_mass"] == 2
    assert "sigma-finite" in rep.note

    plain = GraphGenerator("integer_line")
    mu2 = RootedDistribution([Atom(plain, Fraction(1))], probability=False)
    assert no_core_audit(mu2, lambda g: False).verdict == "CONSISTENT"


def test_cover_of_triangle_by_order_two_group_is_hexagon():
    mu = cover_measure(cycle_graph(3), FiniteGroup.cyclic(2), {(0, 1): 1})
    assert len(mu.atoms) == 1
    assert mu.atoms[0].weight == 1
    assert canonical_code(mu.atoms[0].graph) == canonical_code(cycle_graph(6))
    assert is_unimodular(mu, 2)


def test_cover_rejects_disconnected_lift():
    with pytest.raises(ValueError):
        cover_measure(cycle_graph(3), FiniteGroup.cyclic(2), {})


def test_cover_weights_follow_base_vertices():
    # triangle with a pendant: fibers over distinct base vertices can stay
    # distinct, and the lift equals the uniform root measure on the cover
    base = RootedGraph(4, [(0, 1), (1, 2), (0, 2), (0, 3)], 0)
    mu = cover_measure(base, FiniteGroup.cyclic(2), {(0, 1): 1})
    assert mu.total_weight() == 1
    assert sorted(a.weight for a in mu.atoms) == [Fraction(1, 4), Fraction(1, 4), Fraction(1, 2)]
    cover = mu.atoms[0].graph
    assert cover.vertex_count == 8
    direct = uniform_root_measure(cover)
    assert {canonical_code(a.graph): a.weight for a in mu.atoms} == \
           {canonical_code(a.graph): a.weight for a in direct.atoms}
    assert is_unimodular(mu, 2)


def test_measure_json_roundtrip():
    mu = uniform_root_measure(star_graph(3))
    back = RootedDistribution.from_json(mu.to_json())
    assert {canonical_code(a.graph): a.weight for a in back.atoms} == \
           {canonical_code(a.graph): a.weight for a in mu.atoms}

    line = RootedDistribution([Atom(GraphGenerator("marked_line", {"core_set": [0]}),
                                    Fraction(1))], probability=False)
    back = RootedDistribution.from_json(line.to_json())
    assert isinstance(back.atoms[0].graph, GraphGenerator)
    assert back.atoms[0].graph.params["core_set"] == frozenset([0])


def test_validation_errors():
    with pytest.raises(ValueError):
        RootedDistribution([Atom(complete_graph(2), Fraction(1, 2))])   # mass 1/2
    with pytest.raises(ValueError):
        RootedDistribution([Atom(complete_graph(2), Fraction(-1))], probability=False)
    with pytest.raises(ValueError):
        RootedDistribution()
    bad = TransportKernel(1, lambda m: Fraction(-1))
    with pytest.raises(ValueError):
        bad(complete_graph(2), 0, 1)


def test_group_table_validation():
    with pytest.raises(ValueError):
        FiniteGroup([[0, 1], [0, 1]])   # 0 not an identity
    G = FiniteGroup.cyclic(4)
    assert G.inv == [0, 3, 2, 1]
