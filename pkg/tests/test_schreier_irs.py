from fractions import Fraction

import pytest

from mtlab.graphs_core import GraphGenerator, canonical_code, cycle_graph
from mtlab.mass_transport import is_unimodular, uniform_root_measure
from mtlab.schreier_irs import (FiniteGroupAmbient, GeneratorSet, GroupAction,
                                IRSSpec, SubgroupRep, dihedral_ambient,
                                irs_to_ursg, label_bijection_ok, loop_count,
                                s3_with_mixed_symbols, schreier_graph,
                                symmetric_group_ambient, unlabeled,
                                urm_from_discrete_irs)

LINE_SYMBOLS = GeneratorSet(["+1", "-1"], inverse={"+1": "-1", "-1": "+1"})


def cyclic_ambient(n):
    return FiniteGroupAmbient([[(i + j) % n for j in range(n)] for i in range(n)])


def test_index_three_subgroup_of_line_group_gives_labeled_triangle():
    H = SubgroupRep(coset_table={"+1": (1, 2, 0), "-1": (2, 0, 1)})
    g = schreier_graph(H, LINE_SYMBOLS)
    assert g.vertex_count == 3
    assert g.root == 0
    assert canonical_code(unlabeled(g)) == canonical_code(cycle_graph(3))
    assert g.edge_labels[(0, 1)] == ("+1",)
    assert g.edge_labels[(1, 0)] == ("-1",)
    assert label_bijection_ok(g, LINE_SYMBOLS)


def test_index_one_subgroup_gives_single_vertex_with_loops():
    H = SubgroupRep(coset_table={"+1": (0,), "-1": (0,)})
    g = schreier_graph(H, LINE_SYMBOLS)
    assert g.vertex_count == 1
    assert g.edge_labels[(0, 0)] == ("+1", "-1")
    assert loop_count(g, 0) == 1          # one geometric loop for the pair
    assert label_bijection_ok(g, LINE_SYMBOLS)


def test_transposition_subgroup_of_s3():
    ambient, S = s3_with_mixed_symbols()
    H = SubgroupRep(ambient=ambient, generators=[S.values["a"]])
    g = schreier_graph(H, S)
    assert g.vertex_count == 3
    assert g.edge_labels.get((0, 0)) == ("a",)    # identity coset is fixed by a
    assert label_bijection_ok(g, S)


def test_bad_coset_table_rejected():
    with pytest.raises(ValueError):
        hp = SubgroupRep(coset_table={"+1": (1, 2, 0), "-1": (1, 2, 0)})
        schreier_graph(hp, LINE_SYMBOLS)
    with pytest.raises(ValueError):
        SubgroupRep(coset_table={"+1": (0, 0, 1), "-1": (1, 2, 0)})


def test_intransitive_table_rejected():
    H = SubgroupRep(coset_table={"+1": (1, 0, 2), "-1": (1, 0, 2)})
    with pytest.raises(ValueError):
        schreier_graph(H, LINE_SYMBOLS)


def test_free_tree_truncations():
    H = SubgroupRep(free=True)
    with pytest.raises(ValueError):
        schreier_graph(H, LINE_SYMBOLS)
    line_ball = schreier_graph(H, LINE_SYMBOLS, truncation_radius=3)
    want = GraphGenerator("integer_line").ball(0, 3)
    assert canonical_code(unlabeled(line_ball)) == canonical_code(want)

    _, S3sym = s3_with_mixed_symbols()
    tree_ball = schreier_graph(H, S3sym, truncation_radius=2)
    want = GraphGenerator("regular_tree", {"k": 3}).ball(0, 2)
    assert tree_ball.vertex_count == 10
    assert canonical_code(unlabeled(tree_ball)) == canonical_code(want)


def test_conjugate_subgroups_give_isomorphic_graphs():
    ambient, S = s3_with_mixed_symbols()
    a = S.values["a"]
    for x in range(ambient.order):
        Hx = ambient.conjugate_subgroup(frozenset([0, a]), x)
        gx = schreier_graph(SubgroupRep(ambient=ambient, generators=sorted(Hx)), S)
        g0 = schreier_graph(SubgroupRep(ambient=ambient, generators=[a]), S)
        mine = sorted(canonical_code(gx.rerooted(v)) for v in range(gx.vertex_count))
        base = sorted(canonical_code(g0.rerooted(v)) for v in range(g0.vertex_count))
        assert mine == base


def test_irs_invariance_check_and_conversion():
    ambient, S = s3_with_mixed_symbols()
    a = S.values["a"]
    conjugates = {ambient.conjugate_subgroup(frozenset([0, a]), x)
                  for x in range(ambient.order)}
    assert len(conjugates) == 3

    atoms = [(sorted(H), Fraction(1, 3)) for H in conjugates]
    irs = IRSSpec(ambient, atoms)
    assert irs.invariant
    mu = irs_to_ursg(irs, S)
    assert mu.total_weight() == 1
    assert is_unimodular(mu, 3)

    # a normal atom converts alone
    rot = IRSSpec(ambient, [([S.values["r"]], Fraction(1))])
    assert rot.invariant
    assert is_unimodular(irs_to_ursg(rot, S), 3)

    # lopsided weights on the conjugates are refused with a witness
    two = sorted(conjugates, key=sorted)[:2]
    bad = IRSSpec(ambient, [(sorted(two[0]), Fraction(1, 2)),
                            (sorted(two[1]), Fraction(1, 2))])
    assert not bad.invariant
    assert bad.violating_conjugator is not None
    with pytest.raises(ValueError, match="conjugator"):
        irs_to_ursg(bad, S)


def test_subgroup_enumeration_counts():
    s3, _ = s3_with_mixed_symbols()
    assert len(s3.all_subgroups()) == 6
    assert len(s3.subgroup_classes()) == 4

    d4, _ = dihedral_ambient()
    assert len(d4.all_subgroups()) == 10
    assert len(d4.subgroup_classes()) == 8


def test_every_invariant_class_measure_is_unimodular_small():
    for ambient, S in (s3_with_mixed_symbols(), dihedral_ambient()):
        for cls in ambient.subgroup_classes():
            w = Fraction(1, len(cls))
            irs = IRSSpec(ambient, [(sorted(H), w) for H in cls])
            assert irs.invariant
            assert is_unimodular(irs_to_ursg(irs, S), 3)


def test_symmetric_ambient_sizes():
    s3, S = symmetric_group_ambient(3)
    assert s3.order == 6
    assert len(S) == 2
    s4, S4 = symmetric_group_ambient(4)
    assert s4.order == 24
    assert len(s4.all_subgroups()) == 30
    assert len(s4.subgroup_classes()) == 11


def test_quotient_of_hexagon_by_half_rotation():
    ambient = cyclic_ambient(6)
    rot = [tuple((v + g) % 6 for v in range(6)) for g in range(6)]
    act = GroupAction(ambient, cycle_graph(6), rot)

    irs = IRSSpec(ambient, [([3], Fraction(1))])
    mu = urm_from_discrete_irs(act, irs)
    assert len(mu.atoms) == 1
    assert mu.atoms[0].weight == 1
    assert canonical_code(mu.atoms[0].graph) == canonical_code(cycle_graph(3))
    assert is_unimodular(mu, 2)


def test_quotient_by_trivial_subgroup_is_uniform_root():
    ambient = cyclic_ambient(6)
    rot = [tuple((v + g) % 6 for v in range(6)) for g in range(6)]
    act = GroupAction(ambient, cycle_graph(6), rot)
    mu = urm_from_discrete_irs(act, IRSSpec(ambient, [([0], Fraction(1))]))
    want = uniform_root_measure(cycle_graph(6))
    assert {canonical_code(a.graph): a.weight for a in mu.atoms} == \
           {canonical_code(a.graph): a.weight for a in want.atoms}


def test_klein_action_on_octagon():
    r4 = tuple((i + 4) % 8 for i in range(8))
    m = tuple(7 - i for i in range(8))
    ambient, index_of = FiniteGroupAmbient.from_permutations([r4, m])
    assert ambient.order == 4
    act = GroupAction(ambient, cycle_graph(8), ambient.perms)

    irs = IRSSpec(ambient, [([index_of[r4]], Fraction(1, 2)),
                            ([index_of[m]], Fraction(1, 2))])
    assert irs.invariant
    mu = urm_from_discrete_irs(act, irs)
    assert mu.total_weight() == 1
    assert is_unimodular(mu, 3)
    # the reflection quotient folds the octagon onto a path with loop ends
    folded = act.quotient(ambient.closure([index_of[m]]))
    assert folded.vertex_count == 4
    loops = [v for v in range(4) if folded.edge_labels.get((v, v))]
    assert len(loops) == 2


def test_non_free_action_rejected():
    ambient = cyclic_ambient(2)
    fix = (0, 2, 1, 3)      # fixes two vertices of the 4-cycle
    with pytest.raises(ValueError, match="free"):
        GroupAction(ambient, cycle_graph(4), [tuple(range(4)), fix])


def test_irs_json_roundtrip():
    ambient, S = s3_with_mixed_symbols()
    a = S.values["a"]
    conjugates = {ambient.conjugate_subgroup(frozenset([0, a]), x)
                  for x in range(ambient.order)}
    irs = IRSSpec(ambient, [(sorted(H), Fraction(1, 3)) for H in conjugates])
    back = IRSSpec.from_json(irs.to_json())
    assert back.invariant
    assert sorted((sorted(H), w) for H, w in back.atoms) == \
           sorted((sorted(H), w) for H, w in irs.atoms)
