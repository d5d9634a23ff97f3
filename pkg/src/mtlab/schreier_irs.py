"""Coset graphs for symmetric generating sets, and the dictionary between
conjugation-invariant random subgroups and unimodular random coset graphs.

Finite ambient groups are handled as abstract multiplication tables (indices
0..n-1, identity 0); permutation generators are closed into such a table.
Coset graphs are returned as labeled RootedGraphs: the symbol s sits on the
ordered pair (C, C.s), loops included, so every vertex reads the full symbol
set both outward and inward.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .graphs_core import RootedGraph, canonical_code
from .mass_transport import Atom, RootedDistribution


class GeneratorSet:
    """Symmetric generating symbols with an inverse pairing.

    symbols: iterable of strings.  inverse: dict pairing each symbol with
    its inverse symbol; omitted symbols are their own inverse.  values maps
    symbols to ambient group elements (indices) when there is an ambient.
    """

    def __init__(self, symbols, inverse=None, values=None):
        self.symbols = tuple(str(s) for s in symbols)
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("duplicate symbols")
        inv = {str(k): str(v) for k, v in (inverse or {}).items()}
        for s in self.symbols:
            inv.setdefault(s, s)
        for s in self.symbols:
            if inv[s] not in self.symbols or inv[inv[s]] != s:
                raise ValueError("inverse pairing is not an involution on the symbols")
        self.inverse = inv
        self.values = None
        if values is not None:
            self.values = {str(k): int(v) for k, v in values.items()}
            if set(self.values) != set(self.symbols):
                raise ValueError("values must cover exactly the symbols")

    def __len__(self):
        return len(self.symbols)

    def check_values(self, group):
        """Symbol values must realize the pairing inside the given group."""
        if self.values is None:
            raise ValueError("generator set carries no ambient values")
        for s in self.symbols:
            if group.inverse(self.values[s]) != self.values[self.inverse[s]]:
                raise ValueError("value of %s is not inverse to value of %s"
                                 % (s, self.inverse[s]))


def _mul_perm(p, q):
    # apply p first, then q
    return tuple(q[p[i]] for i in range(len(p)))


class FiniteGroupAmbient:
    """Finite group as a multiplication table; optionally remembers a
    faithful permutation picture of each element."""

    def __init__(self, mult, perms=None):
        self.mult = tuple(tuple(int(x) for x in row) for row in mult)
        n = len(self.mult)
        if any(len(r) != n for r in self.mult):
            raise ValueError("multiplication table must be square")
        if any(self.mult[0][g] != g or self.mult[g][0] != g for g in range(n)):
            raise ValueError("element 0 must be the identity")
        self.order = n
        self._inv = [None] * n
        for g in range(n):
            for h in range(n):
                if self.mult[g][h] == 0:
                    self._inv[g] = h
        if any(v is None for v in self._inv):
            raise ValueError("table has a non-invertible element")
        self.perms = tuple(tuple(p) for p in perms) if perms else None

    def op(self, g, h):
        return self.mult[g][h]

    def inverse(self, g):
        return self._inv[g]

    def conjugate(self, g, x):
        """x^-1 g x."""
        return self.op(self.op(self._inv[x], g), x)

    @staticmethod
    def from_permutations(gens):
        """Close permutation tuples into a group; element 0 is the identity.

        Returns (ambient, index_of) where index_of maps each permutation
        tuple to its element index.
        """
        gens = [tuple(g) for g in gens]
        deg = len(gens[0])
        ident = tuple(range(deg))
        elements = [ident]
        index_of = {ident: 0}
        frontier = [ident]
        while frontier:
            nxt = []
            for p in frontier:
                for g in gens:
                    q = _mul_perm(p, g)
                    if q not in index_of:
                        index_of[q] = len(elements)
                        elements.append(q)
                        nxt.append(q)
            frontier = nxt
        n = len(elements)
        mult = [[index_of[_mul_perm(elements[a], elements[b])] for b in range(n)]
                for a in range(n)]
        return FiniteGroupAmbient(mult, perms=elements), index_of

    def closure(self, gens):
        """Subgroup generated by the given element indices, as a frozenset."""
        seen = {0}
        frontier = [0]
        gens = [int(g) for g in gens]
        while frontier:
            nxt = []
            for a in frontier:
                for g in gens:
                    b = self.op(a, g)
                    if b not in seen:
                        seen.add(b)
                        nxt.append(b)
            frontier = nxt
        return frozenset(seen)

    def all_subgroups(self):
        """Every subgroup, by growing generating sets one element at a time."""
        subs = {frozenset([0])}
        frontier = {frozenset([0])}
        while frontier:
            fresh = set()
            for K in frontier:
                gens = list(K)
                for g in range(1, self.order):
                    if g in K:
                        continue
                    H = self.closure(gens + [g])
                    if H not in subs:
                        subs.add(H)
                        fresh.add(H)
            frontier = fresh
        return sorted(subs, key=lambda H: (len(H), sorted(H)))

    def conjugate_subgroup(self, H, x):
        return frozenset(self.conjugate(g, x) for g in H)

    def subgroup_classes(self):
        """Subgroups grouped into conjugacy classes (each class sorted)."""
        remaining = set(self.all_subgroups())
        classes = []
        while remaining:
            H = min(remaining, key=lambda K: (len(K), sorted(K)))
            cls = {self.conjugate_subgroup(H, x) for x in range(self.order)}
            classes.append(sorted(cls, key=sorted))
            remaining -= cls
        return classes


class SubgroupRep:
    """A subgroup given one of three ways.

    - coset_table: dict symbol -> tuple, the right action on coset indices
      0..m-1 with identity coset 0 (subgroup of the free group on the
      symbols).
    - ambient + generators: element indices generating a subgroup of a
      finite ambient group.
    - free=True: the trivial subgroup of the free group on the symbols;
      its coset graph is the labeled regular tree, available only through
      a truncation radius.
    """

    def __init__(self, coset_table=None, ambient=None, generators=None, free=False):
        given = sum([coset_table is not None, generators is not None, bool(free)])
        if given != 1:
            raise ValueError("give exactly one of coset_table / generators / free")
        self.coset_table = None
        self.ambient = None
        self.elements = None
        self.free = bool(free)
        if coset_table is not None:
            self.coset_table = {str(s): tuple(int(x) for x in act)
                                for s, act in coset_table.items()}
            sizes = {len(act) for act in self.coset_table.values()}
            if len(sizes) != 1:
                raise ValueError("coset actions disagree on index count")
            self.index = sizes.pop()
            for act in self.coset_table.values():
                if sorted(act) != list(range(self.index)):
                    raise ValueError("coset action is not a permutation of the indices")
        if generators is not None:
            if ambient is None:
                raise ValueError("generators need an ambient group")
            self.ambient = ambient
            self.elements = ambient.closure(generators)

    def validate_against(self, S):
        if self.coset_table is not None:
            if set(self.coset_table) != set(S.symbols):
                raise ValueError("coset table symbols differ from the generator set")
            for s in S.symbols:
                act = self.coset_table[s]
                back = self.coset_table[S.inverse[s]]
                for i in range(self.index):
                    if back[act[i]] != i:
                        raise ValueError("action of %s then %s is not the identity"
                                         % (s, S.inverse[s]))


def schreier_graph(H, S, truncation_radius=None):
    """Labeled coset graph of H for the symmetric symbols S, rooted at the
    identity coset."""
    if H.free:
        if truncation_radius is None:
            raise ValueError("infinite index needs a truncation radius")
        return _free_tree(S, int(truncation_radius))
    if H.coset_table is not None:
        H.validate_against(S)
        m = H.index
        action = {s: H.coset_table[s] for s in S.symbols}
        reached = _reachable(m, action.values())
        if len(reached) != m:
            raise ValueError("coset table is not transitive")
    else:
        S.check_values(H.ambient)
        G = H.ambient
        sub = H.elements
        cosets = {}
        rep = []
        for g in range(G.order):
            C = frozenset(G.op(h, g) for h in sub)
            if C not in cosets:
                cosets[C] = len(rep)
                rep.append(g)
        ident = frozenset(sub)
        if cosets[ident] != 0:
            # identity coset first: g = 0 is visited first, so this holds
            raise AssertionError
        m = len(rep)
        action = {}
        for s in S.symbols:
            v = S.values[s]
            act = []
            for i in range(m):
                C = frozenset(G.op(h, G.op(rep[i], v)) for h in sub)
                act.append(cosets[C])
            action[s] = tuple(act)
        reached = _reachable(m, action.values())
        if len(reached) != m:
            raise ValueError("symbols do not generate the ambient group "
                             "(coset graph would be disconnected)")
    labels = {}
    edges = set()
    for s, act in action.items():
        for i in range(m):
            j = act[i]
            labels.setdefault((i, j), []).append(s)
            if i != j:
                edges.add((min(i, j), max(i, j)))
    labels = {k: tuple(sorted(v)) for k, v in labels.items()}
    g = RootedGraph(m, edges, 0, labels)
    if truncation_radius is not None:
        from .graphs_core import ball
        return ball(g, 0, int(truncation_radius))
    return g


def _reachable(m, actions):
    seen = {0}
    frontier = [0]
    acts = list(actions)
    while frontier:
        nxt = []
        for i in frontier:
            for act in acts:
                j = act[i]
                if j not in seen:
                    seen.add(j)
                    nxt.append(j)
        frontier = nxt
    return seen


def _free_tree(S, R):
    """Ball of the coset graph of the trivial subgroup of the free group:
    vertices are reduced words in the symbols."""
    ident = ()
    verts = {ident: 0}
    order = [ident]
    frontier = [ident]
    for _ in range(R):
        nxt = []
        for w in frontier:
            for s in S.symbols:
                if w and S.inverse[w[-1]] == s:
                    continue
                u = w + (s,)
                if u not in verts:
                    verts[u] = len(order)
                    order.append(u)
                    nxt.append(u)
        frontier = nxt
    edges = set()
    labels = {}
    for w, i in verts.items():
        for s in S.symbols:
            if w and S.inverse[w[-1]] == s:
                u = w[:-1]
            else:
                u = w + (s,)
            if u in verts:
                j = verts[u]
                labels.setdefault((i, j), []).append(s)
                if i != j:
                    edges.add((min(i, j), max(i, j)))
    labels = {k: tuple(sorted(v)) for k, v in labels.items()}
    return RootedGraph(len(order), edges, 0, labels)


def label_bijection_ok(g, S):
    """At every vertex the outgoing labels and the incoming labels each read
    the symbol set exactly once."""
    symbols = sorted(S.symbols)
    out = {v: [] for v in range(g.vertex_count)}
    into = {v: [] for v in range(g.vertex_count)}
    for (u, v), syms in g.edge_labels.items():
        for s in syms:
            out[u].append(s)
            into[v].append(s)
    for v in range(g.vertex_count):
        if sorted(out[v]) != symbols or sorted(into[v]) != symbols:
            return False
    return True


def loop_count(g, v):
    """Geometric loops at v: inverse-paired label pairs count once, and a
    self-inverse label counts as one loop."""
    syms = list(g.edge_labels.get((v, v), ()))
    return (len(syms) + 1) // 2 if syms else 0


def unlabeled(g):
    """Forget all labels (loop marks included), keep the simple graph."""
    return RootedGraph(g.vertex_count, g.edges, g.root)


# ---------------------------------------------------------------------------
# invariant random subgroups


class IRSSpec:
    """Random subgroup of a finite ambient group: weighted atoms on
    subgroups, intended to be closed under conjugation with equal weights.

    The invariance check runs at construction and stores its outcome
    (`invariant`, `violating_conjugator`); conversion to a root measure
    refuses non-invariant input.
    """

    def __init__(self, ambient, atoms):
        self.ambient = ambient
        merged = {}
        order = []
        for rep, w in atoms:
            if isinstance(rep, SubgroupRep):
                if rep.ambient is not ambient:
                    raise ValueError("atom subgroup lives in a different ambient group")
                H = rep.elements
            else:
                H = ambient.closure(rep)
            w = Fraction(w)
            if w < 0:
                raise ValueError("negative weight")
            if H in merged:
                merged[H] += w
            else:
                merged[H] = w
                order.append(H)
        self.atoms = [(H, merged[H]) for H in order if merged[H] > 0]
        total = sum(w for _, w in self.atoms)
        if total != 1:
            raise ValueError("weights must sum to 1, got %s" % total)
        self.invariant = True
        self.violating_conjugator = None
        weight = dict(self.atoms)
        for H, w in self.atoms:
            for x in range(ambient.order):
                K = ambient.conjugate_subgroup(H, x)
                if weight.get(K, Fraction(0)) != w:
                    self.invariant = False
                    self.violating_conjugator = x
                    break
            if not self.invariant:
                break

    def to_json(self):
        return {"group": {"order": self.ambient.order,
                          "mult": [list(r) for r in self.ambient.mult]},
                "atoms": [{"generators": sorted(H),
                           "weight": "%d/%d" % (w.numerator, w.denominator)}
                          for H, w in self.atoms]}

    @staticmethod
    def from_json(obj):
        ambient = FiniteGroupAmbient(obj["group"]["mult"])
        if ambient.order != int(obj["group"]["order"]):
            raise ValueError("declared order disagrees with the table")
        atoms = [(entry["generators"], Fraction(entry["weight"]))
                 for entry in obj["atoms"]]
        return IRSSpec(ambient, atoms)


def irs_to_ursg(irs, S):
    """Pushforward of a conjugation-invariant random subgroup through the
    coset-graph construction."""
    if not irs.invariant:
        raise ValueError("random subgroup is not conjugation-invariant "
                         "(violating conjugator: element %d)"
                         % irs.violating_conjugator)
    S.check_values(irs.ambient)
    atoms = []
    for H, w in irs.atoms:
        rep = SubgroupRep(ambient=irs.ambient, generators=sorted(H))
        atoms.append(Atom(schreier_graph(rep, S), w))
    return RootedDistribution(atoms)


# ---------------------------------------------------------------------------
# quotient construction for a free action on a finite graph


class GroupAction:
    """Action of a finite ambient group on the vertices of a finite graph,
    given as one vertex permutation per group element."""

    def __init__(self, group, graph, perms):
        self.group = group
        self.graph = graph
        self.perms = [tuple(int(x) for x in p) for p in perms]
        n = graph.vertex_count
        if len(self.perms) != group.order:
            raise ValueError("one permutation per group element required")
        for p in self.perms:
            if sorted(p) != list(range(n)):
                raise ValueError("action entry is not a vertex permutation")
        if self.perms[0] != tuple(range(n)):
            raise ValueError("identity element must act trivially")
        for a in range(group.order):
            for b in range(group.order):
                if _mul_perm(self.perms[a], self.perms[b]) != self.perms[group.op(a, b)]:
                    raise ValueError("permutations do not compose like the group")
        for g in range(1, group.order):
            p = self.perms[g]
            if any(p[v] == v for v in range(n)):
                raise ValueError("action is not free: element %d fixes a vertex" % g)
        for p in self.perms:
            for u, v in graph.edges:
                a, b = p[u], p[v]
                if (min(a, b), max(a, b)) not in graph.edges:
                    raise ValueError("action does not preserve edges")

    def quotient(self, H):
        """Quotient graph by the subgroup H (a set of element indices).

        Multiple edge-orbits over one vertex pair are kept as multiplicity
        labels; an edge-orbit closing on a single vertex class becomes a
        loop label.
        """
        n = self.graph.vertex_count
        orbit = [-1] * n
        count = 0
        for v in range(n):
            if orbit[v] < 0:
                for h in H:
                    orbit[self.perms[h][v]] = count
                count += 1
        edge_orbits = set()
        for u, v in self.graph.edges:
            images = frozenset((min(self.perms[h][u], self.perms[h][v]),
                                max(self.perms[h][u], self.perms[h][v])) for h in H)
            edge_orbits.add(images)
        pair_mult = {}
        for eo in edge_orbits:
            u, v = next(iter(eo))
            a, b = orbit[u], orbit[v]
            key = (min(a, b), max(a, b))
            pair_mult[key] = pair_mult.get(key, 0) + 1
        edges = set()
        labels = {}
        for (a, b), m in pair_mult.items():
            if a == b:
                labels[(a, a)] = tuple(["loop"] * m)
            else:
                edges.add((a, b))
                if m > 1:
                    labels[(a, b)] = ("x%d" % m,)
                    labels[(b, a)] = ("x%d" % m,)
        return RootedGraph(count, edges, 0, labels or None)


def urm_from_discrete_irs(action, irs):
    """Random rooted quotient: draw a subgroup, quotient the graph, root
    uniformly.  Conjugation-invariance makes the result unimodular."""
    if irs.ambient is not action.group:
        raise ValueError("random subgroup and action use different groups")
    if not irs.invariant:
        raise ValueError("random subgroup is not conjugation-invariant "
                         "(violating conjugator: element %d)"
                         % irs.violating_conjugator)
    atoms = []
    for H, w in irs.atoms:
        Q = action.quotient(H)
        share = w * Fraction(1, Q.vertex_count)
        for v in range(Q.vertex_count):
            atoms.append(Atom(Q.rerooted(v), share))
    return RootedDistribution(atoms)


# ---------------------------------------------------------------------------
# stock ambient groups for the audits


def symmetric_group_ambient(n):
    """S_n with the adjacent-transposition symbols t1..t_{n-1}."""
    gens = []
    names = []
    for i in range(n - 1):
        p = list(range(n))
        p[i], p[i + 1] = p[i + 1], p[i]
        gens.append(tuple(p))
        names.append("t%d" % (i + 1))
    ambient, index_of = FiniteGroupAmbient.from_permutations(gens)
    values = {names[i]: index_of[gens[i]] for i in range(len(gens))}
    S = GeneratorSet(names, values=values)
    return ambient, S


def s3_with_mixed_symbols():
    """S_3 with one transposition and the two 3-cycles as symbols."""
    t = (1, 0, 2)
    c = (1, 2, 0)
    cinv = (2, 0, 1)
    ambient, index_of = FiniteGroupAmbient.from_permutations([t, c])
    values = {"a": index_of[t], "r": index_of[c], "r'": index_of[cinv]}
    S = GeneratorSet(["a", "r", "r'"], inverse={"r": "r'", "r'": "r"}, values=values)
    return ambient, S


def dihedral_ambient():
    """D_4 as symmetries of a square with symbols r, r', f."""
    r = (1, 2, 3, 0)
    rinv = (3, 0, 1, 2)
    f = (2, 1, 0, 3)
    ambient, index_of = FiniteGroupAmbient.from_permutations([r, f])
    values = {"r": index_of[r], "r'": index_of[rinv], "f": index_of[f]}
    S = GeneratorSet(["r", "r'", "f"], inverse={"r": "r'", "r'": "r"}, values=values)
    return ambient, S
