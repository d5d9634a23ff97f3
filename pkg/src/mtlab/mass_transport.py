"""Mass transport identities on rooted-graph measures.

The central identity: a measure mu over rooted graphs satisfies, for every
nonnegative kernel f on doubly rooted graphs,

    sum_atoms w * sum_q f(G, root, q)  ==  sum_atoms w * sum_q f(G, q, root)

("expected income equals expected payment").  Finite-support measures are
handled in exact rational arithmetic, so the identity is checked as an
equality of Fractions, never as a tolerance.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .graphs_core import (DoublyRootedGraph, GraphGenerator, RootedGraph,
                          ball_with_map, canonical_code,
                          doubly_rooted_ball_code)


@lru_cache(maxsize=1 << 16)
def _ball_around(structure, p, R):
    """Ball extraction cached on the unrooted structure: the R-ball around p
    does not depend on which vertex happens to be the root."""
    n, edges, labels = structure
    g = RootedGraph(n, edges, p, dict(labels) or None)
    return ball_with_map(g, p, R)


def _structure_key(G):
    return (G.vertex_count, G.edges, tuple(sorted(G.edge_labels.items())))


@dataclass(frozen=True)
class Atom:
    """One weighted point of a finite-support rooted-graph measure.

    graph may be a RootedGraph or (for audits only) a GraphGenerator; in
    the generator case core_mass declares the mass of the audit's core set
    since the infinite graph cannot be enumerated.
    """
    graph: object
    weight: Fraction
    core_mass: object = None


class RootedDistribution:
    """Finite-support measure over rooted graphs, or a seeded sampler.

    Finite atoms are merged by canonical code on construction.  The
    probability flag asserts total weight 1; sigma-finite inputs (e.g. a
    counting-type measure used by the no-core audit) set it to False.
    """

    def __init__(self, atoms=None, sampler=None, probability=True):
        if (atoms is None) == (sampler is None):
            raise ValueError("exactly one of atoms / sampler required")
        self.sampler = sampler
        self.probability = bool(probability)
        self.atoms = []
        if atoms is not None:
            merged = {}
            order = []
            for a in atoms:
                if not isinstance(a, Atom):
                    a = Atom(a[0], Fraction(a[1]), a[2] if len(a) > 2 else None)
                w = Fraction(a.weight)
                if w <= 0:
                    raise ValueError("atom weights must be positive")
                if isinstance(a.graph, GraphGenerator):
                    key = ("gen", a.graph.name,
                           tuple(sorted((k, tuple(sorted(v)) if isinstance(v, frozenset) else v)
                                        for k, v in a.graph.params.items())))
                else:
                    key = ("fin", canonical_code(a.graph))
                if key in merged:
                    old = merged[key]
                    merged[key] = Atom(old.graph, old.weight + w, old.core_mass)
                else:
                    merged[key] = Atom(a.graph, w, a.core_mass)
                    order.append(key)
            self.atoms = [merged[k] for k in order]
            total = sum(a.weight for a in self.atoms)
            if self.probability and total != 1:
                raise ValueError("probability measure must have total weight 1, got %s" % total)

    @property
    def finite_support(self):
        return bool(self.atoms) and all(isinstance(a.graph, RootedGraph) for a in self.atoms)

    def total_weight(self):
        return sum((a.weight for a in self.atoms), Fraction(0))

    def normalized(self):
        """Plumbing: rescale to a probability measure (restriction does not)."""
        total = self.total_weight()
        if total == 0:
            raise ValueError("cannot normalize the zero measure")
        return RootedDistribution(
            [Atom(a.graph, a.weight / total, a.core_mass) for a in self.atoms])

    def sample(self, rng):
        if self.sampler is not None:
            return self.sampler(rng)
        r = rng.random()
        total = self.total_weight()
        acc = 0.0
        for a in self.atoms:
            acc += float(a.weight / total)
            if r < acc:
                return a.graph
        return self.atoms[-1].graph

    def to_json(self):
        return {"atoms": [{"graph": a.graph.to_json(),
                           "weight": "%d/%d" % (a.weight.numerator, a.weight.denominator)}
                          for a in self.atoms],
                "probability": self.probability}

    @staticmethod
    def from_json(obj):
        atoms = []
        for entry in obj["atoms"]:
            g = entry["graph"]
            graph = GraphGenerator.from_json(g) if "name" in g else RootedGraph.from_json(g)
            atoms.append(Atom(graph, Fraction(entry["weight"])))
        return RootedDistribution(atoms, probability=obj.get("probability", True))


class TransportKernel:
    """Bounded-range paying function on doubly rooted graphs.

    evaluator receives the r-ball around p as a DoublyRootedGraph whose
    second root marks q, and must return a nonnegative Fraction depending
    only on the canonical code of that ball.  The kernel vanishes whenever
    d(p, q) > range (enforced by construction: q outside the ball is never
    passed to the evaluator).
    """

    def __init__(self, range_, evaluator, name="kernel"):
        self.range = int(range_)
        if self.range < 0:
            raise ValueError("range must be nonnegative")
        self.evaluator = evaluator
        self.name = name
        self._cache = {}

    def __call__(self, G, p, q):
        if isinstance(G, RootedGraph):
            b, remap = _ball_around(_structure_key(G), p, self.range)
        else:
            b, remap = ball_with_map(G, p, self.range)
        if q not in remap:
            return Fraction(0)
        marked = DoublyRootedGraph(b, remap[q])
        code = canonical_code(marked)
        if code not in self._cache:
            self._cache[code] = Fraction(self.evaluator(marked))
        val = self._cache[code]
        if val < 0:
            raise ValueError("transport kernels must be nonnegative")
        return val


def indicator_kernel(code, range_):
    """Kernel paying 1 exactly on one doubly-rooted-ball class."""
    def evaluator(marked):
        return Fraction(1) if canonical_code(marked) == code else Fraction(0)
    return TransportKernel(range_, evaluator, name="indicator")


def hash_kernel(range_, salt, max_value=5):
    """Deterministic pseudo-random kernel: value depends only on the code."""
    def evaluator(marked):
        h = hashlib.blake2b(canonical_code(marked) + salt.encode(), digest_size=8)
        v = int.from_bytes(h.digest(), "big")
        return Fraction(v % (max_value + 1), 1 + v % 3)
    return TransportKernel(range_, evaluator, name="hash:%s" % salt)


# ---------------------------------------------------------------------------
# operations


def uniform_root_measure(G):
    """Uniform random root on a finite connected graph: the atoms are the
    rooted isomorphism classes weighted by orbit size / vertex count."""
    if not isinstance(G, RootedGraph):
        raise ValueError("finite graph required")
    n = G.vertex_count
    atoms = [Atom(G.rerooted(v), Fraction(1, n)) for v in range(n)]
    return RootedDistribution(atoms)


def mtp_sides(mu, f, mc_samples=None, seed=None):
    """Left and right sides of the transport identity plus their gap.

    Exact rational arithmetic on finite support; Monte Carlo with an
    explicit seed otherwise.
    """
    if mu.finite_support and mc_samples is None:
        left = Fraction(0)
        right = Fraction(0)
        for a in mu.atoms:
            G = a.graph
            p = G.root
            for q in range(G.vertex_count):
                left += a.weight * f(G, p, q)
                right += a.weight * f(G, q, p)
        return left, right, abs(left - right)
    if mc_samples is None:
        raise ValueError("sampler-backed measures need mc_samples")
    if seed is None:
        raise ValueError("Monte Carlo mode requires a seed")
    import numpy as np
    rng = np.random.default_rng(seed)
    left = 0.0
    right = 0.0
    for _ in range(int(mc_samples)):
        G = mu.sample(rng)
        p = G.root
        for q in range(G.vertex_count):
            left += float(f(G, p, q))
            right += float(f(G, q, p))
    left /= mc_samples
    right /= mc_samples
    return left, right, abs(left - right)


def support_ball_codes(mu, R):
    """All doubly-rooted R-ball codes over ordered vertex pairs at distance
    <= R in the support (the complete indicator-kernel family)."""
    codes = set()
    for a in mu.atoms:
        G = a.graph
        for p in range(G.vertex_count):
            dist = G.distances_from(p)
            for q in range(G.vertex_count):
                if dist[q] <= R:
                    codes.add(doubly_rooted_ball_code(G, p, q, R))
    return sorted(codes)


@dataclass
class UnimodularityVerdict:
    passed: bool
    radius: int
    witness_code: object = None
    witness_gap: Fraction = Fraction(0)
    kernels_checked: int = 0

    def __bool__(self):
        return self.passed


def is_unimodular(mu, R, tol=Fraction(0)):
    """Check the transport identity against every indicator kernel of a
    doubly-rooted R-ball class in the support.  Any range-R kernel is a
    nonnegative combination of these, so a PASS certifies all of them."""
    if not mu.finite_support:
        raise ValueError("finite support required")
    R = int(R)
    if R < 1:
        raise ValueError("R >= 1 required")
    tol = Fraction(tol)
    worst_gap = Fraction(0)
    worst_code = None
    codes = support_ball_codes(mu, R)
    for code in codes:
        f = indicator_kernel(code, R)
        _, _, gap = mtp_sides(mu, f)
        if gap > worst_gap:
            worst_gap = gap
            worst_code = code
    if worst_gap > tol:
        return UnimodularityVerdict(False, R, worst_code, worst_gap, len(codes))
    return UnimodularityVerdict(True, R, None, worst_gap, len(codes))


def restrict_saturated(mu, predicate):
    """Drop atoms failing a root-independent predicate; keep their weights
    unrenormalized (the result is a sub-probability measure)."""
    kept = []
    for a in mu.atoms:
        G = a.graph
        if not isinstance(G, RootedGraph):
            raise ValueError("finite support required")
        vals = {predicate(G.rerooted(v)) for v in range(G.vertex_count)}
        if len(vals) != 1:
            raise ValueError("predicate is root-dependent on an atom "
                             "(not saturated)")
        if vals.pop():
            kept.append(a)
    total = sum((a.weight for a in kept), Fraction(0))
    out = RootedDistribution.__new__(RootedDistribution)
    out.sampler = None
    out.probability = (total == 1)
    out.atoms = kept
    return out


def graph_laplacian(F, G, p):
    """(Delta F)(G, p) = sum over neighbours q of F(G, q) - F(G, p)."""
    base = F(G.rerooted(p))
    return sum((F(G.rerooted(q)) - base for q in G.neighbors(p)), Fraction(0))


def laplacian_selfadjoint_gap(mu, F, H):
    """| E[F * Delta H] - E[Delta F * H] | in exact arithmetic.

    The two expectations agree whenever mu passes the transport check at
    radius R+1, R being the ball radius F and H read.
    """
    lhs = Fraction(0)
    rhs = Fraction(0)
    for a in mu.atoms:
        G = a.graph
        p = G.root
        lhs += a.weight * Fraction(F(G.rerooted(p))) * graph_laplacian(H, G, p)
        rhs += a.weight * graph_laplacian(F, G, p) * Fraction(H(G.rerooted(p)))
    return abs(lhs - rhs)


@dataclass
class NoCoreReport:
    verdict: str                       # CONSISTENT or FLAGGED
    rows: list = field(default_factory=list)
    probability: bool = True
    note: str = ""


def no_core_audit(mu, core):
    """Report per-atom core masses and flag infinite atoms whose core mass
    is finite and positive.

    For a probability measure no flag can occur (finite positive core mass
    forces finite volume); a sigma-finite counting-type measure may be
    flagged, which is the documented caveat rather than a failure.
    """
    rows = []
    flagged = False
    for a in mu.atoms:
        G = a.graph
        if isinstance(G, GraphGenerator):
            m = a.core_mass
            if m is None:
                m = G.core_mass()
            if m is None:
                raise ValueError("generator atom lacks a core-mass oracle")
            infinite = True
        else:
            m = sum(1 for q in range(G.vertex_count) if core(G.rerooted(q)))
            infinite = False
        flag = infinite and 0 < m
        rows.append({"graph": repr(G), "core_mass": m,
                     "infinite": infinite, "flagged": flag})
        flagged = flagged or flag
    if flagged and not mu.probability:
        note = ("sigma-finite measure: positive finite core mass on an "
                "infinite atom contradicts nothing; the finiteness "
                "conclusion needs a probability measure")
    elif flagged:
        note = ("flag under a probability measure rules out the transport "
                "identity: finite positive core mass would force the atom "
                "to be finite")
    else:
        note = ""
    return NoCoreReport("FLAGGED" if flagged else "CONSISTENT",
                        rows, mu.probability, note)


# ---------------------------------------------------------------------------
# regular covers via voltage assignments


class FiniteGroup:
    """Finite group as a multiplication table over 0..n-1 with identity 0."""

    def __init__(self, mult):
        self.mult = [list(map(int, row)) for row in mult]
        n = len(self.mult)
        if any(len(r) != n for r in self.mult):
            raise ValueError("multiplication table must be square")
        if any(self.mult[0][g] != g or self.mult[g][0] != g for g in range(n)):
            raise ValueError("element 0 must be the identity")
        self.order = n
        self.inv = [0] * n
        for g in range(n):
            for h in range(n):
                if self.mult[g][h] == 0:
                    self.inv[g] = h
        for g in range(n):
            for h in range(n):
                for k in range(n):
                    if self.mult[self.mult[g][h]][k] != self.mult[g][self.mult[h][k]]:
                        raise ValueError("multiplication table is not associative")

    def op(self, g, h):
        return self.mult[g][h]

    @staticmethod
    def cyclic(n):
        return FiniteGroup([[(i + j) % n for j in range(n)] for i in range(n)])


def cover_measure(G, group, voltage):
    """Uniform-lift measure of the regular cover given by a voltage map.

    voltage assigns a group element to each ordered pair of an edge (the
    reverse pair implicitly carries the inverse).  Vertices of the cover
    are (v, g); the edge (u, v) with voltage s joins (u, g) to (v, g*s).
    """
    if not isinstance(G, RootedGraph):
        raise ValueError("finite base graph required")
    volt = {}
    for (u, v), s in voltage.items():
        volt[(u, v)] = int(s)
        volt[(v, u)] = group.inv[int(s)]
    for u, v in G.edges:
        volt.setdefault((u, v), 0)
        volt.setdefault((v, u), 0)
    n = G.vertex_count
    m = group.order
    idx = lambda v, g: v * m + g
    edges = set()
    for u, v in G.edges:
        s = volt[(u, v)]
        for g in range(m):
            a, b = idx(u, g), idx(v, group.op(g, s))
            if a == b:
                raise ValueError("voltage produces a loop in the cover")
            edges.add((min(a, b), max(a, b)))
    try:
        cover = RootedGraph(n * m, edges, 0)
    except ValueError as exc:
        raise ValueError("cover is disconnected: %s" % exc)
    atoms = [Atom(cover.rerooted(idx(v, 0)), Fraction(1, n)) for v in range(n)]
    return RootedDistribution(atoms)
