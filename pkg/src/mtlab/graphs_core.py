"""Rooted and doubly rooted graphs, R-balls, canonical codes, local metric.

Graphs are finite, simple, connected and undirected.  Directed or parallel
structure (needed for coset graphs) rides on edge labels: ``edge_labels``
maps an ordered pair ``(u, v)`` to a tuple of symbols, and a loop at ``u``
is recorded as a label entry on ``(u, u)``.  The plain edge set never
contains loops or parallel edges.

Canonical codes are exact: equality of codes is equivalent to existence of
a root-preserving (and label-preserving) isomorphism.  The algorithm is
iterative color refinement with full backtracking on ties, so the worst
case is exponential; that is acceptable at the intended desk scale (balls
of at most a few hundred vertices, modest symmetry).
"""

from __future__ import annotations

from collections import deque
from fractions import Fraction
from functools import lru_cache

BallCode = bytes


def _normalize_labels(edge_labels):
    if not edge_labels:
        return ()
    norm = {}
    for (u, v), syms in edge_labels.items():
        if isinstance(syms, str):
            syms = (syms,)
        syms = tuple(sorted(str(s) for s in syms))
        if syms:
            norm[(int(u), int(v))] = syms
    return tuple(sorted(norm.items()))


class RootedGraph:
    """A finite connected simple graph with a distinguished root vertex.

    Parameters
    ----------
    vertex_count : int
        Number of vertices, indexed ``0 .. vertex_count - 1``.
    edges : iterable of pairs
        Unordered edges; loops and duplicates are rejected.
    root : int
    edge_labels : mapping, optional
        ``(u, v) -> symbol`` or ``(u, v) -> tuple of symbols`` on *ordered*
        pairs.  A non-loop labelled pair must be backed by an entry in
        ``edges``; ``(u, u)`` entries act as vertex marks / loop labels.
    """

    __slots__ = ("vertex_count", "edges", "root", "edge_labels",
                 "_adj", "_key", "_hash")

    def __init__(self, vertex_count, edges, root, edge_labels=None):
        n = int(vertex_count)
        if n < 1:
            raise ValueError("graph must have at least one vertex")
        es = set()
        for e in edges:
            u, v = int(e[0]), int(e[1])
            if u == v:
                raise ValueError("loops belong in edge_labels, not edges")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError("edge endpoint out of range")
            es.add((min(u, v), max(u, v)))
        if not (0 <= int(root) < n):
            raise ValueError("root out of range")
        labels = _normalize_labels(edge_labels)
        for (u, v), _ in labels:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError("labelled endpoint out of range")
            if u != v and (min(u, v), max(u, v)) not in es:
                raise ValueError("labelled pair (%d, %d) has no edge" % (u, v))
        object.__setattr__(self, "vertex_count", n)
        object.__setattr__(self, "edges", frozenset(es))
        object.__setattr__(self, "root", int(root))
        object.__setattr__(self, "edge_labels", dict(labels))
        adj = [[] for _ in range(n)]
        for u, v in es:
            adj[u].append(v)
            adj[v].append(u)
        object.__setattr__(self, "_adj", tuple(tuple(sorted(a)) for a in adj))
        key = (n, tuple(sorted(es)), int(root), labels)
        object.__setattr__(self, "_key", key)
        object.__setattr__(self, "_hash", hash(key))
        if n > 1:
            seen = self._bfs_distances(self.root)
            if any(d < 0 for d in seen):
                raise ValueError("graph is not connected")

    def __setattr__(self, name, value):
        raise AttributeError("RootedGraph is immutable")

    def __eq__(self, other):
        return isinstance(other, RootedGraph) and self._key == other._key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return "RootedGraph(n=%d, edges=%d, root=%d%s)" % (
            self.vertex_count, len(self.edges), self.root,
            ", labelled" if self.edge_labels else "")

    def neighbors(self, v):
        return self._adj[v]

    def degree(self, v):
        return len(self._adj[v])

    def _bfs_distances(self, source):
        dist = [-1] * self.vertex_count
        dist[source] = 0
        q = deque([source])
        while q:
            u = q.popleft()
            for w in self._adj[u]:
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    q.append(w)
        return dist

    def distances_from(self, v):
        """BFS distance list from v; -1 never occurs (graph connected)."""
        return self._bfs_distances(v)

    def rerooted(self, v):
        if not (0 <= v < self.vertex_count):
            raise ValueError("root out of range")
        return RootedGraph(self.vertex_count, self.edges, v, self.edge_labels)

    def to_json(self):
        out = {"vertices": self.vertex_count,
               "edges": sorted([u, v] for u, v in self.edges),
               "root": self.root}
        if self.edge_labels:
            labs = {}
            for (u, v), syms in sorted(self.edge_labels.items()):
                labs["%d-%d" % (u, v)] = list(syms) if len(syms) > 1 else syms[0]
            out["labels"] = labs
        return out

    @staticmethod
    def from_json(obj):
        labels = None
        if "labels" in obj and obj["labels"]:
            labels = {}
            for key, syms in obj["labels"].items():
                u, v = key.split("-")
                labels[(int(u), int(v))] = tuple(syms) if isinstance(syms, list) else syms
        return RootedGraph(obj["vertices"], obj["edges"], obj["root"], labels)


class DoublyRootedGraph:
    """A rooted graph with a second distinguished vertex (may equal root)."""

    __slots__ = ("graph", "second_root")

    def __init__(self, graph, second_root):
        if not (0 <= int(second_root) < graph.vertex_count):
            raise ValueError("second root out of range")
        object.__setattr__(self, "graph", graph)
        object.__setattr__(self, "second_root", int(second_root))

    def __setattr__(self, name, value):
        raise AttributeError("DoublyRootedGraph is immutable")

    def __eq__(self, other):
        return (isinstance(other, DoublyRootedGraph)
                and self.graph == other.graph
                and self.second_root == other.second_root)

    def __hash__(self):
        return hash((self.graph._key, self.second_root))

    def __repr__(self):
        return "DoublyRootedGraph(%r, q=%d)" % (self.graph, self.second_root)


# ---------------------------------------------------------------------------
# balls


def ball_with_map(G, v, R):
    """Induced R-ball around v, plus the old->new vertex index map."""
    if isinstance(G, GraphGenerator):
        return G.ball_with_map(v, R)
    if not (0 <= v < G.vertex_count):
        raise ValueError("unknown vertex handle %r" % (v,))
    dist = G.distances_from(v)
    keep = sorted((d, u) for u, d in enumerate(dist) if 0 <= d <= R)
    remap = {u: i for i, (_, u) in enumerate(keep)}
    edges = [(remap[a], remap[b]) for a, b in G.edges if a in remap and b in remap]
    labels = {}
    for (a, b), syms in G.edge_labels.items():
        if a in remap and b in remap:
            labels[(remap[a], remap[b])] = syms
    return RootedGraph(len(keep), edges, remap[v], labels or None), remap


def ball(G, v, R):
    """Induced subgraph on vertices within distance R of v, rooted at v."""
    return ball_with_map(G, v, R)[0]


# ---------------------------------------------------------------------------
# graph generators (lazy infinite graphs, represented through their balls)


class GraphGenerator:
    """Lazy representation of an infinite graph via finite R-balls.

    Rules: ``integer_line``, ``grid2d``, ``regular_tree`` (param ``k``),
    ``marked_line`` (param ``core_set``, a finite set of integers whose
    vertices carry a "core" mark as a loop label).
    """

    RULES = ("integer_line", "grid2d", "regular_tree", "marked_line")

    def __init__(self, name, params=None):
        if name not in self.RULES:
            raise ValueError("unknown generator rule %r" % (name,))
        self.name = name
        self.params = dict(params or {})
        if name == "regular_tree":
            k = int(self.params.get("k", 3))
            if k < 1:
                raise ValueError("regular_tree needs k >= 1")
            self.params["k"] = k
        if name == "marked_line":
            core = frozenset(int(x) for x in self.params.get("core_set", (0,)))
            self.params["core_set"] = core

    @property
    def transitive(self):
        return self.name in ("integer_line", "grid2d", "regular_tree")

    def root_handle(self):
        if self.name == "grid2d":
            return (0, 0)
        return 0

    def core_mass(self):
        """Vertices satisfying the built-in core mark, for audits."""
        if self.name == "marked_line":
            return len(self.params["core_set"])
        return 0

    def ball_with_map(self, v, R):
        R = int(R)
        if R < 0:
            raise ValueError("radius must be nonnegative")
        if self.name in ("integer_line", "marked_line"):
            c = int(v)
            verts = list(range(c - R, c + R + 1))
            remap = {x: i for i, x in enumerate(verts)}
            edges = [(i, i + 1) for i in range(len(verts) - 1)]
            labels = None
            if self.name == "marked_line":
                core = self.params["core_set"]
                labels = {(remap[x], remap[x]): ("core",)
                          for x in verts if x in core} or None
            return RootedGraph(len(verts), edges, remap[c], labels), remap
        if self.name == "grid2d":
            ci, cj = int(v[0]), int(v[1])
            verts = sorted((i, j)
                           for i in range(ci - R, ci + R + 1)
                           for j in range(cj - R, cj + R + 1)
                           if abs(i - ci) + abs(j - cj) <= R)
            remap = {x: i for i, x in enumerate(verts)}
            edges = []
            for (i, j) in verts:
                if (i + 1, j) in remap:
                    edges.append((remap[(i, j)], remap[(i + 1, j)]))
                if (i, j + 1) in remap:
                    edges.append((remap[(i, j)], remap[(i, j + 1)]))
            return RootedGraph(len(verts), edges, remap[(ci, cj)], None), remap
        # regular_tree: same ball around every handle
        k = self.params["k"]
        edges = []
        parent = [None]
        layer = [0]
        count = 1
        for depth in range(R):
            nxt = []
            for node in layer:
                need = k if node == 0 else k - 1
                for _ in range(need):
                    edges.append((node, count))
                    parent.append(node)
                    nxt.append(count)
                    count += 1
            layer = nxt
        remap = {i: i for i in range(count)}
        return RootedGraph(count, edges, 0, None), remap

    def ball(self, v, R):
        return self.ball_with_map(v, R)[0]

    def to_json(self):
        params = {}
        for key, val in self.params.items():
            params[key] = sorted(val) if isinstance(val, frozenset) else val
        return {"name": self.name, "params": params}

    @staticmethod
    def from_json(obj):
        return GraphGenerator(obj["name"], obj.get("params"))

    def __repr__(self):
        return "GraphGenerator(%r, %r)" % (self.name, self.params)


# ---------------------------------------------------------------------------
# canonical codes


def _annotations(g):
    """Per ordered pair (v, u): (labels out of v, labels into v)."""
    ann = {}
    for u, v in g.edges:
        a_uv = g.edge_labels.get((u, v), ())
        a_vu = g.edge_labels.get((v, u), ())
        ann[(u, v)] = (a_uv, a_vu)
        ann[(v, u)] = (a_vu, a_uv)
    return ann


def _loop_attr(g, v):
    return g.edge_labels.get((v, v), ())


def _refine(n, adj, ann, colors):
    while True:
        keys = []
        for v in range(n):
            nb = tuple(sorted((colors[u], ann[(v, u)]) for u in adj[v]))
            keys.append((colors[v], nb))
        remap = {k: i for i, k in enumerate(sorted(set(keys)))}
        new = [remap[k] for k in keys]
        if new == colors:
            return colors
        colors = new


def _encode(g, roots, colors):
    pos = colors
    edges = tuple(sorted((min(pos[u], pos[v]), max(pos[u], pos[v]))
                         for u, v in g.edges))
    labs = tuple(sorted((pos[u], pos[v], syms)
                        for (u, v), syms in g.edge_labels.items()))
    return (g.vertex_count, tuple(pos[r] for r in roots), edges, labs)


def _search(g, adj, ann, roots, colors, best):
    n = g.vertex_count
    colors = _refine(n, adj, ann, colors)
    ncls = max(colors) + 1
    if ncls == n:
        enc = _encode(g, roots, colors)
        return enc if best is None or enc < best else best
    # first non-singleton class, then branch over each of its members
    counts = [0] * ncls
    for c in colors:
        counts[c] += 1
    target = next(c for c in range(ncls) if counts[c] > 1)
    members = [v for v in range(n) if colors[v] == target]
    for v in members:
        child = [2 * c for c in colors]
        child[v] -= 1
        best = _search(g, adj, ann, roots, child, best)
    return best


@lru_cache(maxsize=1 << 17)
def _canonical_cached(key, roots):
    g = _graph_from_key(key)
    adj = g._adj
    ann = _annotations(g)
    seeds = []
    for v in range(g.vertex_count):
        attr = (tuple(r == v for r in roots), _loop_attr(g, v))
        seeds.append(attr)
    remap = {k: i for i, k in enumerate(sorted(set(seeds)))}
    colors = [remap[s] for s in seeds]
    enc = _search(g, adj, ann, roots, colors, None)
    return repr(enc).encode("ascii")


@lru_cache(maxsize=1 << 14)
def _graph_from_key(key):
    n, edges, root, labels = key
    return RootedGraph(n, edges, root, dict(labels) or None)


def canonical_code(B):
    """Exact canonical byte string of a rooted or doubly rooted graph.

    Codes are equal iff the graphs are isomorphic by a map preserving the
    root(s) and all edge labels.
    """
    if isinstance(B, DoublyRootedGraph):
        return _canonical_cached(B.graph._key, (B.graph.root, B.second_root))
    return _canonical_cached(B._key, (B.root,))


def ball_code(G, v, R):
    """canonical_code of the R-ball around v; accepts graphs or generators."""
    return canonical_code(ball(G, v, R))


def doubly_rooted_ball_code(G, p, q, R):
    """Code of the R-ball around p with q marked; q must lie in the ball."""
    b, remap = ball_with_map(G, p, R)
    if q not in remap:
        raise ValueError("second root outside the ball")
    return canonical_code(DoublyRootedGraph(b, remap[q]))


# ---------------------------------------------------------------------------
# local metric


def rooted_distance(G1, G2, R_max):
    """1/(1+R) where R is the first radius <= R_max with non-isomorphic
    R-balls around the roots; 0 if all balls agree up to R_max."""
    R_max = int(R_max)
    for R in range(R_max + 1):
        c1 = (ball_code(G1, G1.root_handle(), R)
              if isinstance(G1, GraphGenerator) else ball_code(G1, G1.root, R))
        c2 = (ball_code(G2, G2.root_handle(), R)
              if isinstance(G2, GraphGenerator) else ball_code(G2, G2.root, R))
        if c1 != c2:
            return Fraction(1, 1 + R)
    return Fraction(0)


# ---------------------------------------------------------------------------
# small constructors used across the test-suites


def cycle_graph(n, root=0):
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    return RootedGraph(n, [(i, (i + 1) % n) for i in range(n)], root)


def path_graph(n, root=0):
    return RootedGraph(n, [(i, i + 1) for i in range(n - 1)], root)


def star_graph(leaves, root=0):
    return RootedGraph(leaves + 1, [(0, i) for i in range(1, leaves + 1)], root)


def complete_graph(n, root=0):
    return RootedGraph(n, [(i, j) for i in range(n) for j in range(i + 1, n)], root)
