"""Local weak-convergence diagnostics: ball statistics at random roots,
the radius-weighted total-variation distance, and family-vs-limit tables.

distance(mu, nu) = sum over R = 1..R_max of 2^{-R} * TV(stats_R(mu), stats_R(nu))

Exact rational statistics whenever the input has finite support; seeded
Monte Carlo (with Wilson intervals) otherwise or on request.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .graphs_core import GraphGenerator, RootedGraph, ball_code
from .mass_transport import RootedDistribution, _ball_around, _structure_key


@dataclass
class BallStatistics:
    """Distribution of canonical R-ball codes at the root."""
    radius: int
    freqs: dict
    n_samples: int = None
    intervals: dict = None

    def __post_init__(self):
        total = sum(self.freqs.values())
        if any(f < 0 for f in self.freqs.values()):
            raise ValueError("negative frequency")
        if isinstance(total, Fraction):
            if total != 1:
                raise ValueError("frequencies must sum to 1, got %s" % total)
        elif abs(total - 1.0) > 1e-12:
            raise ValueError("frequencies must sum to 1, got %r" % total)

    @property
    def exact(self):
        return self.n_samples is None


def wilson_interval(successes, n, z=1.96):
    p = successes / n
    denom = 1 + z * z / n
    center = p + z * z / (2 * n)
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    return ((center - half) / denom, (center + half) / denom)


def _root_code_of_graph(G, v, R):
    b, _ = _ball_around(_structure_key(G), v, R)
    from .graphs_core import canonical_code
    return canonical_code(b)


def _exact_vertex_codes(G, R):
    return [_root_code_of_graph(G, v, R) for v in range(G.vertex_count)]


def ball_statistics(source, R, mc_samples=None, seed=None):
    """Exact or sampled distribution of root R-ball codes.

    source: a finite RootedGraph (uniform root), a finite-support or
    sampler-backed RootedDistribution, or a transitive GraphGenerator.
    """
    R = int(R)
    if isinstance(source, GraphGenerator):
        if not source.transitive:
            raise ValueError("root statistics of a non-transitive rule need "
                             "an explicit root measure")
        code = ball_code(source, source.root_handle(), R)
        return BallStatistics(R, {code: Fraction(1)})

    if isinstance(source, RootedGraph):
        codes = _exact_vertex_codes(source, R)
        weights = [Fraction(1, source.vertex_count)] * source.vertex_count
    elif isinstance(source, RootedDistribution):
        if source.sampler is not None:
            if mc_samples is None:
                raise ValueError("sampler-backed measures need mc_samples")
            return _sampled_statistics(source, R, int(mc_samples), seed)
        if not source.finite_support:
            raise ValueError("generator atoms have no root statistics")
        codes = [_root_code_of_graph(a.graph, a.graph.root, R) for a in source.atoms]
        total = source.total_weight()
        weights = [a.weight / total for a in source.atoms]
    else:
        raise TypeError("unsupported source %r" % type(source))

    if mc_samples is None:
        freqs = {}
        for code, w in zip(codes, weights):
            freqs[code] = freqs.get(code, Fraction(0)) + w
        return BallStatistics(R, freqs)

    # draw root classes at once; each draw lands on one precomputed code
    import numpy as np
    if seed is None:
        raise ValueError("Monte Carlo mode requires a seed")
    n = int(mc_samples)
    rng = np.random.default_rng(seed)
    p = np.array([float(w) for w in weights])
    p = p / p.sum()
    counts = rng.multinomial(n, p)
    hits = {}
    for code, k in zip(codes, counts):
        hits[code] = hits.get(code, 0) + int(k)
    freqs = {c: k / n for c, k in hits.items() if k}
    intervals = {c: wilson_interval(k, n) for c, k in hits.items() if k}
    return BallStatistics(R, freqs, n_samples=n, intervals=intervals)


def _sampled_statistics(mu, R, n, seed):
    import numpy as np
    if seed is None:
        raise ValueError("Monte Carlo mode requires a seed")
    rng = np.random.default_rng(seed)
    hits = {}
    for _ in range(n):
        G = mu.sample(rng)
        code = _root_code_of_graph(G, G.root, R)
        hits[code] = hits.get(code, 0) + 1
    freqs = {c: k / n for c, k in hits.items()}
    intervals = {c: wilson_interval(k, n) for c, k in hits.items()}
    return BallStatistics(R, freqs, n_samples=n, intervals=intervals)


def total_variation(sa, sb):
    """Half the L1 gap between two code histograms; Fraction when both are
    exact, float otherwise."""
    exact = sa.exact and sb.exact
    acc = Fraction(0) if exact else 0.0
    # sorted so float accumulation order never depends on hash seeding
    for code in sorted(set(sa.freqs) | set(sb.freqs)):
        a = sa.freqs.get(code, 0)
        b = sb.freqs.get(code, 0)
        diff = a - b
        if diff < 0:
            diff = -diff
        acc = acc + diff
    return acc / 2


def bs_distance_rows(mu, nu, R_max, mc_samples=None, seed=None):
    """Per-radius discrepancy table: rows of (R, tv, weight, contribution)."""
    rows = []
    for R in range(1, int(R_max) + 1):
        sa = ball_statistics(mu, R, mc_samples=mc_samples,
                             seed=None if seed is None else seed + 2 * R)
        sb = ball_statistics(nu, R, mc_samples=mc_samples,
                             seed=None if seed is None else seed + 2 * R + 1)
        tv = total_variation(sa, sb)
        weight = Fraction(1, 2 ** R)
        contribution = weight * tv if isinstance(tv, Fraction) else float(weight) * tv
        rows.append({"R": R, "tv": tv, "weight": weight,
                     "contribution": contribution})
    return rows


def bs_distance(mu, nu, R_max, mc_samples=None, seed=None):
    rows = bs_distance_rows(mu, nu, R_max, mc_samples=mc_samples, seed=seed)
    if all(isinstance(r["contribution"], Fraction) for r in rows):
        return sum((r["contribution"] for r in rows), Fraction(0))
    return float(sum(float(r["contribution"]) for r in rows))


def limit_diagnostic(family, candidate, R_max, mc_samples=None, seed=None):
    """Distance of each family member to the candidate limit.

    Returns rows of (size, distance) in family order; Monte Carlo draws are
    deterministic per (seed, member index).
    """
    rows = []
    for i, member in enumerate(family):
        member_seed = None if seed is None else seed + 1000 * i
        d = bs_distance(member, candidate, R_max,
                        mc_samples=mc_samples, seed=member_seed)
        size = member.vertex_count if isinstance(member, RootedGraph) else None
        rows.append({"size": size, "distance": d})
    return rows


# ---------------------------------------------------------------------------
# family constructors for the diagnostics


def torus_graph(n, root=0):
    """(Z/n)^2 with unit steps; n >= 3 keeps the graph simple."""
    if n < 3:
        raise ValueError("torus needs n >= 3")
    idx = lambda i, j: (i % n) * n + (j % n)
    edges = set()
    for i in range(n):
        for j in range(n):
            edges.add(tuple(sorted((idx(i, j), idx(i + 1, j)))))
            edges.add(tuple(sorted((idx(i, j), idx(i, j + 1)))))
    return RootedGraph(n * n, edges, root)


def barbell_graph(n, root=0):
    """Two n-by-n grid patches joined corner to corner by a path of n edges."""
    if n < 2:
        raise ValueError("barbell needs n >= 2")
    a = lambda i, j: i * n + j
    b = lambda i, j: n * n + i * n + j
    edges = []
    for i in range(n):
        for j in range(n):
            if i + 1 < n:
                edges.append((a(i, j), a(i + 1, j)))
                edges.append((b(i, j), b(i + 1, j)))
            if j + 1 < n:
                edges.append((a(i, j), a(i, j + 1)))
                edges.append((b(i, j), b(i, j + 1)))
    bridge = [2 * n * n + k for k in range(n - 1)]
    chain = [a(n - 1, n - 1)] + bridge + [b(0, 0)]
    for u, v in zip(chain, chain[1:]):
        edges.append((u, v))
    return RootedGraph(2 * n * n + n - 1, edges, root)
