"""Poisson processes on finite weighted spaces, the reciprocal weighting
that conditions on a nonempty sample, and stabilizer statistics.

The process keeps latent multiplicities: point i receives Poisson(w_i)
arrivals, so the count over any region A is exactly Poisson(sum of its
weights), disjoint regions are independent by construction, and given the
total count the arrival locations are i.i.d. proportional to the weights.
The set-model sample is the presence set {arrivals >= 1}, so a point shows
up with probability 1 - e^{-w}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np
from scipy import stats


class WeightedSpace:
    """Finite point set with positive weights and optional symmetries."""

    def __init__(self, points, weights, automorphisms=None):
        self.points = tuple(points)
        self.weights = np.asarray(weights, dtype=float)
        if len(self.points) != len(self.weights):
            raise ValueError("one weight per point required")
        if len(self.points) == 0:
            raise ValueError("space needs at least one point")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")
        self.automorphisms = None
        if automorphisms is not None:
            n = len(self.points)
            perms = [tuple(int(x) for x in p) for p in automorphisms]
            for p in perms:
                if sorted(p) != list(range(n)):
                    raise ValueError("automorphism is not a permutation")
                if any(abs(self.weights[p[i]] - self.weights[i]) > 1e-12
                       for i in range(n)):
                    raise ValueError("automorphism does not preserve weights")
            self.automorphisms = perms

    @property
    def volume(self):
        return float(self.weights.sum())

    def __len__(self):
        return len(self.points)

    def to_json(self):
        out = {"points": list(self.points), "weights": [float(w) for w in self.weights]}
        if self.automorphisms is not None:
            out["automorphisms"] = [list(p) for p in self.automorphisms]
        return out

    @staticmethod
    def from_json(obj):
        return WeightedSpace(obj["points"], obj["weights"], obj.get("automorphisms"))


@dataclass(frozen=True)
class PointProcessSample:
    """Presence set of one draw."""
    indices: frozenset
    points: tuple

    def __len__(self):
        return len(self.indices)

    @property
    def empty(self):
        return not self.indices


def presence_probability(w):
    return -math.expm1(-w)


def sample_poisson(X, seed):
    """One draw of the presence set (multiplicities folded to presence)."""
    if seed is None:
        raise ValueError("a seed is required")
    rng = np.random.default_rng(seed)
    arrivals = rng.poisson(X.weights)
    idx = frozenset(int(i) for i in np.nonzero(arrivals)[0])
    return PointProcessSample(idx, tuple(X.points[i] for i in sorted(idx)))


def desingularization_weight(vol):
    """Reciprocal of the nonempty-sample probability 1 - e^{-vol}."""
    vol = float(vol)
    if vol <= 0:
        raise ValueError("volume must be positive")
    return 1.0 / -math.expm1(-vol)


def desingularization_identity(vol):
    """weight * P(nonempty), carried out in exact rational arithmetic on
    the computed presence probability; equals 1 identically."""
    x = Fraction(-math.expm1(-float(vol)))
    return (Fraction(1) / x) * x


def _chi_square_counts(counts, lam, n):
    """Chi-square p-value of observed counts against Poisson(lam), lumping
    the tail so every expected cell has mass >= 5."""
    kmax = int(counts.max()) if len(counts) else 0
    # choose the tail cut so the lumped tail keeps expectation >= 5
    cut = kmax
    while cut > 0 and n * (1 - stats.poisson.cdf(cut - 1, lam)) < 5:
        cut -= 1
    edges = list(range(cut + 1))
    obs = np.array([np.sum(counts == k) for k in edges] + [np.sum(counts > cut)],
                   dtype=float)
    exp = np.array([n * stats.poisson.pmf(k, lam) for k in edges]
                   + [n * (1 - stats.poisson.cdf(cut, lam))])
    keep = exp > 0
    obs, exp = obs[keep], exp[keep]
    exp = exp * obs.sum() / exp.sum()
    if len(obs) < 2:
        return 1.0
    return float(stats.chisquare(obs, exp).pvalue)


def poisson_audit(X, A, n_samples, seed):
    """Count-law and placement-law audit over the region A.

    Counts over A are tested against Poisson(vol A); conditionally on the
    total count, arrival locations are tested against the weight law.
    """
    n = int(n_samples)
    if n < 1000:
        raise ValueError("audit needs at least 1000 samples")
    A = [int(a) for a in A]
    if len(set(A)) != len(A):
        raise ValueError("region has duplicate points")
    if any(not (0 <= a < len(X)) for a in A):
        raise ValueError("region leaves the space")
    if not A:
        return {"count_hist": {0: 1.0}, "count_pvalue": 1.0,
                "ks_pvalue": 1.0, "janossy_uniformity": 1.0,
                "volume": 0.0, "n_samples": n}
    rng = np.random.default_rng(seed)
    wA = X.weights[A]
    volA = float(wA.sum())
    arrivals = rng.poisson(lam=wA, size=(n, len(A)))
    counts = arrivals.sum(axis=1)

    hist = {}
    for k in np.unique(counts):
        hist[int(k)] = float(np.mean(counts == k))
    count_p = _chi_square_counts(counts, volA, n)
    # counts are heavily tied, so KS straight against the discrete cdf
    # registers whole atom masses as deviation; the randomized transform
    # is exactly uniform under the null and keeps KS applicable
    law = stats.poisson(volA)
    u = law.cdf(counts - 1) + rng.random(n) * law.pmf(counts)
    ks_p = float(stats.kstest(u, "uniform").pvalue)

    totals = arrivals.sum(axis=0).astype(float)
    grand = totals.sum()
    if grand == 0:
        janossy_p = 1.0
    else:
        expected = grand * wA / volA
        order = np.argsort(expected)
        obs_l, exp_l = [], []
        acc_o = acc_e = 0.0
        for j in order:
            acc_o += totals[j]
            acc_e += expected[j]
            if acc_e >= 5:
                obs_l.append(acc_o)
                exp_l.append(acc_e)
                acc_o = acc_e = 0.0
        if exp_l:
            obs_l[-1] += acc_o
            exp_l[-1] += acc_e
        else:
            obs_l, exp_l = [acc_o], [acc_e]
        if len(obs_l) < 2:
            janossy_p = 1.0
        else:
            janossy_p = float(stats.chisquare(obs_l, exp_l).pvalue)

    return {"count_hist": hist, "count_pvalue": count_p, "ks_pvalue": ks_p,
            "janossy_uniformity": janossy_p, "volume": volA, "n_samples": n}


def independence_audit(X, A, B, n_samples, seed):
    """Empirical correlation of counts over two disjoint regions, with the
    4-sigma band around zero."""
    A, B = [int(a) for a in A], [int(b) for b in B]
    if set(A) & set(B):
        raise ValueError("regions overlap")
    n = int(n_samples)
    rng = np.random.default_rng(seed)
    ca = rng.poisson(lam=X.weights[A], size=(n, len(A))).sum(axis=1)
    cb = rng.poisson(lam=X.weights[B], size=(n, len(B))).sum(axis=1)
    corr = float(np.corrcoef(ca, cb)[0, 1])
    return {"correlation": corr, "four_sigma": 4.0 / math.sqrt(n)}


def restriction_audit(X, A, n_samples, seed):
    """Process on X restricted to A versus the process on the subspace A:
    two-sample chi-square on the count histograms."""
    A = [int(a) for a in A]
    if not A:
        raise ValueError("restriction to an empty region is degenerate")
    n = int(n_samples)
    rng = np.random.default_rng(seed)
    big = rng.poisson(lam=X.weights, size=(n, len(X)))[:, A].sum(axis=1)
    sub_space = WeightedSpace([X.points[a] for a in A], X.weights[A])
    small = rng.poisson(lam=sub_space.weights, size=(n, len(A))).sum(axis=1)
    kmax = int(max(big.max(), small.max()))
    table = np.array([[np.sum(big == k) for k in range(kmax + 1)],
                      [np.sum(small == k) for k in range(kmax + 1)]], dtype=float)
    keep = table.sum(axis=0) >= 5
    if keep.sum() < 2:
        return {"pvalue": 1.0}
    table = table[:, keep]
    return {"pvalue": float(stats.chi2_contingency(table).pvalue)}


# ---------------------------------------------------------------------------
# stabilizer statistics


def graph_automorphisms(G):
    """All automorphisms of a small graph, by backtracking on adjacency."""
    n = G.vertex_count
    if n > 10:
        raise ValueError("automorphism enumeration capped at 10 vertices")
    adj = [set(G.neighbors(v)) for v in range(n)]
    deg = [G.degree(v) for v in range(n)]
    out = []

    def extend(mapping):
        i = len(mapping)
        if i == n:
            out.append(tuple(mapping))
            return
        used = set(mapping)
        for c in range(n):
            if c in used or deg[c] != deg[i]:
                continue
            if all((j in adj[i]) == (mapping[j] in adj[c]) for j in range(i)):
                mapping.append(c)
                extend(mapping)
                mapping.pop()

    extend([])
    return out


def _stabilizer_size(mask_set, autos):
    return sum(1 for p in autos if frozenset(p[v] for v in mask_set) == mask_set)


def stabilizer_statistics(G, n_samples, seed, weights=None):
    """Law of the symmetry count fixing a nonempty sample setwise, both
    sampled and by exact enumeration of all nonempty subsets."""
    n = G.vertex_count
    autos = graph_automorphisms(G)
    w = np.full(n, 1.0) if weights is None else np.asarray(weights, dtype=float)
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    p_in = -np.expm1(-w)

    exact = {}
    stab_of = {}
    for r in range(1, n + 1):
        for sub in combinations(range(n), r):
            D = frozenset(sub)
            size = _stabilizer_size(D, autos)
            stab_of[D] = size
            prob = 1.0
            for v in range(n):
                prob *= p_in[v] if v in D else (1.0 - p_in[v])
            exact[size] = exact.get(size, 0.0) + prob
    nonempty = sum(exact.values())
    exact = {k: v / nonempty for k, v in exact.items()}

    m = int(n_samples)
    rng = np.random.default_rng(seed)
    present = rng.random((m, n)) < p_in
    keep = present.any(axis=1)
    used = int(keep.sum())
    empirical = {}
    for row in present[keep]:
        D = frozenset(int(i) for i in np.nonzero(row)[0])
        size = stab_of[D]
        empirical[size] = empirical.get(size, 0) + 1
    empirical = {k: v / used for k, v in empirical.items()}

    max_sigma = 0.0
    for size, p in exact.items():
        se = math.sqrt(p * (1 - p) / used) if 0 < p < 1 else 0.0
        dev = abs(empirical.get(size, 0.0) - p)
        if se > 0:
            max_sigma = max(max_sigma, dev / se)
        elif dev > 0:
            max_sigma = math.inf
    return {"empirical": empirical, "exact": exact,
            "n_used": used, "max_dev_sigma": max_sigma,
            "aut_order": len(autos)}
