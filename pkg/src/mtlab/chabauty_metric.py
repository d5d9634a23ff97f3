"""Hausdorff and hypograph metrics on finite spaces, tapered pseudo-metrics
around a base point, and the comparison/distortion/convergence audits.

For [0,1]-valued functions phi, psi on a finite metric space, the distance
between their hypographs (in K x [0,1] with the sum metric) collapses to

    max over x of  min over y of  [ d(x,y) + max(0, phi(x) - psi(y)) ]

symmetrized; the sup side is attained at the graph points (x, phi(x))
because the inner minimum is nondecreasing in s.  An s-axis discretization
oracle validates the formula independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class FiniteMetricSpace:
    """Finite point set with an exact distance matrix and a base point."""

    def __init__(self, dist, base=0):
        self.dist = np.asarray(dist, dtype=float)
        n = self.dist.shape[0]
        if self.dist.shape != (n, n):
            raise ValueError("distance matrix must be square")
        if not np.allclose(self.dist, self.dist.T, atol=1e-12):
            raise ValueError("distance matrix must be symmetric")
        if np.any(np.abs(np.diag(self.dist)) > 1e-12):
            raise ValueError("diagonal must vanish")
        if np.any(self.dist < -1e-12):
            raise ValueError("distances must be nonnegative")
        for k in range(n):
            via = self.dist[:, k][:, None] + self.dist[k, :][None, :]
            if np.any(self.dist > via + 1e-12):
                raise ValueError("triangle inequality fails through point %d" % k)
        if not (0 <= int(base) < n):
            raise ValueError("base point out of range")
        self.base = int(base)
        self.n = n

    def d(self, i, j):
        return float(self.dist[i, j])

    def to_json(self):
        return {"dist": [[float(x) for x in row] for row in self.dist],
                "base": self.base}

    @staticmethod
    def from_json(obj):
        return FiniteMetricSpace(obj["dist"], obj.get("base", 0))

    @staticmethod
    def from_points(xs, base=0):
        """Points on the real line."""
        xs = np.asarray(xs, dtype=float)
        return FiniteMetricSpace(np.abs(xs[:, None] - xs[None, :]), base)

    @staticmethod
    def from_plane(pts, base=0):
        pts = np.asarray(pts, dtype=float)
        diff = pts[:, None, :] - pts[None, :, :]
        return FiniteMetricSpace(np.sqrt((diff ** 2).sum(axis=2)), base)


class UscFunction:
    """[0,1]-valued function on the points of a space."""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)
        if np.any(self.values < -1e-15) or np.any(self.values > 1 + 1e-15):
            raise ValueError("values must lie in [0, 1]")
        self.values = np.clip(self.values, 0.0, 1.0)

    def __len__(self):
        return len(self.values)

    def support(self):
        return frozenset(int(i) for i in np.nonzero(self.values > 0)[0])


@dataclass(frozen=True)
class ClosedSubset:
    indices: frozenset

    @staticmethod
    def of(K, items):
        idx = frozenset(int(i) for i in items)
        if any(not (0 <= i < K.n) for i in idx):
            raise ValueError("subset leaves the space")
        return ClosedSubset(idx)


def _indices(K, A):
    if isinstance(A, ClosedSubset):
        return A.indices
    return ClosedSubset.of(K, A).indices


def indicator(K, A):
    v = np.zeros(K.n)
    for i in _indices(K, A):
        v[i] = 1.0
    return UscFunction(v)


def hausdorff(K, A, B):
    """Classical Hausdorff distance between nonempty subsets."""
    A, B = _indices(K, A), _indices(K, B)
    if not A or not B:
        raise ValueError("Hausdorff distance needs nonempty sets")
    ia, ib = sorted(A), sorted(B)
    sub = K.dist[np.ix_(ia, ib)]
    return float(max(sub.min(axis=1).max(), sub.min(axis=0).max()))


def _directed_usc(K, phi, psi):
    gap = np.maximum(0.0, phi[:, None] - psi[None, :])
    return float((K.dist + gap).min(axis=1).max())


def usc_distance(K, phi, psi):
    """Hausdorff distance between the hypographs, in closed form."""
    p = phi.values if isinstance(phi, UscFunction) else np.asarray(phi, float)
    q = psi.values if isinstance(psi, UscFunction) else np.asarray(psi, float)
    return max(_directed_usc(K, p, q), _directed_usc(K, q, p))


def usc_distance_grid(K, phi, psi, resolution=1e-4):
    """Independent oracle: scan the s-axis of the first hypograph on a grid
    and measure against the second hypograph discretized the same way."""
    p = phi.values if isinstance(phi, UscFunction) else np.asarray(phi, float)
    q = psi.values if isinstance(psi, UscFunction) else np.asarray(psi, float)
    return max(_directed_grid(K, p, q, resolution),
               _directed_grid(K, q, p, resolution))


def _directed_grid(K, phi, psi, h):
    worst = 0.0
    for x in range(K.n):
        top = phi[x]
        S = np.arange(0.0, top, h)
        S = np.append(S, top)
        best = np.full(S.shape, np.inf)
        for y in range(K.n):
            t_top = psi[y]
            t_cut = math.floor(t_top / h) * h
            above = np.maximum(0.0, S - t_top)
            mod = np.mod(S, h)
            onbelow = np.minimum(mod, h - mod)
            # distance from s to {0, h, ..., t_cut} u {t_top}
            interior = np.where(S <= t_cut, np.minimum(onbelow, np.abs(S - t_top)),
                                np.minimum(np.abs(S - t_cut), np.abs(S - t_top)))
            dist_s = np.where(S >= t_top, above, interior)
            best = np.minimum(best, K.dist[x, y] + dist_s)
        worst = max(worst, float(best.max()))
    return worst


def weighted_hausdorff(K, A, B, phi):
    """Hausdorff distance with importance scaled by phi; empty sets give the
    zero function."""
    p = phi.values if isinstance(phi, UscFunction) else np.asarray(phi, float)
    a = np.zeros(K.n)
    b = np.zeros(K.n)
    for i in _indices(K, A):
        a[i] = p[i]
    for i in _indices(K, B):
        b[i] = p[i]
    return usc_distance(K, a, b)


def taper(K, R):
    """Weight (R - d(base, x))/R clipped at 0: value 1 at the base, slope
    1/R, vanishing at distance R and beyond."""
    vals = np.clip((R - K.dist[K.base]) / R, 0.0, 1.0)
    return UscFunction(vals)


def tapered_pseudometric(K, A, B, R):
    if R <= 0:
        raise ValueError("radius must be positive")
    return weighted_hausdorff(K, A, B, taper(K, R))


# ---------------------------------------------------------------------------
# audits


def random_metric_space(rng, n=8, base=0):
    """Random metric via shortest-path completion of a random weight matrix."""
    raw = rng.uniform(0.2, 1.5, size=(n, n))
    raw = (raw + raw.T) / 2
    np.fill_diagonal(raw, 0.0)
    dist = raw.copy()
    for k in range(n):
        dist = np.minimum(dist, dist[:, k][:, None] + dist[k, :][None, :])
    return FiniteMetricSpace(dist, base)


def lipschitz_smoothing(K, raw_values, lam):
    """Infimal convolution min_y [raw(y) + lam*d(x,y)]: lam-lipschitz by
    construction, and pointwise at most raw."""
    raw = np.asarray(raw_values, dtype=float)
    vals = (raw[None, :] + lam * K.dist).min(axis=1)
    return UscFunction(np.clip(vals, 0.0, 1.0))


def lipschitz_constant(K, phi):
    p = phi.values if isinstance(phi, UscFunction) else np.asarray(phi, float)
    off = K.dist > 1e-12
    ratios = np.abs(p[:, None] - p[None, :])[off] / K.dist[off]
    return float(ratios.max()) if ratios.size else 0.0


def lemchab_audit(trials, seed, n=8):
    """Weighted-Hausdorff comparison audit.

    Each trial builds a lam-lipschitz phi by infimal convolution and a psi
    dominating phi/C pointwise (phi vanishes off psi's support, the reading
    the proof's t = 0 step requires), then checks

        weighted(phi) <= max(C, lam + 1) * weighted(psi)

    over random subset pairs.  Returns the number of violations and a
    certificate for the first one.
    """
    rng = np.random.default_rng(seed)
    violations = 0
    certificate = None
    for trial in range(int(trials)):
        K = random_metric_space(rng, n)
        lam = float(rng.uniform(0.3, 3.0))
        psi = UscFunction(np.where(rng.random(n) < 0.8, rng.uniform(0.05, 1.0, n), 0.0))
        raw = rng.uniform(0.0, 1.0, n)
        raw[psi.values == 0] = 0.0
        phi = lipschitz_smoothing(K, raw, lam)
        # pointwise domination constant; C covers the support and phi is 0 off it
        mask = psi.values > 0
        ratios = phi.values[mask] / psi.values[mask]
        C = float(ratios.max()) if ratios.size else 1.0
        A = [i for i in range(n) if rng.random() < 0.5]
        B = [i for i in range(n) if rng.random() < 0.5]
        lhs = weighted_hausdorff(K, A, B, phi)
        rhs = max(C, lam + 1) * weighted_hausdorff(K, A, B, psi)
        if lhs > rhs + 1e-9:
            violations += 1
            if certificate is None:
                certificate = {"trial": trial, "lhs": lhs, "rhs": rhs,
                               "C": C, "lam": lam,
                               "A": sorted(A), "B": sorted(B),
                               "dist": K.to_json(),
                               "phi": phi.values.tolist(),
                               "psi": psi.values.tolist()}
    return {"trials": int(trials), "violations": violations,
            "certificate": certificate}


def lemchab_necessity_demo(eps=1e-3):
    """The sharp-peak phi against a constant psi: the raw inequality with a
    small claimed lipschitz constant fails, but the claimed constant is a
    lie, so the verdict is a hypothesis violation rather than a failure."""
    K = FiniteMetricSpace.from_points([0.0, eps, 1.0])
    phi = UscFunction([1.0, 0.0, 0.0])      # approximates the peak at x
    psi = UscFunction([1.0, 1.0, 1.0])
    claimed_lam = 1.0
    C = 1.0
    lhs = weighted_hausdorff(K, [0], [1], phi)
    rhs = max(C, claimed_lam + 1) * weighted_hausdorff(K, [0], [1], psi)
    actual_lam = lipschitz_constant(K, phi)
    return {"lhs": lhs, "rhs": rhs,
            "raw_inequality_holds": lhs <= rhs + 1e-12,
            "claimed_lam": claimed_lam, "actual_lam": actual_lam,
            "verdict": "HYPOTHESIS-VIOLATED" if actual_lam > claimed_lam else "FAIL"}


def distortion_audit(K1, K2, f, lam, R1, R2, trials, seed):
    """Pullback comparison: tapered distance in the source at radius R1
    against lam times the tapered distance in the target at radius R2.

    Preconditions (base point match, R1 >= 1, R2 >= lam*R1, bilipschitz
    bound on all pairs) are reported distinctly from inequality failures.
    """
    f = [int(x) for x in f]
    problems = []
    if len(f) != K1.n:
        problems.append("map must cover the source space")
    elif f[K1.base] != K2.base:
        problems.append("map does not send base point to base point")
    if R1 < 1:
        problems.append("source radius below 1")
    if R2 < lam * R1 - 1e-12:
        problems.append("target radius below lam * source radius")
    if not problems:
        ball = [x for x in range(K1.n) if K1.dist[K1.base, x] <= R1]
        if len({f[x] for x in ball}) != len(ball):
            problems.append("map is not injective on the source ball")
        for x in range(K1.n):
            for y in range(x + 1, K1.n):
                dxy = K1.dist[x, y]
                dfx = K2.dist[f[x], f[y]]
                if dfx > lam * dxy + 1e-9 or dfx < dxy / lam - 1e-9:
                    problems.append("bilipschitz bound fails on a pair")
                    break
            else:
                continue
            break
        # Pullback of a set that sits near the target base but misses the
        # image entirely is empty, which sends the left side to full height.
        # Continuous intuition (image open, covering the R1/lam ball around
        # the target base) must be imposed explicitly on finite spaces.
        image = {f[x] for x in ball}
        for z in range(K2.n):
            if K2.dist[K2.base, z] < R1 / lam - 1e-9 and z not in image:
                problems.append(
                    "target points near the base missing from the image "
                    "of the source ball")
                break
    if problems:
        return {"verdict": "PRECONDITION", "problems": problems,
                "trials": 0, "violations": 0, "certificate": None}

    rng = np.random.default_rng(seed)
    violations = 0
    certificate = None
    for trial in range(int(trials)):
        C = [i for i in range(K2.n) if rng.random() < 0.5]
        D = [i for i in range(K2.n) if rng.random() < 0.5]
        pre_C = [x for x in range(K1.n) if f[x] in set(C)]
        pre_D = [x for x in range(K1.n) if f[x] in set(D)]
        lhs = tapered_pseudometric(K1, pre_C, pre_D, R1)
        rhs = lam * tapered_pseudometric(K2, C, D, R2)
        if lhs > rhs + 1e-9:
            violations += 1
            if certificate is None:
                certificate = {"trial": trial, "lhs": lhs, "rhs": rhs,
                               "C": sorted(C), "D": sorted(D)}
    return {"verdict": "PASS" if violations == 0 else "FAIL",
            "trials": int(trials), "violations": violations,
            "certificate": certificate}


def chabauty_convergence_test(K, sequence, A, radii, tol=1e-9):
    """Tail test of the tapered distances, cross-checked against the
    two-condition picture (tail points near the limit; limit points
    approximated by every tail set) inside the largest listed radius."""
    seq = [_indices(K, S) for S in sequence]
    A = _indices(K, A)
    tail_start = max(0, len(seq) - max(1, len(seq) // 4))
    tail = seq[tail_start:]
    per_radius = {}
    witness = None
    for R in radii:
        values = [tapered_pseudometric(K, S, A, R) for S in seq]
        ok = all(v <= tol for v in values[tail_start:])
        per_radius[R] = {"values": values, "tail_ok": ok}
        if not ok and witness is None:
            witness = R
    converged = witness is None

    Rstar = max(radii)
    near = set(x for x in range(K.n) if K.dist[K.base, x] < Rstar)
    acc_ok = all(
        min((K.dist[x, a] for a in A), default=math.inf) <= tol
        for S in tail for x in S if x in near)
    app_ok = all(
        min((K.dist[x, a] for x in S), default=math.inf) <= tol
        for a in A if a in near for S in tail)
    return {"verdict": "CONVERGED" if converged else "NOT CONVERGED",
            "witness_radius": witness, "per_radius": per_radius,
            "accumulation_ok": acc_ok, "approximability_ok": app_ok,
            "characterization_agrees": converged == (acc_ok and app_ok)}
