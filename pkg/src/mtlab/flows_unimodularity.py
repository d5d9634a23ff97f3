"""Geodesic flow on the flat torus and the one-dimensional transport check.

The torus is the one desk-scale setting where the geodesic flow is exact
arithmetic: footpoints translate linearly mod 1 and directions never change.
Invariance of the uniformly lifted measure then becomes a binnable statement
about pushforwards, checked here both by sampling and by direct quadrature.
The second half treats rooted 1-manifolds, where every mixture of circles
and lines satisfies the transport identity; the discrete side recomputes it
on a finite cyclic approximation."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

TWO_PI = 2.0 * math.pi


class TorusDensity:
    """Periodic probability density on the unit square.

    The evaluator is any array-broadcasting callable of (x, y); total mass
    comes from the periodic rectangle rule, which is spectrally accurate
    for smooth periodic integrands, and the stored normalizer makes the
    density integrate to 1.
    """

    def __init__(self, fn, grid=512):
        self.fn = fn
        xs = (np.arange(grid) + 0.5) / grid
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        vals = np.asarray(fn(X, Y), dtype=float) + np.zeros_like(X)
        if vals.min() < -1e-12:
            raise ValueError("density must be nonnegative")
        self.mass = float(vals.mean())
        if self.mass <= 0:
            raise ValueError("density must have positive total mass")
        self._sup = float(vals.max()) / self.mass

    @classmethod
    def uniform(cls):
        return cls(lambda x, y: np.ones_like(np.asarray(x, dtype=float)))

    def density(self, x, y):
        x = np.mod(np.asarray(x, dtype=float), 1.0)
        y = np.mod(np.asarray(y, dtype=float), 1.0)
        return np.asarray(self.fn(x, y), dtype=float) / self.mass

    def total_mass(self, grid=512):
        xs = (np.arange(grid) + 0.5) / grid
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        return float(np.mean(self.density(X, Y)))


@dataclass(frozen=True)
class UnitTangentSample:
    x: float
    y: float
    theta: float

    def __post_init__(self):
        if not (0.0 <= self.x < 1.0 and 0.0 <= self.y < 1.0):
            raise ValueError("footpoint must lie in the unit square")
        if not 0.0 <= self.theta < TWO_PI:
            raise ValueError("direction must lie in [0, 2 pi)")


class UniformLift:
    """Sampler for the uniform lift: footpoint ~ mu, direction uniform."""

    def __init__(self, mu: TorusDensity):
        self.mu = mu

    def sample_arrays(self, n, seed):
        rng = np.random.default_rng(seed)
        bound = self.mu._sup * 1.0000001
        xs = np.empty(0)
        ys = np.empty(0)
        while xs.size < n:
            m = max(int((n - xs.size) * bound * 1.2) + 16, 256)
            cx = rng.random(m)
            cy = rng.random(m)
            keep = rng.random(m) * bound <= self.mu.density(cx, cy)
            xs = np.concatenate([xs, cx[keep]])
            ys = np.concatenate([ys, cy[keep]])
        theta = rng.random(n) * TWO_PI
        return xs[:n], ys[:n], theta

    def sample(self, n, seed):
        xs, ys, th = self.sample_arrays(n, seed)
        return [UnitTangentSample(float(a), float(b), float(c))
                for a, b, c in zip(xs, ys, th)]


def uniform_lift(mu: TorusDensity) -> UniformLift:
    return UniformLift(mu)


def flow(s: UnitTangentSample, t) -> UnitTangentSample:
    """Geodesic flow for time t: translate the footpoint along the
    direction, mod 1 in both coordinates; the direction is unchanged."""
    return UnitTangentSample(float(np.mod(s.x + t * math.cos(s.theta), 1.0)),
                             float(np.mod(s.y + t * math.sin(s.theta), 1.0)),
                             s.theta)


def flow_arrays(xs, ys, theta, t):
    return (np.mod(xs + t * np.cos(theta), 1.0),
            np.mod(ys + t * np.sin(theta), 1.0),
            theta)


def _bin_counts(xs, ys, theta, bins):
    kx, ky, m = bins
    counts, _ = np.histogramdd(
        np.column_stack([xs, ys, theta]),
        bins=(kx, ky, m),
        range=[(0.0, 1.0), (0.0, 1.0), (0.0, TWO_PI)])
    return counts


def exact_lift_bin_masses(mu: TorusDensity, bins=(8, 8, 6), res=8):
    """Quadrature masses of the lifted law on the given binning.

    The direction factor is uniform, so only the footpoint marginal needs
    numerical integration; each angular slab carries an equal share."""
    kx, ky, m = bins
    fx, fy = kx * res, ky * res
    xs = (np.arange(fx) + 0.5) / fx
    ys = (np.arange(fy) + 0.5) / fy
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    w = mu.density(X, Y) / (fx * fy)
    xy = w.reshape(kx, res, ky, res).sum(axis=(1, 3))
    return np.repeat(xy[:, :, None] / m, m, axis=2)


def invariance_defect(mu: TorusDensity, t, bins=(8, 8, 6), n=10**6,
                      seed=None):
    """Total variation between the exact binned lift law and the sampled,
    flowed cloud.

    One side is deterministic quadrature, so the statistic carries only the
    multinomial noise of the flowed sample; an invariant lift leaves it at
    the noise floor estimated by `defect_noise_scale`.
    """
    if seed is None:
        raise ValueError("a seed is required")
    if n < 10**5:
        raise ValueError("need at least 1e5 samples")
    xs, ys, theta = uniform_lift(mu).sample_arrays(int(n), seed)
    after = _bin_counts(*flow_arrays(xs, ys, theta, t), bins)
    exact = exact_lift_bin_masses(mu, bins)
    return float(0.5 * np.abs(after / n - exact).sum())


def defect_noise_scale(mu: TorusDensity, bins=(8, 8, 6), n=10**6):
    """Expected defect for an invariant lift: half the summed mean absolute
    multinomial deviations of the bin frequencies."""
    p = exact_lift_bin_masses(mu, bins)
    return float(0.5 * math.sqrt(2.0 / (math.pi * n))
                 * np.sqrt(p * (1.0 - p)).sum())


def binned_pushforward_gap(mu: TorusDensity, t, bins=(4, 4, 3), res=16):
    """Deterministic quadrature of the binned total variation between the
    lift and its flow image.

    Coarsening can only lose mass differences, so this value at coarse bins
    is a lower bound for the defect statistic taken on any refinement."""
    kx, ky, m = bins
    fx = kx * res
    fy = ky * res
    fm = m * res
    xs = (np.arange(fx) + 0.5) / fx
    ys = (np.arange(fy) + 0.5) / fy
    th = (np.arange(fm) + 0.5) * TWO_PI / fm
    X, Y, TH = np.meshgrid(xs, ys, th, indexing="ij")
    w_before = mu.density(X, Y) / TWO_PI
    w_after = mu.density(X - t * np.cos(TH), Y - t * np.sin(TH)) / TWO_PI
    cell = (1.0 / fx) * (1.0 / fy) * (TWO_PI / fm)
    diff = (w_before - w_after) * cell
    coarse = diff.reshape(kx, res, ky, res, m, res).sum(axis=(1, 3, 5))
    return float(0.5 * np.abs(coarse).sum())


# ---------------------------------------------------------------------------
# rooted 1-manifolds

class OneManifoldMeasure:
    """Probability measure on rooted 1-manifolds: finitely many atoms, one
    per diameter, with the line entering as diameter infinity."""

    def __init__(self, atoms):
        self.atoms = tuple((float(x), float(w)) for x, w in atoms)
        if not self.atoms:
            raise ValueError("need at least one atom")
        if any(x <= 0 for x, _ in self.atoms):
            raise ValueError("diameters must be positive")
        if any(w < 0 for _, w in self.atoms):
            raise ValueError("weights must be nonnegative")
        if abs(sum(w for _, w in self.atoms) - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")


def m1_mtp_sides(nu: OneManifoldMeasure, f, h=1e-3, support=None):
    """Transport identity for mixtures of circles and lines.

    The left side integrates f over the fiber of second roots, which
    carries twice the Lebesgue measure of the distance range [0, x].  The
    right side recomputes the same mass on a cyclic discretization at
    resolution h, summing f over ordered point pairs; vertex transitivity
    collapses the double sum to the distances seen from one basepoint.
    Atoms at infinite diameter need `support`, a bound beyond which f
    vanishes in y.
    """
    left = 0.0
    right = 0.0
    for x, w in nu.atoms:
        if w == 0.0:
            continue
        if math.isinf(x):
            if support is None:
                raise ValueError(
                    "infinite-diameter atoms need f of bounded support")
            val, _ = integrate.quad(lambda y: f(x, y), 0.0, support,
                                    epsabs=1e-10, limit=200)
            left += w * 2.0 * val
            ks = np.arange(1, int(math.floor(support / h)) + 1)
            right += w * h * (float(f(x, 0.0))
                              + 2.0 * float(np.sum(f(x, ks * h))))
        else:
            val, _ = integrate.quad(lambda y: f(x, y), 0.0, x,
                                    epsabs=1e-10, limit=200)
            left += w * 2.0 * val
            circumference = 2.0 * x
            n_pts = max(2, int(round(circumference / h)))
            s = circumference / n_pts
            k = np.arange(n_pts)
            dists = np.minimum(k, n_pts - k) * s
            right += w * s * float(np.sum(f(x, dists)))
    return left, right, abs(left - right)
