"""Tangent-bundle lift of a coordinate metric and derivative-ratio audits.

The lift of a metric on a patch of R^d is a metric on the 2d-dimensional
tangent patch whose blocks are assembled from the Christoffel symbols.  Its
off-diagonal block encodes the first derivatives of the base metric, which
is what makes bilipschitz bounds on lifted metrics control C^k closeness;
the audits here exercise those identities numerically for k <= 2.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from .exprgrammar import parse_expression

_DEFAULT_STEP = 1e-4


class CoordinateMetric:
    """Symmetric positive-definite matrix field on a rectangular patch."""

    def __init__(self, matrix_fn, patch, dim: int = 2, derivative_fn=None):
        self.dim = int(dim)
        self.patch = tuple((float(lo), float(hi)) for lo, hi in patch)
        if len(self.patch) != self.dim:
            raise ValueError("patch must give one interval per coordinate")
        for lo, hi in self.patch:
            if not lo < hi:
                raise ValueError("patch intervals must have positive length")
        self._fn = matrix_fn
        # derivative_fn(x) -> array (d, d, d), axis 0 the derivative direction
        self._dfn = derivative_fn

    def contains(self, x, margin: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return all(lo + margin <= xi <= hi - margin
                   for xi, (lo, hi) in zip(x, self.patch))

    def matrix(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError("point has wrong dimension")
        g = np.asarray(self._fn(x), dtype=float)
        if g.shape != (self.dim, self.dim):
            raise ValueError("evaluator returned a matrix of wrong shape")
        scale = float(np.abs(g).max()) or 1.0
        if float(np.abs(g - g.T).max()) > 1e-9 * scale:
            raise ValueError("metric is not symmetric at %s" % (x.tolist(),))
        g = 0.5 * (g + g.T)
        if float(np.linalg.eigvalsh(g)[0]) <= 0.0:
            raise ValueError(
                "metric is not positive-definite at %s" % (x.tolist(),))
        return g

    def __call__(self, x):
        return self.matrix(x)


def metric_from_json(data) -> CoordinateMetric:
    """Build a metric from {"dim": 2, "entries": [...], "patch": [...]}.

    Entries are row-major strings in the shared expression grammar over the
    coordinates x and y; only dimension 2 is supported for string input.
    """
    if isinstance(data, str):
        data = json.loads(data)
    dim = int(data.get("dim", 2))
    if dim != 2:
        raise ValueError("string entries are only supported for dim 2")
    entries = data["entries"]
    if len(entries) != dim * dim:
        raise ValueError("need %d entries" % (dim * dim,))
    fns = [parse_expression(src, variables=("x", "y")) for src in entries]

    def matrix_fn(x):
        vals = [float(f(x=x[0], y=x[1])) for f in fns]
        return np.array(vals, dtype=float).reshape(dim, dim)

    return CoordinateMetric(matrix_fn, data["patch"], dim=dim)


def _require_interior(g: CoordinateMetric, x, margin: float):
    if not g.contains(x, margin=margin):
        raise ValueError(
            "point %s is within %g of the patch boundary"
            % (np.asarray(x, float).tolist(), margin))


def metric_derivatives(g: CoordinateMetric, x, h: float = _DEFAULT_STEP):
    """First partials dg[a, i, j] = d_a g_ij, analytic when available.

    The fallback is a central difference at steps h and h/2 combined by one
    Richardson step, so the truncation error is fourth order.
    """
    x = np.asarray(x, dtype=float)
    _require_interior(g, x, 2.0 * h)
    if g._dfn is not None:
        return np.asarray(g._dfn(x), dtype=float)
    d = g.dim
    out = np.empty((d, d, d))
    for a in range(d):
        e = np.zeros(d)
        e[a] = 1.0
        coarse = (g.matrix(x + h * e) - g.matrix(x - h * e)) / (2.0 * h)
        fine = (g.matrix(x + 0.5 * h * e) - g.matrix(x - 0.5 * h * e)) / h
        out[a] = (4.0 * fine - coarse) / 3.0
    return out


def christoffels(g: CoordinateMetric, x, h: float = _DEFAULT_STEP):
    """First- and second-kind symbols at x, shape (d, d, d).

    first[c, a, b] has the derivative-combination form whose symmetrized
    contraction returns d_a g_bc; second[c, a, b] raises the first index
    with the inverse metric.  Both are symmetric in the last two slots.
    """
    x = np.asarray(x, dtype=float)
    dg = metric_derivatives(g, x, h=h)
    # first[c, a, b] = (d_a g_bc + d_b g_ac - d_c g_ab) / 2
    first = 0.5 * (np.einsum("abc->cab", dg)
                   + np.einsum("bac->cab", dg)
                   - np.einsum("cab->cab", dg))
    gmat = g.matrix(x)
    second = np.einsum("ck,kab->cab", np.linalg.inv(gmat), first)
    return first, second


class SasakiMetric:
    """Lift of a base metric to the tangent patch.

    Blocks at (x, v): the vertical block repeats the base matrix, the mixed
    block contracts the first-kind symbols against v, and the horizontal
    block adds the quadratic connection correction to the base matrix.
    """

    def __init__(self, base: CoordinateMetric, h: float = _DEFAULT_STEP):
        self.base = base
        self.h = float(h)
        self.dim = 2 * base.dim

    def matrix(self, x, v):
        d = self.base.dim
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        gmat = self.base.matrix(x)
        first, second = christoffels(self.base, x, h=self.h)
        w = np.einsum("cab,a->cb", second, v)      # w[c, i]
        top = gmat + np.einsum("ci,cd,dj->ij", w, gmat, w)
        mixed = np.einsum("jai,a->ij", first, v)   # entry [i, d+j]
        out = np.empty((2 * d, 2 * d))
        out[:d, :d] = top
        out[:d, d:] = mixed
        out[d:, :d] = mixed.T
        out[d:, d:] = gmat
        return out

    def as_coordinate_metric(self, vbox=(-2.0, 2.0)) -> CoordinateMetric:
        d = self.base.dim

        def matrix_fn(z):
            return self.matrix(z[:d], z[d:])

        patch = self.base.patch + (tuple(vbox),) * d
        return CoordinateMetric(matrix_fn, patch, dim=2 * d)


def sasaki_lift(g: CoordinateMetric, h: float = _DEFAULT_STEP) -> SasakiMetric:
    return SasakiMetric(g, h=h)


def lift_tower(g: CoordinateMetric, k: int, h: float = _DEFAULT_STEP,
               vbox=(-2.0, 2.0)) -> CoordinateMetric:
    """The k-fold lift flattened to a coordinate metric on 2^k * d dims."""
    if k not in (0, 1, 2):
        raise ValueError("only k <= 2 is supported")
    out = g
    for _ in range(k):
        out = sasaki_lift(out, h=h).as_coordinate_metric(vbox=vbox)
    return out


def _reference_derivatives(g: CoordinateMetric, x, h: float = 3e-4):
    # five-point stencil, deliberately a different scheme from the one the
    # symbols are built on so the audit is not circular
    x = np.asarray(x, dtype=float)
    d = g.dim
    out = np.empty((d, d, d))
    for a in range(d):
        e = np.zeros(d)
        e[a] = 1.0
        out[a] = (-g.matrix(x + 2 * h * e) + 8.0 * g.matrix(x + h * e)
                  - 8.0 * g.matrix(x - h * e) + g.matrix(x - 2 * h * e)) \
            / (12.0 * h)
    return out


def relationship_audit(g: CoordinateMetric, x=None, samples: int = 128,
                       seed: int = 0, tol: float = 1e-6) -> dict:
    """Check the two ways the lift stores the base metric and its gradient.

    The vertical block must repeat g at every sampled v, and the symmetrized
    mixed block at v must reproduce the directional derivative of g along v.
    Errors are relative to max(1, derivative scale).
    """
    d = g.dim
    if x is None:
        x = np.array([0.5 * (lo + hi) for lo, hi in g.patch])
    x = np.asarray(x, dtype=float)
    _require_interior(g, x, 4.0 * _DEFAULT_STEP)
    lift = sasaki_lift(g)
    gmat = g.matrix(x)
    dg = _reference_derivatives(g, x)
    scale = max(1.0, float(np.abs(dg).max()), float(np.abs(gmat).max()))
    rng = np.random.default_rng(seed)
    block_err = 0.0
    deriv_err = 0.0
    for _ in range(int(samples)):
        v = rng.uniform(-2.0, 2.0, size=d)
        m = lift.matrix(x, v)
        block_err = max(block_err, float(np.abs(m[d:, d:] - gmat).max()))
        mixed = m[:d, d:]
        target = np.einsum("aij,a->ij", dg, v)
        deriv_err = max(deriv_err,
                        float(np.abs(mixed + mixed.T - target).max()))
    ok = block_err <= tol * scale and deriv_err <= tol * scale
    return {
        "base_point": x.tolist(),
        "samples": int(samples),
        "block_error": block_err,
        "derivative_error": deriv_err,
        "scale": scale,
        "verdict": "PASS" if ok else "FAIL",
    }


def _interior_box(metric: CoordinateMetric):
    box = []
    for lo, hi in metric.patch:
        m = max(0.02 * (hi - lo), 3e-3)
        box.append((lo + m, hi - m))
    return box


def _halton(total_dim: int, n: int, seed: int):
    return qmc.Halton(d=total_dim, seed=seed).random(n)


def _quadratic_form(mat, vec) -> float:
    return float(vec @ mat @ vec)


@dataclass
class RatioWitness:
    point: list
    tangent: list
    ratio: float


def bilipschitz_ratio(g: CoordinateMetric, h_metric: CoordinateMetric,
                      patch=None, samples: int = 128, k: int = 1,
                      seed: int = 0):
    """Estimated bilipschitz constant of the identity between k-fold lifts.

    Returns a report with lam, its log, and the maximizing sample as a
    certificate.  Quasi-random points cover the shared patch interior, the
    fiber boxes, and unit tangent directions.
    """
    if k not in (1, 2):
        raise ValueError("k must be 1 or 2")
    if g.dim != h_metric.dim:
        raise ValueError("metrics must share a dimension")
    d = g.dim
    gl = lift_tower(g, k)
    hl = lift_tower(h_metric, k)
    if patch is None:
        patch = [
            (max(a[0], b[0]), min(a[1], b[1]))
            for a, b in zip(_interior_box(g), _interior_box(h_metric))
        ]
    fiber = (2 ** k - 1) * d      # v coordinates above the base point
    tdim = (2 ** k) * d           # tangent vector on the k-fold lift
    pts = _halton(d + fiber + tdim, int(samples), seed)
    best = None
    for row in pts:
        base = np.array([lo + (hi - lo) * t
                         for t, (lo, hi) in zip(row[:d], patch)])
        vs = -1.0 + 2.0 * row[d:d + fiber]
        z = np.concatenate([base, 1.5 * vs])
        vec = ndtri(np.clip(row[d + fiber:], 1e-12, 1.0 - 1e-12))
        vec = vec / np.linalg.norm(vec)
        r = _quadratic_form(hl.matrix(z), vec) / _quadratic_form(
            gl.matrix(z), vec)
        lam2 = max(r, 1.0 / r)
        if best is None or lam2 > best[0]:
            best = (lam2, z, vec, r)
    lam = math.sqrt(best[0])
    return {
        "lam": lam,
        "log_lam": math.log(lam),
        "k": k,
        "samples": int(samples),
        "witness": RatioWitness(best[1].tolist(), best[2].tolist(), best[3]),
    }


def _entry_derivatives(metric: CoordinateMetric, x, order: int):
    """All distinct partials of the given order of every entry, flattened."""
    x = np.asarray(x, dtype=float)
    d = metric.dim
    if order == 0:
        return [metric.matrix(x)]
    if order == 1:
        dg = metric_derivatives(metric, x)
        return [dg[a] for a in range(d)]
    out = []
    h = 1e-3

    def diag(a, step):
        e = np.zeros(d)
        e[a] = step
        return (metric.matrix(x + e) - 2.0 * metric.matrix(x)
                + metric.matrix(x - e)) / step ** 2

    def cross(a, b, step):
        ea = np.zeros(d)
        eb = np.zeros(d)
        ea[a] = step
        eb[b] = step
        return (metric.matrix(x + ea + eb) - metric.matrix(x + ea - eb)
                - metric.matrix(x - ea + eb)
                + metric.matrix(x - ea - eb)) / (4.0 * step ** 2)

    for a in range(d):
        for b in range(a, d):
            fn = diag if a == b else cross
            args = (a, h) if a == b else (a, b, h)
            argf = (a, h / 2) if a == b else (a, b, h / 2)
            out.append((4.0 * fn(*argf) - fn(*args)) / 3.0)
    return out


def derivative_ratio_audit(g: CoordinateMetric, h_metric: CoordinateMetric,
                           lam: float, patch=None, samples: int = 16,
                           k: int = 1, seed: int = 0,
                           slack: float = 1e-6) -> dict:
    """Check every order <= k entry-derivative ratio against [1/lam^2, lam^2].

    The containment is read over well-defined ratios: comparisons where
    either derivative vanishes are counted separately as degenerate, since
    no finite constant relates a zero entry to a nonzero one (a base metric
    independent of some coordinate produces these against any perturbation
    that does depend on it).
    """
    if patch is None:
        patch = [
            (max(a[0], b[0]), min(a[1], b[1]))
            for a, b in zip(_interior_box(g), _interior_box(h_metric))
        ]
    d = g.dim
    lo_bound = (1.0 - slack) / lam ** 2
    hi_bound = (1.0 + slack) * lam ** 2
    pts = _halton(d, int(samples), seed)
    checked = 0
    degenerate = 0
    violations = 0
    worst = 1.0
    for row in pts:
        x = np.array([lo + (hi - lo) * t for t, (lo, hi) in zip(row, patch)])
        for order in range(k + 1):
            dgs = _entry_derivatives(g, x, order)
            dhs = _entry_derivatives(h_metric, x, order)
            atol = 1e-6 * max(1.0, max(float(np.abs(m).max()) for m in dgs),
                              max(float(np.abs(m).max()) for m in dhs))
            for mg, mh in zip(dgs, dhs):
                for i in range(d):
                    for j in range(d):
                        a, b = abs(float(mg[i, j])), abs(float(mh[i, j]))
                        if a <= atol and b <= atol:
                            continue
                        if a <= atol or b <= atol:
                            degenerate += 1
                            continue
                        checked += 1
                        ratio = a / b
                        worst = max(worst, ratio, 1.0 / ratio)
                        if not lo_bound <= ratio <= hi_bound:
                            violations += 1
    return {
        "lam": float(lam),
        "k": int(k),
        "checked": checked,
        "degenerate": degenerate,
        "violations": violations,
        "worst_ratio": worst,
        "verdict": "PASS" if violations == 0 else "FAIL",
    }


# ---------------------------------------------------------------------------
# order-k distortion of a patch map


def _map_jacobian(f, x, d: int, step: float = 1e-5):
    x = np.asarray(x, dtype=float)
    cols = []
    for a in range(d):
        e = np.zeros(d)
        e[a] = 1.0
        coarse = (np.asarray(f(x + step * e), float)
                  - np.asarray(f(x - step * e), float)) / (2.0 * step)
        fine = (np.asarray(f(x + 0.5 * step * e), float)
                - np.asarray(f(x - 0.5 * step * e), float)) / step
        cols.append((4.0 * fine - coarse) / 3.0)
    return np.stack(cols, axis=1)


def _tangent_map(f, jac, d: int):
    def lifted(z):
        z = np.asarray(z, dtype=float)
        x, v = z[:d], z[d:]
        return np.concatenate([np.asarray(f(x), float), jac(x) @ v])
    return lifted


def order_k_distortion(f, g: CoordinateMetric, h_metric: CoordinateMetric,
                       base, R: float, k: int = 1, samples: int = 64,
                       seed: int = 0, jacobian=None) -> float:
    """log of the sampled bilipschitz constant of the k-th tangent map.

    The map must fix the base point; sampling stays in the coordinate ball
    of radius R around it.  Non-injectivity is reported when two separated
    samples nearly collide, or when the Jacobian determinant changes sign
    across the ball, which is how a fold shows up before any sampled pair
    lands exactly together.
    """
    if k not in (1, 2):
        raise ValueError("k must be 1 or 2")
    d = g.dim
    base = np.asarray(base, dtype=float)
    image = np.asarray(f(base), dtype=float)
    if float(np.abs(image - base).max()) > 1e-9:
        raise ValueError("map must fix the base point")
    jac = jacobian if jacobian is not None else (
        lambda x: _map_jacobian(f, x, d, step=1e-5))

    g_box = _interior_box(g)
    h_box = _interior_box(h_metric)
    fiber = (2 ** k - 1) * d
    tdim = (2 ** k) * d
    raw = _halton(d + fiber + tdim, 4 * int(samples), seed)
    pts = []
    for row in raw:
        x = base + R * (-1.0 + 2.0 * row[:d])
        if np.linalg.norm(x - base) > R:
            continue
        if not all(lo <= xi <= hi for xi, (lo, hi) in zip(x, g_box)):
            continue
        y = np.asarray(f(x), dtype=float)
        if not all(lo <= yi <= hi for yi, (lo, hi) in zip(y, h_box)):
            continue
        pts.append((x, y, row))
        if len(pts) >= int(samples):
            break
    if len(pts) < 2:
        raise ValueError("sampling produced too few points inside the ball")

    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    dets = [float(np.linalg.det(jac(x))) for x in xs]
    if min(dets) <= 0.0 <= max(dets):
        raise ValueError("map is not injective on the sampled ball")
    for i in range(len(pts)):
        gap = np.linalg.norm(ys[i + 1:] - ys[i], axis=1)
        sep = np.linalg.norm(xs[i + 1:] - xs[i], axis=1)
        if np.any((sep > 1e-6) & (gap < 1e-9 * np.maximum(sep, 1.0))):
            raise ValueError("map is not injective on the sampled ball")

    F1 = _tangent_map(f, jac, d)
    # each differentiation layer uses a step much larger than the noise of
    # the layer below it; equal tiny steps amplify roundoff to order one
    if k == 1:
        F = F1
        outer_step = 1e-3
    else:
        F = _tangent_map(
            F1, lambda z: _map_jacobian(F1, z, 2 * d, step=1e-3), 2 * d)
        outer_step = 1e-2
    gl = lift_tower(g, k)
    hl = lift_tower(h_metric, k)
    zdim = 2 ** k * d
    worst = 1.0
    for x, y, row in pts:
        vs = 1.5 * (-1.0 + 2.0 * row[d:d + fiber])
        z = np.concatenate([x, vs])
        vec = ndtri(np.clip(row[d + fiber:], 1e-12, 1.0 - 1e-12))
        vec = vec / np.linalg.norm(vec)
        # push the lift base point and the tangent vector through the map
        z_img = np.asarray(F(z), dtype=float)
        vec_img = _map_jacobian(F, z, zdim, step=outer_step) @ vec
        num = _quadratic_form(hl.matrix(z_img), vec_img)
        den = _quadratic_form(gl.matrix(z), vec)
        r = num / den
        worst = max(worst, r, 1.0 / r)
    return 0.5 * math.log(worst)


def assembled_distortion(f, g: CoordinateMetric, h_metric: CoordinateMetric,
                         base, R: float, samples: int = 48, seed: int = 0,
                         jacobian=None) -> float:
    """Truncated smooth-distance surrogate from the first two orders."""
    total = 0.0
    for k in (1, 2):
        val = order_k_distortion(f, g, h_metric, base, R, k=k,
                                 samples=samples, seed=seed,
                                 jacobian=jacobian)
        total += 2.0 ** (-k) * min(val, 1.0)
    return total


def flat_metric(patch=((-2.0, 2.0), (-2.0, 2.0))) -> CoordinateMetric:
    return CoordinateMetric(lambda x: np.eye(len(patch)), patch,
                            dim=len(patch))


def hyperbolic_plane_metric(patch=((-1.0, 1.0), (0.5, 2.0))):
    def matrix_fn(x):
        return np.diag([1.0 / x[1] ** 2, 1.0 / x[1] ** 2])

    def derivative_fn(x):
        out = np.zeros((2, 2, 2))
        out[1, 0, 0] = -2.0 / x[1] ** 3
        out[1, 1, 1] = -2.0 / x[1] ** 3
        return out

    return CoordinateMetric(matrix_fn, patch, dim=2,
                            derivative_fn=derivative_fn)
