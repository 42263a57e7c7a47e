"""Sound bounds on sup J over a norm ball from Lipschitz and Hessian certificates.

The zeroth-order bracket uses only a Lipschitz constant; the first-order
bracket expands J around a point y, bounds the remainder with a Hessian
certificate, and maximizes the resulting quadratic model exactly (closed form
for the ell_2 ball, separable for the ell_inf ball, dual bisection or vertex
enumeration when a full matrix bound is available).
"""

import math
from dataclasses import dataclass

import numpy as np


class DualBisectionError(RuntimeError):
    """Raised when the dual solve cannot produce a certified value."""


@dataclass(frozen=True)
class BallRegion:
    """{x : ||x - center||_p <= radius} with p in {2, inf}."""

    center: np.ndarray
    radius: float
    p: float

    def __post_init__(self):
        c = np.ascontiguousarray(np.asarray(self.center, dtype=float))
        if c.ndim != 1:
            raise ValueError("region center must be a vector")
        if not self.radius > 0.0:
            raise ValueError("region radius must be positive")
        if self.p != 2 and not np.isinf(self.p):
            raise ValueError(f"unsupported norm {self.p}")
        object.__setattr__(self, "center", c)

    @property
    def dim(self):
        return self.center.shape[0]

    def clamp(self, x):
        """Project a point into the region."""
        x = np.asarray(x, dtype=float)
        if np.isinf(self.p):
            return np.clip(x, self.center - self.radius, self.center + self.radius)
        d = x - self.center
        nn = np.linalg.norm(d)
        if nn <= self.radius:
            return x.copy()
        return self.center + d * (self.radius / nn)

    def contains(self, x, tol=1e-12):
        d = np.asarray(x, dtype=float) - self.center
        if np.isinf(self.p):
            return bool(np.all(np.abs(d) <= self.radius + tol))
        return bool(np.linalg.norm(d) <= self.radius + tol)


@dataclass(frozen=True)
class BoundPair:
    """lb <= sup J <= ub with the lb realized by an exact evaluation at witness."""

    lb: float
    ub: float
    witness: np.ndarray
    lb_method: str = ""
    ub_method: str = ""


def _sign_pos(v):
    # sign with sign(0) resolved to +1
    return np.where(v >= 0.0, 1.0, -1.0)


def zeroth_bounds(obj, region, L):
    """lb = J(center), ub = J(center) + L * radius."""
    if L < 0.0:
        raise ValueError("Lipschitz constant must be nonnegative")
    v = float(obj.value(region.center))
    return BoundPair(v, v + L * region.radius, region.center.copy(),
                     "center", "zeroth")


def optimal_perturbation(center, eps, p, grad_y, lam, y):
    """Maximizer of the quadratic model grad_y . (x-y) + lam/2 ||x-y||_2^2
    over the ball; for p=2 the normalized steering vector, for p=inf the
    per-coordinate endpoint choice."""
    center = np.asarray(center, dtype=float)
    grad_y = np.asarray(grad_y, dtype=float)
    y = np.asarray(y, dtype=float)
    u = grad_y - lam * (y - center)
    if np.isinf(p):
        return center + eps * _sign_pos(u)
    if p == 2:
        nn = np.linalg.norm(u)
        if nn == 0.0:
            tie = np.zeros_like(center)
            tie[0] = eps
            return center + tie
        return center + eps * u / nn
    raise ValueError(f"unsupported norm {p}")


def _model_value(value_y, grad_y, lam, x, y):
    d = x - y
    return float(value_y + grad_y @ d + 0.5 * lam * (d @ d))


def first_upper_from(value_y, grad_y, region, lam, y):
    """First-order upper bound from cached J(y), grad J(y)."""
    if lam < 0.0:
        raise ValueError("Hessian norm bound must be nonnegative")
    if not region.contains(y, tol=1e-9):
        raise ValueError("expansion point lies outside the region")
    # the model maximizer is exact for both norms: closed form on the ell_2
    # sphere, per-coordinate endpoint choice on the ell_inf box
    x_star = optimal_perturbation(region.center, region.radius, region.p,
                                  grad_y, lam, y)
    return _model_value(value_y, grad_y, lam, x_star, y)


def first_upper(obj, region, lam, y=None):
    """Upper bound from a first-order expansion at y (default: the center)."""
    y = region.center if y is None else np.asarray(y, dtype=float)
    return first_upper_from(float(obj.value(y)), obj.grad(y), region, lam, y)


def shifted_center(center, eps, grad_c, lam):
    """Expansion point on the segment toward the model maximizer that
    provably does not worsen the ell_inf first-order upper bound."""
    center = np.asarray(center, dtype=float)
    grad_c = np.asarray(grad_c, dtype=float)
    if lam <= 0.0:
        return center.copy()
    delta = eps * _sign_pos(grad_c)
    nrm = np.linalg.norm(delta)
    eta = min(1.0, float(np.min(np.abs(grad_c) / (lam * (nrm + np.abs(delta))))))
    return center + eta * delta


def first_lower(obj, region, candidates=()):
    """Exact evaluations at the center and at clamped candidate points."""
    pts = [region.center]
    for cand in candidates:
        pts.append(region.clamp(cand))
    pts = np.stack(pts)
    vals = obj.value(pts)
    k = int(np.argmax(vals))
    return float(vals[k]), pts[k]


def epsilon_crossover(L, grad_dual, lam, p, n0):
    """Largest radius at which the first-order upper bound still beats the
    zeroth-order one (at formula level)."""
    if lam < 0.0:
        raise ValueError("Hessian norm bound must be nonnegative")
    if lam == 0.0:
        return math.inf
    scale = n0 ** (-max(0.0, 1.0 - 2.0 / p))
    return max(0.0, (2.0 / lam) * scale * (L - grad_dual))


def two_layer_dual_upper(grad, M, eps, p=2):
    """Exact sup of grad . delta + 1/2 delta^T M delta over the ell_2 ball
    (strong duality; bisection on the single dual variable).  For p != 2 the
    ball is relaxed to its enclosing ell_2 ball first.

    Returns the quadratic part only; the caller adds J at the center.
    """
    g = np.asarray(grad, dtype=float)
    M = np.asarray(M, dtype=float)
    n = g.shape[0]
    if p != 2:
        eps = eps * n ** max(0.0, 0.5 - 1.0 / p)
    mu, Q = np.linalg.eigh(M)
    gt = Q.T @ g
    lam_lo = max(0.0, mu[-1] / 2.0)
    cut = 1e-12 * max(1.0, float(np.linalg.norm(gt)))

    def radius_sq(lam):
        den = 2.0 * lam - mu
        live = den > 0.0
        if np.any(~live & (np.abs(gt) > cut)):
            return math.inf
        with np.errstate(over="ignore"):
            d = gt[live] / den[live]
            return float(d @ d)

    def dual_value(lam):
        # evaluates the dual at lam + 1e-12 (always feasible), a valid upper
        # bound by weak duality
        shift = 1e-12
        den = np.maximum(2.0 * lam - mu, 0.0) + 2.0 * shift
        val = lam * eps * eps + 0.5 * float(np.sum(gt * gt / den))
        return val + shift * eps * eps

    r2 = eps * eps
    if radius_sq(lam_lo + 1e-300) <= r2 or radius_sq(lam_lo + 1e-14) <= r2:
        return dual_value(lam_lo)
    lo = lam_lo
    hi = (mu[-1] + float(np.linalg.norm(gt)) / eps) / 2.0 + 1.0
    if not radius_sq(hi) <= r2:
        raise DualBisectionError("failed to bracket the dual variable")
    while hi - lo > 1e-9:
        mid = (lo + hi) / 2.0
        if mid <= lo or mid >= hi:
            break  # float resolution reached before the absolute tolerance
        if radius_sq(mid) > r2:
            lo = mid
        else:
            hi = mid
    return dual_value(hi)


def vertex_upper(grad, M, lo, hi, center=None, return_witness=False):
    """Exact max of the quadratic model over box vertices; valid bound on the
    whole box when M is positive semidefinite (convex model)."""
    g = np.asarray(grad, dtype=float)
    M = np.asarray(M, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    n = lo.shape[0]
    if n > 20:
        raise ValueError(f"vertex enumeration unsupported beyond 20 dims (got {n})")
    if np.linalg.eigvalsh(M).min() < -1e-9:
        raise ValueError("vertex bound needs a positive semidefinite matrix")
    if center is None:
        center = (lo + hi) / 2.0
    best = -math.inf
    best_v = None
    total = 1 << n
    chunk = 1 << min(n, 16)
    bits = np.arange(n)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        mask = (idx[:, None] >> bits) & 1
        verts = np.where(mask == 1, hi, lo)
        delta = verts - center
        vals = delta @ g + 0.5 * np.einsum("ij,jk,ik->i", delta, M, delta)
        k = int(np.argmax(vals))
        if vals[k] > best:
            best = float(vals[k])
            best_v = verts[k]
    if return_witness:
        return best, best_v
    return best
