"""Polyhedral reachable sets from per-direction support bounds, plus
closed-loop stepping of linear systems driven by network controllers.

Each template direction c turns into one branch-and-bound solve of
sup c . f(x); the resulting offsets define half-spaces whose intersection
over-approximates the image set.  Closed-loop steps keep the linear part
c . A x of the step map analytic: it shifts the objective's value and
gradient and adds its dual norm to the Lipschitz constant, with no effect on
curvature.
"""

from dataclasses import dataclass

import numpy as np

from . import bnb
from .model import Network, ScalarObjective, scalarize


def _support_separation(center, generators, point):
    """Certified lower bound on dist(point, set) along the center-to-point
    direction, set = {center + G z : ||z||_inf <= 1}; LP-free."""
    u = np.asarray(point, dtype=float) - center
    nn = float(np.linalg.norm(u))
    if nn == 0.0:
        return 0.0
    u = u / nn
    return nn - float(np.abs(u @ generators).sum())


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("box bounds must be equal-length vectors")
        if np.any(lo > hi):
            raise ValueError("box lower bound exceeds upper bound")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.shape[0]

    def project(self, dims):
        dims = list(dims)
        return Box(self.lo[dims], self.hi[dims])

    def distance_lower_bound(self, point):
        center = (self.lo + self.hi) / 2.0
        return _support_separation(center, np.diag((self.hi - self.lo) / 2.0),
                                   point)


@dataclass(frozen=True)
class Zonotope:
    """{G z + center : ||z||_inf <= 1}."""

    G: np.ndarray
    center: np.ndarray

    def __post_init__(self):
        G = np.asarray(self.G, dtype=float)
        c = np.asarray(self.center, dtype=float)
        if G.ndim != 2 or c.ndim != 1 or G.shape[0] != c.shape[0]:
            raise ValueError("generator matrix rows must match center length")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "center", c)

    @property
    def dim(self):
        return self.center.shape[0]

    def project(self, dims):
        dims = list(dims)
        return Zonotope(self.G[dims, :], self.center[dims])

    def distance_lower_bound(self, point):
        return _support_separation(self.center, self.G, point)


def sample_inputs(input_set, n, rng):
    if isinstance(input_set, Box):
        return input_set.lo + rng.random((n, input_set.dim)) \
            * (input_set.hi - input_set.lo)
    z = rng.uniform(-1.0, 1.0, size=(n, input_set.G.shape[1]))
    return z @ input_set.G.T + input_set.center


@dataclass(frozen=True)
class DirectionTemplate:
    directions: np.ndarray  # (k, n_f) unit rows
    tag: str

    def __post_init__(self):
        d = np.asarray(self.directions, dtype=float)
        if d.ndim != 2:
            raise ValueError("directions must be a (k, n_f) array")
        object.__setattr__(self, "directions", d)

    @property
    def count(self):
        return self.directions.shape[0]


def axes_directions(n_f):
    eye = np.eye(n_f)
    return DirectionTemplate(np.concatenate([eye, -eye], axis=0), "axes")


def uniform_directions(k):
    """k uniformly spaced unit vectors on the plane (2-D outputs only)."""
    if k < 3:
        raise ValueError("need at least 3 directions")
    ang = 2.0 * np.pi * np.arange(k) / k
    return DirectionTemplate(np.stack([np.cos(ang), np.sin(ang)], axis=1),
                             f"uniform{k}")


def pca_directions(map_or_net, input_set, n_samples=10_000, seed=0):
    """Principal directions of the pushed-forward sample cloud, as a
    +/- eigenvector template ordered by decreasing variance.  Degenerate
    covariance pads the template with axis directions."""
    fwd = map_or_net.forward if isinstance(map_or_net, Network) else map_or_net
    rng = np.random.default_rng(seed)
    xs = sample_inputs(input_set, n_samples, rng)
    ys = np.asarray(fwd(xs), dtype=float)
    if n_samples < ys.shape[1] + 1:
        raise ValueError("need more samples than output dimensions")
    cov = np.cov(ys.T)
    cov = np.atleast_2d(cov)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    vecs = evecs[:, order].T  # rows, descending variance
    dirs = np.concatenate([vecs, -vecs], axis=0)
    n_f = ys.shape[1]
    if evals.min() < 1e-12 * max(evals.max(), 1.0):
        dirs = np.concatenate([dirs, axes_directions(n_f).directions], axis=0)
    return DirectionTemplate(dirs, "pca")


def _rotation_from_pca(fwd, input_set, n_samples, seed):
    """Orthonormal rotation for the propagated box, from the same PCA."""
    rng = np.random.default_rng(seed)
    xs = sample_inputs(input_set, n_samples, rng)
    ys = np.asarray(fwd(xs), dtype=float)
    cov = np.atleast_2d(np.cov(ys.T))
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    return evecs[:, order]  # columns orthonormal


@dataclass(frozen=True)
class Polytope:
    """Intersection of half-spaces normals[i] . y <= offsets[i]."""

    normals: np.ndarray
    offsets: np.ndarray
    lbs: np.ndarray | None = None
    flagged: tuple = ()

    def __post_init__(self):
        nr = np.asarray(self.normals, dtype=float)
        off = np.asarray(self.offsets, dtype=float)
        if nr.ndim != 2 or off.shape != (nr.shape[0],):
            raise ValueError("normals and offsets are inconsistent")
        object.__setattr__(self, "normals", nr)
        object.__setattr__(self, "offsets", off)

    def margins(self, points):
        """Per-point max face violation; <= 0 means inside."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return (points @ self.normals.T - self.offsets).max(axis=1)

    def contains(self, points, tol=1e-9):
        return bool(np.all(self.margins(points) <= tol))

    def separation_from(self, point):
        """Certified lower bound on the distance from a point to the polytope
        (positive only when some face separates it); needs unit normals."""
        point = np.asarray(point, dtype=float)
        return float(np.max(self.normals @ point - self.offsets))


def _solve_direction(objective, input_set, cfg):
    if isinstance(input_set, Box):
        return bnb.solve(objective, input_set.lo, input_set.hi, cfg=cfg)
    return bnb.solve_zonotope(objective, input_set.G, input_set.center, cfg=cfg)


def _zeroth_root_offset(objective, input_set):
    """Sound fallback face offset: root-level zeroth-order bound only."""
    fallback = bnb.BnBConfig(eps_t=np.inf, use_first_order=False,
                             max_branches=1)
    res = _solve_direction(objective, input_set, fallback)
    return res.ub, res.lb


def reach_polytope(net, input_set, template, eps_t, cfg=None):
    """Sound polyhedral over-approximation of {f(x) : x in the input set}."""
    if template.count == 0:
        raise ValueError("direction template is empty")
    cfg = cfg or bnb.BnBConfig()
    cfg = bnb.BnBConfig(**{**cfg.__dict__, "eps_t": eps_t})
    offsets = np.empty(template.count)
    lbs = np.empty(template.count)
    flagged = []
    results = []
    for i, c in enumerate(template.directions):
        objective = ScalarObjective(scalarize(net, c))
        try:
            res = _solve_direction(objective, input_set, cfg)
            offsets[i] = res.ub
            lbs[i] = res.lb
            results.append(res)
        except Exception:
            offsets[i], lbs[i] = _zeroth_root_offset(objective, input_set)
            flagged.append(i)
            results.append(None)
    poly = Polytope(template.directions.copy(), offsets, lbs, tuple(flagged))
    return poly, results


@dataclass(frozen=True)
class LinearSystem:
    """x+ = A x + B pi(x) + drift."""

    A: np.ndarray
    B: np.ndarray
    controller: Network
    horizon: int
    drift: np.ndarray | None = None

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        B = np.asarray(self.B, dtype=float)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError("state matrix must be square")
        if B.shape[0] != n or B.shape[1] != self.controller.output_dim:
            raise ValueError("input matrix incompatible with controller outputs")
        if self.controller.input_dim != n:
            raise ValueError("controller input must match state dimension")
        drift = np.zeros(n) if self.drift is None else \
            np.asarray(self.drift, dtype=float)
        if drift.shape != (n,):
            raise ValueError("drift must be a state-sized vector")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "drift", drift)

    @property
    def dim(self):
        return self.A.shape[0]

    def step_map(self, xs):
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        us = self.controller.forward(xs)
        return xs @ self.A.T + us @ self.B.T + self.drift

    def step_objective(self, c):
        """Scalar objective x -> c . (A x + B pi(x) + drift)."""
        c = np.asarray(c, dtype=float)
        return ScalarObjective(scalarize(self.controller, self.B.T @ c),
                               linear=self.A.T @ c,
                               offset=float(c @ self.drift))


def simulate(sys, x0s, steps):
    """Trajectory cloud: array of shape (steps+1, N, n_x)."""
    xs = np.atleast_2d(np.asarray(x0s, dtype=float))
    out = [xs]
    for _ in range(steps):
        xs = sys.step_map(xs)
        out.append(xs)
    return np.stack(out)


def closed_loop_step(sys, input_set, template, eps_t, cfg=None,
                     next_rep="pca", pca_samples=10_000, seed=0):
    """One reachability step: polytope for the image of the step map, plus the
    propagated set (axis-aligned interval hull or PCA-rotated box)."""
    if input_set.dim != sys.dim:
        raise ValueError("input set dimension does not match the system")
    cfg = cfg or bnb.BnBConfig()
    cfg = bnb.BnBConfig(**{**cfg.__dict__, "eps_t": eps_t})
    n = sys.dim
    if next_rep == "pca":
        R = _rotation_from_pca(sys.step_map, input_set, pca_samples, seed)
        rep_dirs = np.concatenate([R.T, -R.T], axis=0)
    elif next_rep == "hull":
        R = np.eye(n)
        rep_dirs = axes_directions(n).directions
    else:
        raise ValueError(f"unknown set representation {next_rep!r}")

    if template is None:
        dirs = rep_dirs
    else:
        # drop template rows duplicating a propagation direction
        fresh = [c for c in template.directions
                 if np.abs(rep_dirs - c).max(axis=1).min() > 1e-12]
        dirs = np.concatenate([np.asarray(fresh).reshape(-1, n), rep_dirs],
                              axis=0)
    offsets = np.empty(dirs.shape[0])
    lbs = np.empty(dirs.shape[0])
    flagged = []
    for i, c in enumerate(dirs):
        objective = sys.step_objective(c)
        try:
            res = _solve_direction(objective, input_set, cfg)
            offsets[i] = res.ub
            lbs[i] = res.lb
        except Exception:
            offsets[i], lbs[i] = _zeroth_root_offset(objective, input_set)
            flagged.append(i)
    poly = Polytope(dirs.copy(), offsets, lbs, tuple(flagged))

    # slab extents along the rotation's columns give the propagated box
    k = rep_dirs.shape[0] // 2
    base = dirs.shape[0] - rep_dirs.shape[0]
    hi_t = offsets[base:base + k]
    lo_t = -offsets[base + k:base + 2 * k]
    mid = (lo_t + hi_t) / 2.0
    rad = (hi_t - lo_t) / 2.0
    if next_rep == "hull":
        next_set = Box(mid - rad, mid + rad)
    else:
        next_set = Zonotope(R * rad[None, :], R @ mid)
    return poly, next_set


def closed_loop_reach(sys, initial_set, template, eps_t, steps=None, cfg=None,
                      next_rep="pca", pca_samples=10_000, seed=0):
    """Iterate closed_loop_step, feeding the propagated set forward."""
    steps = sys.horizon if steps is None else steps
    if steps < 1:
        raise ValueError("need at least one step")
    current = initial_set
    out = []
    for t in range(steps):
        poly, current = closed_loop_step(
            sys, current, template, eps_t, cfg=cfg, next_rep=next_rep,
            pca_samples=pca_samples, seed=seed + t)
        out.append((poly, current))
    return out
