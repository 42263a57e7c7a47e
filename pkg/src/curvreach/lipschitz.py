"""Upper bounds on local Lipschitz constants of layered networks.

The parameterized bound rewrites each activation as a slope-reduced residual
plus a linear feed-through ``diag(d) z`` (a loop transformation).  Chaining
the per-layer constants gives the recursion

    m(1) = || diag(b1 - d1) W1 ||
    m(l) = || C_0 || + sum_{j<l} || C_j || m(j),
    C_j  = D'_l W_l (D_{l-1} W_{l-1}) ... (D_{j+1} W_{j+1}),

with ``D'_l = diag(b_l - d_l)`` for internal stages and the identity for the
final stage.  ``d = 0`` collapses it to the naive product of layer norms, and
``d = b/2`` provably tightens the naive bound.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels as K

_POWER_TOL = 1e-9
_POWER_MAXITER = 10_000
_POWER_MARGIN = 1.0 + 1e-9


_V0_CACHE = {}


def _start_vector(m, n):
    # deterministic per shape, so reported constants reproduce run-to-run
    v0 = _V0_CACHE.get((m, n))
    if v0 is None:
        seed = (m * 1_000_003 + n) & 0xFFFFFFFF
        v0 = np.random.default_rng(seed).standard_normal(n)
        _V0_CACHE[(m, n)] = v0
    return v0


def operator_norm(A, p):
    """Operator p->p norm; p in {2, inf}.

    The spectral norm runs power iteration on A^T A with a deterministic
    start vector per matrix shape, and inflates the estimate by 1e-9 as a
    validity margin.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.size == 0:
        raise ValueError("operator_norm needs a nonempty 2-D matrix")
    if np.isinf(p):
        return K.op_norm_inf(A)
    if p == 2:
        m, n = A.shape
        if m == 1 or n == 1:
            return float(np.linalg.norm(A))
        sigma = K.power_iter_sigma(A, _start_vector(m, n), _POWER_TOL,
                                   _POWER_MAXITER)
        return float(sigma) * _POWER_MARGIN
    raise ValueError(f"unsupported norm {p}")


def _norm(A, p):
    # internal: also serves p=1 (max column sum) for the weighted suffix bound
    if p == 1:
        return K.op_norm_inf(np.ascontiguousarray(A.T))
    return operator_norm(A, p)


@dataclass(frozen=True)
class LoopTransform:
    """Per-hidden-layer loop transformation vectors d >= 0."""

    d: tuple

    @property
    def num_hidden(self):
        return len(self.d)


def default_loop_transform(local):
    """d = slope_hi / 2, clamped into [0, (slope_lo + slope_hi)/2]."""
    ds = []
    for a, b in zip(local.slope_lo, local.slope_hi):
        ds.append(np.minimum(b / 2.0, (a + b) / 2.0))
    return LoopTransform(tuple(ds))


def zero_loop_transform(local):
    return LoopTransform(tuple(np.zeros_like(b) for b in local.slope_hi))


def _check_transform(net, local, lt):
    if lt.num_hidden != net.depth - 1:
        raise ValueError("loop transform does not match network depth")
    for l, (d, a, b) in enumerate(zip(lt.d, local.slope_lo, local.slope_hi), start=1):
        if d.shape != a.shape:
            raise ValueError(f"loop transform shape mismatch at layer {l}")
        if np.any(d < -1e-12) or np.any(d > (a + b) / 2.0 + 1e-12):
            raise ValueError(
                f"loop transform at layer {l} violates 0 <= d <= (slope_lo+slope_hi)/2")


def _stage(P0, top, memo, weights, ds, p):
    """One recursion stage: norm of the x-chain plus the memoized tail terms."""
    total = 0.0
    P = P0
    for j in range(top, 0, -1):
        total += _norm(P, p) * memo[j]
        P = (P * ds[j - 1]) @ weights[j - 1]
    return total + _norm(P, p)


def _memo_raw(weights, slope_his, ds, p):
    """memo[l] bounds x -> diag(b_l - d_l) z^(l); no validation, hot path."""
    memo = [0.0] * len(weights)
    for l in range(1, len(weights)):
        dprime = slope_his[l - 1] - ds[l - 1]
        P0 = dprime[:, None] * weights[l - 1]
        memo[l] = _stage(P0, l - 1, memo, weights, ds, p)
    return memo


def _total_raw(weights, slope_his, ds, p, memo=None):
    if memo is None:
        memo = _memo_raw(weights, slope_his, ds, p)
    return float(_stage(weights[-1], len(weights) - 1, memo, weights, ds, p))


def _report_raw(weights, slope_his, ds, p):
    """(total, subnet constants) sharing one memo pass."""
    memo = _memo_raw(weights, slope_his, ds, p)
    total = _stage(weights[-1], len(weights) - 1, memo, weights, ds, p)
    subnet = tuple(
        float(_stage(weights[l - 1], l - 1, memo, weights, ds, p))
        for l in range(1, len(weights))
    )
    return float(total), subnet


def _internal_memo(net, local, lt, p):
    weights = [lay.weight for lay in net.layers]
    ds = list(lt.d)
    memo = _memo_raw(weights, local.slope_hi, ds, p)
    return memo, weights, ds


def naive_lipschitz(net, local, p):
    """Product bound: ||W_L|| * prod_l ||diag(slope_hi_l) W_l||."""
    if local.num_hidden != net.depth - 1:
        raise ValueError("local bounds do not match network depth")
    total = _norm(net.layers[-1].weight, p)
    for lay, b in zip(net.layers[:-1], local.slope_hi):
        total *= _norm(b[:, None] * lay.weight, p)
    return float(total)


def liplt(net, local, lt, p):
    """Loop-transformed Lipschitz bound of the whole network."""
    _check_transform(net, local, lt)
    memo, weights, ds = _internal_memo(net, local, lt, p)
    return float(_stage(weights[-1], net.depth - 1, memo, weights, ds, p))


def subnet_lipschitz(net, local, lt, p, l):
    """Lipschitz bound of x -> z^(l), the l-th preactivation map (1-indexed)."""
    _check_transform(net, local, lt)
    if not 1 <= l <= net.depth - 1:
        raise ValueError(f"layer index {l} out of range [1, {net.depth - 1}]")
    memo, weights, ds = _internal_memo(net, local, lt, p)
    return float(_stage(weights[l - 1], l - 1, memo, weights, ds, p))


@dataclass(frozen=True)
class LipschitzReport:
    """Full-network constant plus per-layer subnetwork constants, in ell_p."""

    total: float
    subnet: tuple  # subnet[l-1] bounds x -> z^(l)
    p: float


def lipschitz_report(net, local, lt, p):
    """Total and all subnetwork constants in one memoized pass."""
    _check_transform(net, local, lt)
    weights = [lay.weight for lay in net.layers]
    total, subnet = _report_raw(weights, local.slope_hi, list(lt.d), p)
    return LipschitzReport(total, subnet, p)


def _golden_min(f, lo, hi, iters=60):
    gr = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - gr * (b - a)
    d = a + gr * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - gr * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + gr * (b - a)
            fd = f(d)
    mid = (a + b) / 2.0
    return mid, f(mid)


def refine_loop_transform(net, local, p, sweeps=50, start=None):
    """Coordinate descent on the loop transformation, projected onto the
    admissible box [0, (slope_lo + slope_hi)/2].  Starts at d = slope_hi/2."""
    lt = default_loop_transform(local) if start is None else start
    ds = [d.copy() for d in lt.d]
    caps = [(a + b) / 2.0 for a, b in zip(local.slope_lo, local.slope_hi)]
    best = liplt(net, local, LoopTransform(tuple(ds)), p)
    for _ in range(sweeps):
        prev = best
        for l, cap in enumerate(caps):
            for i in range(ds[l].shape[0]):
                if cap[i] <= 0.0:
                    continue
                orig = ds[l][i]

                def f(t, l=l, i=i):
                    ds[l][i] = t
                    return liplt(net, local, LoopTransform(tuple(ds)), p)

                t_star, val = _golden_min(f, 0.0, float(cap[i]))
                if val < best:
                    ds[l][i] = t_star
                    best = val
                else:
                    ds[l][i] = orig
        if prev - best < 1e-10 * max(1.0, abs(prev)):
            break
    return LoopTransform(tuple(ds))


def jacobian_elementwise_bounds(net, local):
    """Row vectors S(l) with |d z^(L) / d a^(l)| <= S(l) elementwise, for all
    hidden layers l of a scalar network; dict keyed by l."""
    if not net.is_scalar:
        raise ValueError("elementwise Jacobian bounds need a scalar network")
    if net.depth < 2:
        return {}
    out = {}
    s = np.abs(net.layers[-1].weight[0])
    out[net.depth - 1] = s
    for k in range(net.depth - 1, 1, -1):
        s = (s * local.slope_hi[k - 1]) @ np.abs(net.layers[k - 1].weight)
        out[k - 1] = s
    return out


def jacobian_elementwise_bound(net, local, l):
    if not 1 <= l <= net.depth - 1:
        raise ValueError(f"layer index {l} out of range [1, {net.depth - 1}]")
    return jacobian_elementwise_bounds(net, local)[l]
