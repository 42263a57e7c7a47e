"""Preactivation intervals over an input box and localized activation bounds.

Interval bound propagation pushes a center/radius box through each affine
layer (center ``Wc + b``, radius ``|W|r``) and through the monotone-increasing
activations.  The resulting per-unit intervals tighten the global slope and
curvature ranges of each activation, which is what makes the Lipschitz and
Hessian certificates local.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .model import Activation, GLOBAL_CURVATURE, GLOBAL_SLOPE, act_value

_SLOPE_KERNELS = {
    Activation.TANH: K.slope_range_tanh,
    Activation.SIGMOID: K.slope_range_sigmoid,
    Activation.SOFTPLUS: K.slope_range_softplus,
}
_CURV_KERNELS = {
    Activation.TANH: K.curv_range_tanh,
    Activation.SIGMOID: K.curv_range_sigmoid,
    Activation.SOFTPLUS: K.curv_range_softplus,
}


@dataclass(frozen=True)
class LayerIntervals:
    """Sound preactivation bounds per hidden layer: lower[l] <= z^(l) <= upper[l]."""

    lower: tuple
    upper: tuple


@dataclass(frozen=True)
class LocalBounds:
    """Per-hidden-layer slope range [slope_lo, slope_hi] of sigma' and
    curvature range [curv_lo, curv_hi] of sigma''; curv_abs = max(|lo|, |hi|)."""

    slope_lo: tuple
    slope_hi: tuple
    curv_lo: tuple
    curv_hi: tuple

    @property
    def curv_abs(self):
        return tuple(np.maximum(np.abs(a), np.abs(b))
                     for a, b in zip(self.curv_lo, self.curv_hi))

    @property
    def num_hidden(self):
        return len(self.slope_lo)


def ibp_intervals(net, lo, hi):
    """Interval bound propagation of the box [lo, hi] through the network."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if lo.shape != (net.input_dim,) or hi.shape != (net.input_dim,):
        raise ValueError(f"box dimension must be ({net.input_dim},)")
    if np.any(lo > hi):
        raise ValueError("box lower bound exceeds upper bound")
    c = (lo + hi) / 2.0
    r = (hi - lo) / 2.0
    lowers, uppers = [], []
    for lay in net.layers[:-1]:
        c, r = K.interval_affine(lay.weight, lay.bias, c, r)
        zl, zu = c - r, c + r
        lowers.append(zl)
        uppers.append(zu)
        # activations are monotone increasing, so the image is [act(zl), act(zu)]
        al = act_value(lay.activation, zl)
        au = act_value(lay.activation, zu)
        c = (al + au) / 2.0
        r = (au - al) / 2.0
    return LayerIntervals(tuple(lowers), tuple(uppers))


def slope_range(kind, lo, hi):
    """Vector of (min, max) of sigma' over the per-unit intervals [lo, hi]."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise ValueError("interval lower bound exceeds upper bound")
    if kind is Activation.IDENTITY:
        return np.ones_like(lo), np.ones_like(hi)
    return _SLOPE_KERNELS[kind](lo, hi)


def curvature_range(kind, lo, hi):
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise ValueError("interval lower bound exceeds upper bound")
    if kind is Activation.IDENTITY:
        return np.zeros_like(lo), np.zeros_like(hi)
    return _CURV_KERNELS[kind](lo, hi)


def local_slope(kind, lo, hi):
    """Scalar (alpha, beta) slope bounds of one activation on [lo, hi]."""
    a, b = slope_range(kind, np.array([float(lo)]), np.array([float(hi)]))
    return float(a[0]), float(b[0])


def local_curvature(kind, lo, hi):
    """Scalar (alpha', beta', h) curvature bounds of one activation on [lo, hi]."""
    a, b = curvature_range(kind, np.array([float(lo)]), np.array([float(hi)]))
    return float(a[0]), float(b[0]), float(max(abs(a[0]), abs(b[0])))


def local_bounds(net, intervals):
    """LocalBounds for every hidden layer from its preactivation intervals."""
    s_lo, s_hi, c_lo, c_hi = [], [], [], []
    for lay, zl, zu in zip(net.layers[:-1], intervals.lower, intervals.upper):
        a, b = slope_range(lay.activation, zl, zu)
        ca, cb = curvature_range(lay.activation, zl, zu)
        s_lo.append(a)
        s_hi.append(b)
        c_lo.append(ca)
        c_hi.append(cb)
    return LocalBounds(tuple(s_lo), tuple(s_hi), tuple(c_lo), tuple(c_hi))


def global_bounds(net):
    """LocalBounds filled with the activations' global constants."""
    s_lo, s_hi, c_lo, c_hi = [], [], [], []
    for lay in net.layers[:-1]:
        n = lay.weight.shape[0]
        ga, gb = GLOBAL_SLOPE[lay.activation]
        ca, cb = GLOBAL_CURVATURE[lay.activation]
        s_lo.append(np.full(n, ga))
        s_hi.append(np.full(n, gb))
        c_lo.append(np.full(n, ca))
        c_hi.append(np.full(n, cb))
    return LocalBounds(tuple(s_lo), tuple(s_hi), tuple(c_lo), tuple(c_hi))


def bounds_for_box(net, lo, hi):
    """Convenience: IBP then localized bounds."""
    intervals = ibp_intervals(net, lo, hi)
    return local_bounds(net, intervals)
