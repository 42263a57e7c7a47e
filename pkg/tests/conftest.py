import numpy as np
import pytest

from curvreach import _kernels
from curvreach.model import Activation, Layer, Network


def quad_model(g, M):
    def fn(deltas):
        deltas = np.atleast_2d(deltas)
        return deltas @ g + 0.5 * np.einsum("ij,jk,ik->i", deltas, M, deltas)
    return fn


def ball_sup_oracle(g, M, eps, n_samples=100_000, seed=0):
    """Independent sup of the quadratic model over the ell_2 ball: dense
    sphere plus interior sampling, polished by projected gradient ascent from
    the best starts."""
    rng = np.random.default_rng(seed)
    n = g.shape[0]
    if n == 2:
        th = np.linspace(0.0, 2.0 * np.pi, n_samples, endpoint=False)
        sphere = eps * np.stack([np.cos(th), np.sin(th)], axis=1)
    else:
        d = rng.standard_normal((n_samples, n))
        sphere = eps * d / np.linalg.norm(d, axis=1, keepdims=True)
    interior = sphere * rng.random((sphere.shape[0], 1))
    pts = np.concatenate([sphere, interior])
    fn = quad_model(g, M)
    vals = fn(pts)
    order = np.argsort(vals)[::-1]
    best = float(vals[order[0]])
    lam_scale = max(1.0, float(np.abs(np.linalg.eigvalsh(M)).max()))
    step = 0.25 / lam_scale
    for k in order[:5]:
        x = pts[k].copy()
        for _ in range(4000):
            x = x + step * (g + M @ x)
            nn = np.linalg.norm(x)
            if nn > eps:
                x = x * (eps / nn)
        best = max(best, float(fn(x)[0]))
    return best


def make_net(dims, act=Activation.TANH, seed=0, scale=1.0, bias_scale=0.1):
    """Seeded random network with fan-in scaled weights."""
    rng = np.random.default_rng(seed)
    layers = []
    for i in range(len(dims) - 1):
        w = rng.standard_normal((dims[i + 1], dims[i])) * scale / np.sqrt(dims[i])
        b = rng.standard_normal(dims[i + 1]) * bias_scale
        layers.append(Layer(w, b, act if i < len(dims) - 2 else None))
    return Network(tuple(layers))


def linear_net(W, b=None):
    W = np.asarray(W, dtype=float)
    b = np.zeros(W.shape[0]) if b is None else np.asarray(b, dtype=float)
    return Network((Layer(W, b, None),))


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    _kernels.warmup()


@pytest.fixture(scope="session")
def di_controller():
    from curvreach.fileio import load_network
    from pathlib import Path
    path = Path(__file__).resolve().parents[1] / "src" / "curvreach" / "data" \
        / "di_controller.json"
    return load_network(path)
