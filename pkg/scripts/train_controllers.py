#!/usr/bin/env python3
"""Train the shipped benchmark controllers.

Both controllers imitate a discrete-time LQR policy on their plant (the
double integrator and the linearized 6-D quadrotor), fitted with plain
numpy Adam on uniformly sampled states.  Writes JSON weight files under
src/curvreach/data/.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from curvreach.fileio import save_network  # noqa: E402
from curvreach.model import Activation, Layer, Network  # noqa: E402


def dlqr(A, B, Q, R, iters=2000):
    P = Q.copy()
    for _ in range(iters):
        BtP = B.T @ P
        K = np.linalg.solve(R + BtP @ B, BtP @ A)
        Pn = Q + A.T @ P @ (A - B @ K)
        if np.max(np.abs(Pn - P)) < 1e-12:
            P = Pn
            break
        P = Pn
    BtP = B.T @ P
    return np.linalg.solve(R + BtP @ B, BtP @ A)


def init_params(dims, rng):
    params = []
    for i in range(len(dims) - 1):
        w = rng.standard_normal((dims[i + 1], dims[i])) * np.sqrt(2.0 / dims[i])
        b = np.zeros(dims[i + 1])
        params.append([w, b])
    return params


def forward(params, x):
    acts = [x]
    for w, b in params[:-1]:
        acts.append(np.tanh(acts[-1] @ w.T + b))
    w, b = params[-1]
    acts.append(acts[-1] @ w.T + b)
    return acts


def train(dims, target_fn, lo, hi, seed=0, steps=6000, batch=512, lr=2e-3):
    rng = np.random.default_rng(seed)
    params = init_params(dims, rng)
    m = [[np.zeros_like(w), np.zeros_like(b)] for w, b in params]
    v = [[np.zeros_like(w), np.zeros_like(b)] for w, b in params]
    b1, b2, eps = 0.9, 0.999, 1e-8
    for t in range(1, steps + 1):
        x = lo + rng.random((batch, dims[0])) * (hi - lo)
        y = target_fn(x)
        acts = forward(params, x)
        pred = acts[-1]
        delta = 2.0 * (pred - y) / batch  # dL/dpred for mean-squared error
        grads = []
        for i in range(len(params) - 1, -1, -1):
            a_in = acts[i]
            gw = delta.T @ a_in
            gb = delta.sum(axis=0)
            grads.append([gw, gb])
            if i > 0:
                delta = (delta @ params[i][0]) * (1.0 - acts[i] ** 2)
        grads.reverse()
        for i, (gw, gb) in enumerate(grads):
            for j, g in enumerate((gw, gb)):
                m[i][j] = b1 * m[i][j] + (1 - b1) * g
                v[i][j] = b2 * v[i][j] + (1 - b2) * g * g
                mh = m[i][j] / (1 - b1 ** t)
                vh = v[i][j] / (1 - b2 ** t)
                params[i][j] = params[i][j] - lr * mh / (np.sqrt(vh) + eps)
        if t % 1000 == 0:
            err = float(np.sqrt(np.mean((pred - y) ** 2)))
            print(f"  step {t}: rmse {err:.5f}")
    layers = []
    for i, (w, b) in enumerate(params):
        act = Activation.TANH if i < len(params) - 1 else None
        layers.append(Layer(w, b, act))
    return Network(tuple(layers))


def main():
    out_dir = Path(__file__).resolve().parents[1] / "src" / "curvreach" / "data"
    out_dir.mkdir(parents=True, exist_ok=True)

    print("double integrator controller (2x10x5x5x1)")
    A = np.array([[1.0, 1.0], [0.0, 1.0]])
    B = np.array([[0.5], [1.0]])
    K = dlqr(A, B, np.eye(2), np.array([[1.0]]))
    print("  lqr gain:", K)
    lo = np.array([-6.0, -6.0])
    hi = np.array([6.0, 6.0])
    net = train([2, 10, 5, 5, 1], lambda x: -(x @ K.T), lo, hi, seed=1)
    save_network(net, out_dir / "di_controller.json")

    print("6-D quadrotor controller (6x32x32x3)")
    dt, g = 0.1, 9.81
    A6 = np.block([[np.eye(3), dt * np.eye(3)], [np.zeros((3, 3)), np.eye(3)]])
    B6 = np.vstack([np.zeros((3, 3)),
                    dt * np.array([[g, 0.0, 0.0], [0.0, -g, 0.0], [0.0, 0.0, 1.0]])])
    K6 = dlqr(A6, B6, np.diag([2.0, 2.0, 2.0, 1.0, 1.0, 1.0]), np.eye(3))
    u_ss = np.array([0.0, 0.0, g])  # cancels the constant gravity drift
    lo6 = np.array([-1.0, -1.0, -1.0, -2.0, -2.0, -2.0])
    hi6 = np.array([6.0, 6.0, 5.0, 2.0, 2.0, 2.0])
    net6 = train([6, 32, 32, 3], lambda x: u_ss - (x @ K6.T), lo6, hi6,
                 seed=2, steps=9000)
    save_network(net6, out_dir / "quad6_controller.json")


if __name__ == "__main__":
    main()
