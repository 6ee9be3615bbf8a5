"""Single-hidden-layer MLPs with manual reverse-mode gradients, plus Adam.

Networks are 4 dense arrays; the actor squashes its output with tanh so
policy means stay bounded, the critic head is linear.  ``backward`` returns
exact gradients of ``sum(output * output_grad)`` so callers fold loss
scaling into ``output_grad``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TANH = "tanh"
LINEAR = "linear"


@dataclass
class MlpParams:
    w1: np.ndarray   # (hidden, in)
    b1: np.ndarray   # (hidden,)
    w2: np.ndarray   # (out, hidden)
    b2: np.ndarray   # (out,)
    output: str = TANH

    def arrays(self):
        return [self.w1, self.b1, self.w2, self.b2]

    def copy(self):
        return MlpParams(self.w1.copy(), self.b1.copy(), self.w2.copy(),
                         self.b2.copy(), self.output)


def _orthogonal(rows, cols, rng, gain):
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return gain * q[:rows, :cols]


def init_mlp(in_dim, hidden, out_dim, output, rng, final_scale=1.0):
    """Orthogonally initialized network; ``final_scale`` shrinks the head.

    A small actor head keeps initial residuals near zero, so the starting
    policy coincides with the plain reference-tracking controller.
    """
    return MlpParams(
        w1=_orthogonal(hidden, in_dim, rng, gain=np.sqrt(2.0)),
        b1=np.zeros(hidden),
        w2=_orthogonal(out_dim, hidden, rng, gain=final_scale),
        b2=np.zeros(out_dim),
        output=output,
    )


def forward(net, x):
    """Batched forward pass; x is (n, in) or (in,)."""
    single = x.ndim == 1
    if single:
        x = x[None, :]
    h = np.maximum(x @ net.w1.T + net.b1, 0.0)
    y = h @ net.w2.T + net.b2
    if net.output == TANH:
        y = np.tanh(y)
    return y[0] if single else y


def backward(net, x, output_grad):
    """Gradients of sum(forward(net, x) * output_grad).

    Returns ([dw1, db1, dw2, db2], dx).
    """
    single = x.ndim == 1
    if single:
        x = x[None, :]
        output_grad = output_grad[None, :]
    pre1 = x @ net.w1.T + net.b1
    h = np.maximum(pre1, 0.0)
    pre2 = h @ net.w2.T + net.b2
    if net.output == TANH:
        y = np.tanh(pre2)
        g2 = output_grad * (1.0 - y * y)
    else:
        g2 = output_grad
    dw2 = g2.T @ h
    db2 = g2.sum(axis=0)
    gh = (g2 @ net.w2) * (pre1 > 0.0)
    dw1 = gh.T @ x
    db1 = gh.sum(axis=0)
    dx = gh @ net.w1
    return [dw1, db1, dw2, db2], (dx[0] if single else dx)


def global_norm(arrays):
    return float(np.sqrt(sum(float(np.sum(a * a)) for a in arrays)))


def clip_by_global_norm(arrays, max_norm):
    """Scale gradients in place so their global norm is at most max_norm."""
    norm = global_norm(arrays)
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for a in arrays:
            a *= scale
    return norm


class Adam:
    """Standard Adam over a list of parameter arrays."""

    def __init__(self, arrays, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(a) for a in arrays]
        self.v = [np.zeros_like(a) for a in arrays]
        self.t = 0

    def step(self, arrays, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        correction = np.sqrt(1.0 - b2 ** self.t) / (1.0 - b1 ** self.t)
        for a, g, m, v in zip(arrays, grads, self.m, self.v):
            m += (1.0 - b1) * (g - m)
            v += (1.0 - b2) * (g * g - v)
            a -= self.lr * correction * m / (np.sqrt(v) + self.eps)
