"""Pure numpy implementations of the dense forward kernels.

Layers are packed as ``W[l]`` of shape (M, M) acting on the previous layer's
outputs; the input x sits in slot 0 of a zero vector before the first layer.
"""

import numpy as np


def forward_dense(W, b, relu, w_out, b_out, xs):
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    state = np.zeros((xs.shape[0], W.shape[1]))
    state[:, 0] = xs
    mask = np.asarray(relu, dtype=bool)
    for l in range(W.shape[0]):
        state = state @ W[l].T + b[l]
        np.maximum(state, 0.0, out=state, where=mask[l])
    return state @ w_out + b_out


def min_preactivation(W, b, relu, xs):
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    state = np.zeros((xs.shape[0], W.shape[1]))
    state[:, 0] = xs
    mask = np.asarray(relu, dtype=bool)
    out = np.empty(b.shape)
    for l in range(W.shape[0]):
        state = state @ W[l].T + b[l]
        out[l] = state.min(axis=0)
        np.maximum(state, 0.0, out=state, where=mask[l])
    return out
