"""Pure-numpy kernel backend for dense-stack forward/backward and Adam.

This is the reference implementation; `dafs.nn._fastcore` provides a compiled
drop-in replacement with identical semantics.  All arrays are float64 and
C-contiguous.  Activation codes: 0 identity, 1 tanh, 2 softplus, 3 relu.
"""

import numpy as np

NAME = "python"

IDENTITY, TANH, SOFTPLUS, RELU = 0, 1, 2, 3


def _sigmoid(z):
    # stable logistic: never exponentiates a positive argument
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _activate(act, pre):
    if act == IDENTITY:
        return pre
    if act == TANH:
        return np.tanh(pre)
    if act == SOFTPLUS:
        # softplus(z) = max(z, 0) + log1p(exp(-|z|)), overflow-free
        return np.maximum(pre, 0.0) + np.log1p(np.exp(-np.abs(pre)))
    if act == RELU:
        return np.maximum(pre, 0.0)
    raise ValueError(f"unknown activation code {act}")


def _activate_grad(act, pre, post, d_post):
    if act == IDENTITY:
        return d_post
    if act == TANH:
        return d_post * (1.0 - post * post)
    if act == SOFTPLUS:
        return d_post * _sigmoid(pre)
    if act == RELU:
        return d_post * (pre > 0.0)
    raise ValueError(f"unknown activation code {act}")


def stack_forward(weights, biases, acts, x):
    """Run a batch through a dense stack.

    weights[i]: (in_i, out_i); biases[i]: (out_i,); x: (batch, in_0).
    Returns (posts, pres): per-layer post- and pre-activation arrays, each
    (batch, out_i).  posts[-1] is the stack output.
    """
    pres = []
    posts = []
    h = x
    for w, b, act in zip(weights, biases, acts):
        pre = h @ w + b
        h = _activate(act, pre)
        pres.append(pre)
        posts.append(h)
    return posts, pres


def stack_backward(weights, acts, x, posts, pres, d_out, d_weights, d_biases):
    """Reverse-mode pass through a dense stack.

    Accumulates (+=) parameter gradients into d_weights/d_biases and returns
    the gradient w.r.t. x.  Caches must come from a stack_forward call on the
    same x.
    """
    d_post = d_out
    for i in range(len(weights) - 1, -1, -1):
        d_pre = _activate_grad(acts[i], pres[i], posts[i], d_post)
        inp = x if i == 0 else posts[i - 1]
        d_weights[i] += inp.T @ d_pre
        d_biases[i] += d_pre.sum(axis=0)
        d_post = d_pre @ weights[i].T
    return d_post


def adam_step(data, grad, m, v, t, lr, beta1, beta2, eps):
    """One bias-corrected Adam update, in place, on flat float64 arrays.

    t is the already-incremented step counter (1 on the first call).
    Gradients are left untouched; the caller zeroes them.
    """
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * (grad * grad)
    mhat = m / (1.0 - beta1**t)
    vhat = v / (1.0 - beta2**t)
    data -= lr * mhat / (np.sqrt(vhat) + eps)
