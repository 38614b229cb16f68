# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend: dense-stack forward/backward and fused Adam.

Matmuls go through BLAS (dgemm); bias, activations and their derivatives are
fused single-pass loops.  Semantics match dafs.nn.kernels_py exactly.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log1p, sqrt
from scipy.linalg.cython_blas cimport dgemm

NAME = "compiled"

cdef int IDENTITY = 0, TANH = 1, SOFTPLUS = 2, RELU = 3


cdef void _gemm(double* a, double* b, double* c,
                int m, int n, int k, bint ta, bint tb,
                int lda, int ldb, double beta) noexcept nogil:
    """Row-major C(m,n) = op(A)(m,k) @ op(B)(k,n) + beta*C via column-major BLAS.

    Operands swap and the result is computed as C^T in column-major order,
    which is exactly the row-major C.  lda/ldb are the raw arrays' row-major
    column counts.
    """
    cdef double alpha = 1.0
    cdef char fa = b'T' if tb else b'N'
    cdef char fb = b'T' if ta else b'N'
    dgemm(&fa, &fb, &n, &m, &k, &alpha, b, &ldb, a, &lda, &beta, c, &n)


cdef inline double _sigmoid(double z) noexcept nogil:
    cdef double e
    if z >= 0.0:
        return 1.0 / (1.0 + exp(-z))
    e = exp(z)
    return e / (1.0 + e)


def stack_forward(list weights, list biases, acts, x):
    """See dafs.nn.kernels_py.stack_forward."""
    cdef cnp.ndarray[double, ndim=2, mode="c"] h = np.ascontiguousarray(x)
    cdef cnp.ndarray[double, ndim=2, mode="c"] w, pre, post
    cdef cnp.ndarray[double, ndim=1, mode="c"] b
    cdef int li, i, j, batch, din, dout, act
    cdef double z
    cdef list pres = [], posts = []
    cdef int n_layers = len(weights)

    for li in range(n_layers):
        w = weights[li]
        b = biases[li]
        act = acts[li]
        batch = h.shape[0]
        din = w.shape[0]
        dout = w.shape[1]
        if h.shape[1] != din:
            raise ValueError(f"input dim {h.shape[1]} != layer in_dim {din}")
        pre = np.empty((batch, dout))
        _gemm(&h[0, 0], &w[0, 0], &pre[0, 0], batch, dout, din, 0, 0, din, dout, 0.0)
        with nogil:
            for i in range(batch):
                for j in range(dout):
                    pre[i, j] += b[j]
        if act == IDENTITY:
            post = pre
        elif act == TANH:
            # numpy's SIMD tanh beats a scalar libm loop by a wide margin
            post = np.tanh(pre)
        else:
            post = np.empty((batch, dout))
            with nogil:
                for i in range(batch):
                    for j in range(dout):
                        z = pre[i, j]
                        if act == SOFTPLUS:
                            post[i, j] = (z if z > 0.0 else 0.0) + log1p(exp(-fabs(z)))
                        else:
                            post[i, j] = z if z > 0.0 else 0.0
        pres.append(pre)
        posts.append(post)
        h = post
    return posts, pres


def stack_backward(list weights, acts, x, list posts, list pres, d_out,
                   list d_weights, list d_biases):
    """See dafs.nn.kernels_py.stack_backward."""
    cdef cnp.ndarray[double, ndim=2, mode="c"] d_post = np.ascontiguousarray(d_out)
    cdef cnp.ndarray[double, ndim=2, mode="c"] w, dw, pre, post, d_pre, inp, d_inp
    cdef cnp.ndarray[double, ndim=1, mode="c"] db
    cdef int li, i, j, batch, din, dout, act
    cdef double g
    cdef int n_layers = len(weights)

    for li in range(n_layers - 1, -1, -1):
        w = weights[li]
        dw = d_weights[li]
        db = d_biases[li]
        pre = pres[li]
        post = posts[li]
        act = acts[li]
        batch = pre.shape[0]
        din = w.shape[0]
        dout = w.shape[1]
        d_pre = np.empty((batch, dout))
        with nogil:
            for i in range(batch):
                for j in range(dout):
                    if act == IDENTITY:
                        g = 1.0
                    elif act == TANH:
                        g = 1.0 - post[i, j] * post[i, j]
                    elif act == SOFTPLUS:
                        g = _sigmoid(pre[i, j])
                    else:
                        g = 1.0 if pre[i, j] > 0.0 else 0.0
                    d_pre[i, j] = g * d_post[i, j]
            for j in range(dout):
                g = 0.0
                for i in range(batch):
                    g += d_pre[i, j]
                db[j] += g
        inp = x if li == 0 else posts[li - 1]
        # dW += inp^T @ d_pre ; d_inp = d_pre @ W^T
        _gemm(&inp[0, 0], &d_pre[0, 0], &dw[0, 0], din, dout, batch, 1, 0, din, dout, 1.0)
        d_inp = np.empty((batch, din))
        _gemm(&d_pre[0, 0], &w[0, 0], &d_inp[0, 0], batch, din, dout, 0, 1, dout, dout, 0.0)
        d_post = d_inp
    return d_post


def adam_step(cnp.ndarray[double, ndim=1, mode="c"] data,
              cnp.ndarray[double, ndim=1, mode="c"] grad,
              cnp.ndarray[double, ndim=1, mode="c"] m,
              cnp.ndarray[double, ndim=1, mode="c"] v,
              long t, double lr, double beta1, double beta2, double eps):
    """See dafs.nn.kernels_py.adam_step."""
    cdef Py_ssize_t i, n = data.shape[0]
    cdef double c1 = 1.0 - beta1 ** t
    cdef double c2 = 1.0 - beta2 ** t
    cdef double g, mh, vh
    with nogil:
        for i in range(n):
            g = grad[i]
            m[i] = beta1 * m[i] + (1.0 - beta1) * g
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g
            mh = m[i] / c1
            vh = v[i] / c2
            data[i] -= lr * mh / (sqrt(vh) + eps)
