"""Forward/backward pairs for the layers of the 1-D U-Net.

Activations are laid out ``(batch, channels, length)``. Every ``*_forward``
returns ``(out, cache)``; the matching ``*_backward`` takes the upstream
gradient and the cache and returns the input gradient (plus parameter
gradients where the layer has parameters).
"""

from __future__ import annotations

import numpy as np


def init_uniform(rng, shape, fan_in):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


# --- convolution --------------------------------------------------------------


def conv1d_forward(x, w, b):
    """Same-padded stride-1 convolution. x: (B, Cin, L), w: (Cout, Cin, K), b: (Cout,)."""
    B, Cin, L = x.shape
    Cout, _, K = w.shape
    pad = K // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
    # cols[b, l, c, k] = xp[b, c, l + k]
    cols = np.stack([xp[:, :, k : k + L] for k in range(K)], axis=-1)
    cols = cols.transpose(0, 2, 1, 3).reshape(B * L, Cin * K)
    out = cols @ w.reshape(Cout, Cin * K).T + b
    out = out.reshape(B, L, Cout).transpose(0, 2, 1)
    return np.ascontiguousarray(out), (cols, x.shape, w)


def conv1d_backward(dout, cache):
    cols, (B, Cin, L), w = cache
    Cout, _, K = w.shape
    pad = K // 2
    d = dout.transpose(0, 2, 1).reshape(B * L, Cout)
    dw = (d.T @ cols).reshape(w.shape)
    db = dout.sum(axis=(0, 2))
    dcols = (d @ w.reshape(Cout, Cin * K)).reshape(B, L, Cin, K)
    dxp = np.zeros((B, Cin, L + 2 * pad))
    for k in range(K):
        dxp[:, :, k : k + L] += dcols[:, :, :, k].transpose(0, 2, 1)
    return dxp[:, :, pad : pad + L], dw, db


# --- affine -------------------------------------------------------------------


def linear_forward(x, w, b):
    """x: (B, Din), w: (Dout, Din)."""
    return x @ w.T + b, (x, w)


def linear_backward(dout, cache):
    x, w = cache
    return dout @ w, dout.T @ x, dout.sum(axis=0)


# --- activation -----------------------------------------------------------------


def silu_forward(x):
    sig = 0.5 * (1.0 + np.tanh(0.5 * x))
    return x * sig, (x, sig)


def silu_backward(dout, cache):
    x, sig = cache
    return dout * sig * (1.0 + x * (1.0 - sig))


# --- resampling ---------------------------------------------------------------


def avgpool_forward(x):
    B, C, L = x.shape
    return x.reshape(B, C, L // 2, 2).mean(axis=-1), None


def avgpool_backward(dout, cache):
    return np.repeat(dout, 2, axis=-1) * 0.5


def upsample_forward(x):
    return np.repeat(x, 2, axis=-1), None


def upsample_backward(dout, cache):
    B, C, L = dout.shape
    return dout.reshape(B, C, L // 2, 2).sum(axis=-1)


# --- timestep embedding ---------------------------------------------------------


def sinusoidal_embedding(t, dim: int) -> np.ndarray:
    """Transformer-style embedding of integer steps, shape (len(t), dim)."""
    t = np.asarray(t, dtype=float).reshape(-1)
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / half)
    args = t[:, None] * freqs[None, :]
    emb = np.concatenate([np.sin(args), np.cos(args)], axis=1)
    if dim % 2:
        emb = np.concatenate([emb, np.zeros((len(t), 1))], axis=1)
    return emb


# --- self-attention -------------------------------------------------------------


def attention_forward(h, wq, wk, wv, wo, bo):
    """Single-head self-attention over positions, residual added by the caller.

    h: (B, C, L); projections are (C, C). Returns (B, C, L).
    """
    X = h.transpose(0, 2, 1)  # (B, L, C)
    C = X.shape[-1]
    Q = X @ wq.T
    Kt = X @ wk.T
    V = X @ wv.T
    S = Q @ Kt.transpose(0, 2, 1) / np.sqrt(C)
    S = S - S.max(axis=-1, keepdims=True)
    E = np.exp(S)
    A = E / E.sum(axis=-1, keepdims=True)
    O = A @ V
    Y = O @ wo.T + bo
    return np.ascontiguousarray(Y.transpose(0, 2, 1)), (X, Q, Kt, V, A, O, wq, wk, wv, wo)


def attention_backward(dout, cache):
    X, Q, Kt, V, A, O, wq, wk, wv, wo = cache
    C = X.shape[-1]
    dY = dout.transpose(0, 2, 1)
    dwo = np.einsum("blo,blc->oc", dY, O)
    dbo = dY.sum(axis=(0, 1))
    dO = dY @ wo
    dA = dO @ V.transpose(0, 2, 1)
    dV = A.transpose(0, 2, 1) @ dO
    dS = A * (dA - (dA * A).sum(axis=-1, keepdims=True))
    dS = dS / np.sqrt(C)
    dQ = dS @ Kt
    dK = dS.transpose(0, 2, 1) @ Q
    dwq = np.einsum("blo,blc->oc", dQ, X)
    dwk = np.einsum("blo,blc->oc", dK, X)
    dwv = np.einsum("blo,blc->oc", dV, X)
    dX = dQ @ wq + dK @ wk + dV @ wv
    return dX.transpose(0, 2, 1), dwq, dwk, dwv, dwo, dbo
