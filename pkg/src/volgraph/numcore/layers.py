"""Reusable neural building blocks: affine maps and a transformer encoder layer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from . import tensor as T
from .params import ParamStore
from .tensor import Tensor


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """x @ w.T (+ b). Weight layout is (d_out, d_in)."""
    out = T.matmul(x, T.swapaxes(w, -1, -2))
    if b is not None:
        out = T.add(out, b)
    return out


@dataclass
class TransformerLayerParams:
    """One post-norm encoder layer: self-attention then a two-layer MLP."""

    wq: Tensor
    bq: Tensor
    wk: Tensor
    bk: Tensor
    wv: Tensor
    bv: Tensor
    wo: Tensor
    bo: Tensor
    ff1_w: Tensor
    ff1_b: Tensor
    ff2_w: Tensor
    ff2_b: Tensor
    ln1_gamma: Tensor
    ln1_beta: Tensor
    ln2_gamma: Tensor
    ln2_beta: Tensor

    @classmethod
    def init(
        cls,
        store: ParamStore,
        rng: np.random.Generator,
        prefix: str,
        d: int,
        d_ff: int | None = None,
    ) -> "TransformerLayerParams":
        d_ff = 4 * d if d_ff is None else d_ff
        wq, bq = store.linear(rng, f"{prefix}.attn.q", d, d)
        wk, bk = store.linear(rng, f"{prefix}.attn.k", d, d)
        wv, bv = store.linear(rng, f"{prefix}.attn.v", d, d)
        wo, bo = store.linear(rng, f"{prefix}.attn.out", d, d)
        ff1_w, ff1_b = store.linear(rng, f"{prefix}.ff1", d, d_ff)
        ff2_w, ff2_b = store.linear(rng, f"{prefix}.ff2", d_ff, d)
        ln1_gamma, ln1_beta = store.layer_norm(f"{prefix}.ln1", d)
        ln2_gamma, ln2_beta = store.layer_norm(f"{prefix}.ln2", d)
        return cls(
            wq, bq, wk, bk, wv, bv, wo, bo,
            ff1_w, ff1_b, ff2_w, ff2_b,
            ln1_gamma, ln1_beta, ln2_gamma, ln2_beta,
        )


def transformer_encoder_layer(x: Tensor, p: TransformerLayerParams, n_heads: int) -> Tensor:
    """Self-attention + feed-forward with residuals and post-layer-norm.

    ``x`` is a (batch, seq, d) block of equal-length sequences; no padding
    or masking is involved, which keeps every batch element's result
    independent of its batchmates.
    """
    b, s, d = x.shape
    if d % n_heads != 0:
        raise ShapeError(f"model width {d} not divisible by {n_heads} heads")
    dh = d // n_heads

    def split_heads(t: Tensor) -> Tensor:
        return T.swapaxes(T.reshape(t, (b, s, n_heads, dh)), 1, 2)

    q = split_heads(linear(x, p.wq, p.bq))
    k = split_heads(linear(x, p.wk, p.bk))
    v = split_heads(linear(x, p.wv, p.bv))

    scores = T.div(T.matmul(q, T.swapaxes(k, -1, -2)), float(np.sqrt(dh)))
    attn = T.softmax(scores, axis=-1)
    ctx = T.reshape(T.swapaxes(T.matmul(attn, v), 1, 2), (b, s, d))

    x = T.layer_norm(T.add(x, linear(ctx, p.wo, p.bo)), p.ln1_gamma, p.ln1_beta)
    ff = linear(T.relu(linear(x, p.ff1_w, p.ff1_b)), p.ff2_w, p.ff2_b)
    return T.layer_norm(T.add(x, ff), p.ln2_gamma, p.ln2_beta)
