"""Market encoder: per-date attention pooling and a time-decayed GRU.

All calls on one date are pooled into a single market vector by global
attention; a GRU then walks the date sequence in chronological order.
The reset path of the GRU is additionally gated by a decay coefficient
sigma(w_d/(gap+1)) so that long gaps between consecutive call dates wash
out more of the carried state. The scan is strictly left-to-right: the
market state for a date is a function of calls on that date and earlier
ones only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .numcore import (
    ParamStore,
    Tensor,
    add,
    div,
    linear,
    matmul,
    mul,
    reshape,
    sigmoid,
    softmax,
    sub,
    sum_,
    tanh,
    uniform_init,
)


@dataclass
class MarketAttentionParams:
    w_k: Tensor  # key projection, d×d
    w_q: Tensor  # query vector, d

    @classmethod
    def init(
        cls, store: ParamStore, rng: np.random.Generator, d: int, prefix: str
    ) -> "MarketAttentionParams":
        return cls(
            w_k=store.add(f"{prefix}.attn.w_k", uniform_init(rng, (d, d), d)),
            w_q=store.add(f"{prefix}.attn.w_q", uniform_init(rng, (d,), d)),
        )


@dataclass
class TimeDecayGRUParams:
    w_z: Tensor
    u_z: Tensor
    b_z: Tensor
    w_r: Tensor
    u_r: Tensor
    b_r: Tensor
    w_h: Tensor
    u_h: Tensor
    b_h: Tensor
    w_d: Tensor  # decay scalar, shape (1,)
    w_a: Tensor  # output map, d×d
    b_a: Tensor

    @classmethod
    def init(
        cls, store: ParamStore, rng: np.random.Generator, d: int, prefix: str
    ) -> "TimeDecayGRUParams":
        def mat(name):
            return store.add(f"{prefix}.{name}", uniform_init(rng, (d, d), d))

        def vec(name):
            return store.add(f"{prefix}.{name}", uniform_init(rng, (d,), d))

        return cls(
            w_z=mat("gru.w_z"),
            u_z=mat("gru.u_z"),
            b_z=vec("gru.b_z"),
            w_r=mat("gru.w_r"),
            u_r=mat("gru.u_r"),
            b_r=vec("gru.b_r"),
            w_h=mat("gru.w_h"),
            u_h=mat("gru.u_h"),
            b_h=vec("gru.b_h"),
            w_d=store.add(f"{prefix}.gru.w_d", uniform_init(rng, (1,), 1)),
            w_a=mat("out.w_a"),
            b_a=vec("out.b_a"),
        )


@dataclass
class MarketParams:
    attention: MarketAttentionParams
    gru: TimeDecayGRUParams

    @classmethod
    def init(
        cls, store: ParamStore, rng: np.random.Generator, d: int, prefix: str = "market"
    ) -> "MarketParams":
        return cls(
            attention=MarketAttentionParams.init(store, rng, d, prefix),
            gru=TimeDecayGRUParams.init(store, rng, d, prefix),
        )


@dataclass
class MarketTimeline:
    """Per-date pooled inputs, hidden states, outputs, and attention weights."""

    pooled: list  # m_{t_i}, each (1, d)
    hidden: list  # a_{t_i}, each (1, d)
    outputs: list  # m'_{t_i}, each (1, d)
    betas: list = field(default_factory=list)  # numpy copies, for inspection
    deltas: list = field(default_factory=list)


def market_attention(
    embeddings: Tensor, params: MarketAttentionParams, literal_norm: bool = False
) -> tuple[Tensor, Tensor]:
    """Pool one date's call embeddings (n, d) into (1, d); also return weights.

    ``literal_norm`` switches to plain score normalization e_j / Σ e_u.
    That form divides by zero for zero-sum scores and can emit negative
    weights, so it exists for comparison tests only; the default is a
    softmax.
    """
    if embeddings.ndim != 2 or embeddings.shape[0] < 1:
        raise ShapeError(f"expected (n, d) date group, got {embeddings.shape}")
    d = embeddings.shape[1]
    keys = linear(embeddings, params.w_k)  # (n, d)
    scores = div(matmul(keys, reshape(params.w_q, (d, 1))), float(np.sqrt(d)))  # (n, 1)
    flat = reshape(scores, (scores.shape[0],))
    if literal_norm:
        beta = div(flat, sum_(flat))
    else:
        beta = softmax(flat, axis=-1)
    pooled = matmul(reshape(beta, (1, beta.shape[0])), embeddings)  # (1, d)
    return pooled, beta


def decay_coefficient(gap_days: int, w_d: Tensor) -> Tensor:
    """sigma(w_d / (gap+1)): shrinks toward sigma(0)=0.5 as the gap grows."""
    if gap_days < 0:
        raise ShapeError(f"negative date gap {gap_days}")
    return sigmoid(div(w_d, float(gap_days + 1)))


def market_gru_step(
    m: Tensor, a_prev: Tensor, delta: Tensor, p: TimeDecayGRUParams
) -> tuple[Tensor, Tensor]:
    """One GRU update; ``delta`` additionally damps the reset-gated state."""
    z = sigmoid(add(add(linear(m, p.w_z), linear(a_prev, p.u_z)), p.b_z))
    r = sigmoid(add(add(linear(m, p.w_r), linear(a_prev, p.u_r)), p.b_r))
    gated = mul(mul(delta, r), a_prev)
    a_tilde = tanh(add(add(linear(m, p.w_h), linear(gated, p.u_h)), p.b_h))
    a = add(mul(sub(1.0, z), a_prev), mul(z, a_tilde))
    m_prime = linear(a, p.w_a, p.b_a)
    return a, m_prime


def run_market_timeline(
    group_embeddings: list[Tensor],
    date_gaps: list[int],
    params: MarketParams,
    literal_norm: bool = False,
) -> MarketTimeline:
    """Scan chronologically ordered date groups into market states.

    ``group_embeddings[i]`` holds the (n_i, d) call embeddings of date i;
    ``date_gaps[i]`` is the day count since the previous date (0 for the
    first — the initial state is zero, so its decay never matters).
    """
    if len(group_embeddings) != len(date_gaps):
        raise ShapeError("one gap per date group required")
    d = group_embeddings[0].shape[1]
    timeline = MarketTimeline(pooled=[], hidden=[], outputs=[])
    a = Tensor(np.zeros((1, d)))
    for emb, gap in zip(group_embeddings, date_gaps):
        m, beta = market_attention(emb, params.attention, literal_norm=literal_norm)
        delta = decay_coefficient(gap, params.gru.w_d)
        a, m_prime = market_gru_step(m, a, delta, params.gru)
        timeline.pooled.append(m)
        timeline.hidden.append(a)
        timeline.outputs.append(m_prime)
        timeline.betas.append(beta.data.copy())
        timeline.deltas.append(float(delta.data[0]))
    return timeline


def timeline_debug_rows(dates, timeline: MarketTimeline) -> list[tuple]:
    """(date, node_rank, beta, delta) rows for the CSV debug dump."""
    rows = []
    for date, beta, delta in zip(dates, timeline.betas, timeline.deltas):
        for rank, b in enumerate(beta):
            rows.append((date, rank, float(b), delta))
    return rows
