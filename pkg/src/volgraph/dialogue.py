"""Call-level dialogue encoder.

Every sentence row is the sentence vector concatenated with four
trainable structural embeddings (position in call, utterance index,
speaker role, call part). Rows are projected to the model width, a
trainable CLS vector is prepended, and an L-layer transformer encoder
runs over the sequence; the CLS position's final state is the call
embedding.

Calls are encoded in batches grouped by sentence count. Equal-length
grouping means no padding and no attention masks, and — because every
batched operation here treats batch elements independently — a call's
embedding is bit-for-bit the same no matter which other calls share its
batch. The temporal no-leakage guarantee relies on exactly that.
"""

from __future__ import annotations

import hashlib
import json
import re
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataio.records import CallRecord, PARTS, ROLES
from .errors import ConfigError, ParseError, ShapeError
from .numcore import (
    ParamStore,
    Tensor,
    TransformerLayerParams,
    concat,
    linear,
    matmul,
    reshape,
    take,
    transformer_encoder_layer,
    uniform_init,
)

_ROLE_INDEX = {r: i for i, r in enumerate(ROLES)}
_PART_INDEX = {p: i for i, p in enumerate(PARTS)}


@dataclass
class StructEmbedTables:
    """Trainable lookup tables for the four structural attributes."""

    position: Tensor
    utterance: Tensor
    role: Tensor
    part: Tensor
    max_sentences: int
    max_utterances: int

    @classmethod
    def init(
        cls,
        store: ParamStore,
        rng: np.random.Generator,
        prefix: str = "dialogue.tables",
        d_p: int = 8,
        d_u: int = 8,
        d_r: int = 8,
        d_q: int = 8,
        max_sentences: int = 512,
        max_utterances: int = 256,
    ) -> "StructEmbedTables":
        return cls(
            position=store.add(f"{prefix}.position", uniform_init(rng, (max_sentences, d_p), d_p)),
            utterance=store.add(
                f"{prefix}.utterance", uniform_init(rng, (max_utterances, d_u), d_u)
            ),
            role=store.add(f"{prefix}.role", uniform_init(rng, (2, d_r), d_r)),
            part=store.add(f"{prefix}.part", uniform_init(rng, (2, d_q), d_q)),
            max_sentences=max_sentences,
            max_utterances=max_utterances,
        )

    @property
    def total_dim(self) -> int:
        return sum(t.shape[1] for t in (self.position, self.utterance, self.role, self.part))


@dataclass
class DialogueEncoderParams:
    proj_w: Tensor
    proj_b: Tensor
    cls: Tensor
    layers: list[TransformerLayerParams]
    n_heads: int

    @classmethod
    def init(
        cls,
        store: ParamStore,
        rng: np.random.Generator,
        d_in: int,
        d_hidden: int,
        n_layers: int,
        n_heads: int,
        prefix: str = "dialogue",
        d_ff: int | None = None,
    ) -> "DialogueEncoderParams":
        if d_hidden % n_heads != 0:
            raise ConfigError(f"d_hidden {d_hidden} not divisible by {n_heads} heads")
        proj_w, proj_b = store.linear(rng, f"{prefix}.proj", d_in, d_hidden)
        cls_vec = store.add(f"{prefix}.cls", uniform_init(rng, (1, d_hidden), d_hidden))
        layers = [
            TransformerLayerParams.init(store, rng, f"{prefix}.layer{i}", d_hidden, d_ff=d_ff)
            for i in range(n_layers)
        ]
        return cls(proj_w, proj_b, cls_vec, layers, n_heads)


def hash_featurizer(text: str, d_s: int = 768) -> np.ndarray:
    """Deterministic bag-of-token-hashes vector, ℓ2-normalized.

    Bucketing uses crc32 so the mapping is stable across processes (the
    builtin hash() is salted per interpreter run).
    """
    vec = np.zeros(d_s, dtype=np.float64)
    for token in re.findall(r"[a-z0-9]+", text.lower()):
        vec[zlib.crc32(token.encode("utf-8")) % d_s] += 1.0
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    return vec


def _sentence_matrix(call: CallRecord, featurizer, d_s: int | None) -> np.ndarray:
    rows = []
    for s in call.sentences:
        if s.vector is not None:
            rows.append(np.asarray(s.vector, dtype=np.float64))
        elif featurizer is not None:
            rows.append(featurizer(s.text))
        else:
            raise ConfigError(
                f"call {call.call_id}: sentence {s.position} has no vector and no featurizer given"
            )
    mat = np.stack(rows)
    if d_s is not None and mat.shape[1] != d_s:
        raise ShapeError(
            f"call {call.call_id}: sentence vectors have dim {mat.shape[1]}, expected {d_s}"
        )
    return mat


def featurize_sentences(
    call: CallRecord,
    tables: StructEmbedTables,
    featurizer=None,
    d_s: int | None = None,
) -> Tensor:
    """Rows of sentence vector ⊕ position ⊕ utterance ⊕ role ⊕ part embeddings.

    Calls longer than the position table are truncated from the end;
    utterance indices beyond the utterance table clamp to its last row.
    """
    kept = call.sentences[: tables.max_sentences]
    if not kept:
        raise ParseError(f"call {call.call_id} has no sentences")
    base = _sentence_matrix(
        CallRecord(call.call_id, call.company_id, call.call_date, list(kept)), featurizer, d_s
    )
    pos_idx = np.arange(len(kept))
    utt_idx = np.minimum(
        np.array([s.utterance_idx for s in kept]), tables.max_utterances - 1
    )
    try:
        role_idx = np.array([_ROLE_INDEX[s.role] for s in kept])
        part_idx = np.array([_PART_INDEX[s.part] for s in kept])
    except KeyError as e:
        raise ParseError(f"call {call.call_id}: unknown role/part label {e}") from e
    return concat(
        [
            Tensor(base),
            take(tables.position, pos_idx),
            take(tables.utterance, utt_idx),
            take(tables.role, role_idx),
            take(tables.part, part_idx),
        ],
        axis=1,
    )


def encode_dialogue(x: Tensor, params: DialogueEncoderParams) -> Tensor:
    """Encode one featurized call (N × d_in) into its d_hidden call embedding."""
    if x.ndim != 2 or x.shape[0] < 1:
        raise ShapeError(f"expected (N, d_in) sentence block, got {x.shape}")
    batched = encode_featurized_batch(reshape(x, (1,) + x.shape), params)
    return reshape(batched, (batched.shape[1],))


def encode_featurized_batch(x: Tensor, params: DialogueEncoderParams) -> Tensor:
    """Encode a (B, N, d_in) block of equal-length calls into (B, d_hidden)."""
    b, n, _ = x.shape
    h = linear(x, params.proj_w, params.proj_b)
    ones = Tensor(np.ones((b, 1, 1)))
    cls_rows = matmul(ones, params.cls)  # broadcast the CLS row to every batch element
    h = concat([cls_rows, h], axis=1)
    for layer in params.layers:
        h = transformer_encoder_layer(h, layer, params.n_heads)
    return take(reshape(h, (b * (n + 1), h.shape[2])), np.arange(b) * (n + 1))


def encode_calls(
    calls: list[CallRecord],
    tables: StructEmbedTables,
    params: DialogueEncoderParams,
    featurizer=None,
    d_s: int | None = None,
) -> Tensor:
    """Embed many calls, batching equal-length calls together.

    Returns an (len(calls), d_hidden) tensor in input order. Batch
    composition never changes a call's embedding (see module docstring),
    so group scheduling is free to chase throughput.
    """
    feats = [featurize_sentences(c, tables, featurizer=featurizer, d_s=d_s) for c in calls]
    groups: dict[int, list[int]] = {}
    for i, f in enumerate(feats):
        groups.setdefault(f.shape[0], []).append(i)

    chunks = []
    order = []
    for n in sorted(groups):
        members = groups[n]
        block = concat([feats[i] for i in members], axis=0)
        block = reshape(block, (len(members), n, block.shape[1]))
        chunks.append(encode_featurized_batch(block, params))
        order.extend(members)
    stacked = concat(chunks, axis=0) if len(chunks) > 1 else chunks[0]
    inverse = np.argsort(np.array(order), kind="stable")
    return take(stacked, inverse)


# -- optional embedding cache (frozen-encoder workflows) ---------------------------


def dialogue_param_hash(store: ParamStore, prefix: str = "dialogue") -> str:
    digest = hashlib.sha256()
    for name, t in store.items():
        if name.startswith(prefix):
            digest.update(name.encode())
            digest.update(np.ascontiguousarray(t.data).tobytes())
    return digest.hexdigest()


def save_dialogue_cache(path, call_ids: list[str], vectors: np.ndarray, param_hash: str) -> None:
    path = Path(path)
    np.savez(path, vectors=vectors)
    manifest = {
        "call_ids": call_ids,
        "dims": list(vectors.shape),
        "param_hash": param_hash,
    }
    path.with_suffix(".json").write_text(json.dumps(manifest, indent=2))


def load_dialogue_cache(path, expected_hash: str) -> dict[str, np.ndarray] | None:
    """Return call_id → embedding, or None when stale/absent."""
    path = Path(path)
    manifest_path = path.with_suffix(".json")
    npz_path = path if path.suffix == ".npz" else path.with_suffix(".npz")
    if not manifest_path.exists() or not npz_path.exists():
        return None
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("param_hash") != expected_hash:
        return None
    vectors = np.load(npz_path)["vectors"]
    return dict(zip(manifest["call_ids"], vectors))
