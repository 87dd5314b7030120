"""Model assembly: dialogue encoder → company network encoder → output heads."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from ..dataio.datasets import TAUS
from ..dataio.records import QuarterDataset
from ..dialogue import (
    DialogueEncoderParams,
    StructEmbedTables,
    encode_calls,
    hash_featurizer,
)
from ..errors import ConfigError, ShapeError
from ..gnn import (
    GATLayerParams,
    GraphArrays,
    NetworkDiagnostics,
    company_network_encoder,
)
from ..graphbuild import QuarterGraph
from ..market import MarketParams
from ..numcore import ParamStore, Tensor, linear, relu, reshape


@dataclass
class ModelConfig:
    """Hyperparameters; defaults are the full-scale training configuration."""

    lr: float = 5e-4
    weight_decay: float = 1e-7
    d_hidden: int = 64
    dialogue_layers: int = 2
    dialogue_heads: int = 8
    network_layers: int = 3
    network_heads: int = 1
    patience: int = 10
    taus: tuple = TAUS
    seed: int = 0
    # data/feature dimensions
    d_s: int = 16
    d_p: int = 8
    d_u: int = 8
    d_r: int = 8
    d_q: int = 8
    max_sentences: int = 512
    max_utterances: int = 256
    # output head and transformer sizing
    mlp_hidden: int = 64
    d_ff: int | None = None
    # training loop
    max_epochs: int = 200
    joint_heads: bool = False
    literal_market_norm: bool = False
    # time-split boundaries: train < val_start <= val < test_start <= test
    val_start: int = 2016
    test_start: int = 2017

    def validate(self) -> None:
        if min(self.lr, self.weight_decay) < 0 or self.lr == 0:
            raise ConfigError("lr must be positive, weight_decay non-negative")
        for name in (
            "d_hidden",
            "dialogue_layers",
            "dialogue_heads",
            "network_layers",
            "patience",
            "d_s",
            "d_p",
            "d_u",
            "d_r",
            "d_q",
            "max_sentences",
            "max_utterances",
            "mlp_hidden",
            "max_epochs",
        ):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.network_heads != 1:
            raise ConfigError("the company network uses a single attention head")
        if self.d_hidden % self.dialogue_heads != 0:
            raise ConfigError(
                f"d_hidden {self.d_hidden} not divisible by {self.dialogue_heads} heads"
            )
        bad = [t for t in self.taus if t not in TAUS]
        if bad or not self.taus:
            raise ConfigError(f"taus must come from {TAUS}, got {self.taus}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["taus"] = list(self.taus)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        if "taus" in d:
            d["taus"] = tuple(int(t) for t in d["taus"])
        cfg = cls(**d)
        cfg.validate()
        return cfg


@dataclass
class PreparedQuarter:
    """A quarter graph plus everything the model needs as flat arrays."""

    graph: QuarterGraph
    arrays: GraphArrays
    labels: dict[int, np.ndarray]  # tau -> (N,) float, zero-filled where unlabeled
    mask: np.ndarray  # (N,) bool, node has labels
    v_past: dict[int, np.ndarray] | None  # tau -> (N,) float, aligned with mask

    @property
    def n_labeled(self) -> int:
        return int(self.mask.sum())


def prepare_quarter(graph: QuarterGraph, dataset: QuarterDataset | None = None) -> PreparedQuarter:
    """Extract label/baseline arrays in node order; nodes may be unlabeled."""
    n = graph.n_nodes
    mask = np.zeros(n, dtype=bool)
    labels = {tau: np.zeros(n) for tau in TAUS}
    v_past = None if dataset is None else {tau: np.zeros(n) for tau in TAUS}
    for node in graph.nodes:
        node_labels = node.labels
        if node_labels is None and dataset is not None:
            node_labels = dataset.labels.get(node.call_id)
        if node_labels is None:
            continue
        mask[node.node_id] = True
        for tau in TAUS:
            labels[tau][node.node_id] = node_labels[tau]
        if dataset is not None:
            baseline = dataset.v_past.get(node.call_id)
            if baseline is None:
                mask[node.node_id] = False
                continue
            for tau in TAUS:
                v_past[tau][node.node_id] = baseline[tau]
    return PreparedQuarter(
        graph=graph, arrays=GraphArrays.from_graph(graph), labels=labels, mask=mask, v_past=v_past
    )


class VolatilityModel:
    """One trainable pipeline instance covering one or more label windows.

    Parameter registration order is fixed by construction, which pins the
    optimizer-state and checkpoint layouts for a given config.
    """

    def __init__(self, config: ModelConfig, taus: tuple | None = None):
        config.validate()
        self.config = config
        self.taus = tuple(taus) if taus is not None else tuple(config.taus)
        rng = np.random.default_rng(config.seed)
        store = ParamStore()
        self.store = store

        self.tables = StructEmbedTables.init(
            store,
            rng,
            d_p=config.d_p,
            d_u=config.d_u,
            d_r=config.d_r,
            d_q=config.d_q,
            max_sentences=config.max_sentences,
            max_utterances=config.max_utterances,
        )
        d_in = config.d_s + self.tables.total_dim
        self.dialogue = DialogueEncoderParams.init(
            store,
            rng,
            d_in=d_in,
            d_hidden=config.d_hidden,
            n_layers=config.dialogue_layers,
            n_heads=config.dialogue_heads,
            d_ff=config.d_ff,
        )
        self.market_params = []
        self.gat_params = []
        for layer in range(config.network_layers):
            self.market_params.append(
                MarketParams.init(store, rng, config.d_hidden, prefix=f"network.layer{layer}.market")
            )
            act = "identity" if layer == config.network_layers - 1 else "relu"
            self.gat_params.append(
                GATLayerParams.init(
                    store, rng, config.d_hidden, prefix=f"network.layer{layer}.gat", activation=act
                )
            )
        self.heads = {}
        for tau in self.taus:
            w1, b1 = store.linear(rng, f"head.tau{tau}.hidden", config.d_hidden, config.mlp_hidden)
            w2, b2 = store.linear(rng, f"head.tau{tau}.out", config.mlp_hidden, 1)
            self.heads[tau] = (w1, b1, w2, b2)

    def encode(self, prepared: PreparedQuarter) -> Tensor:
        """Dialogue embeddings for every node, in node order."""
        return encode_calls(
            prepared.graph.calls,
            self.tables,
            self.dialogue,
            featurizer=lambda text: hash_featurizer(text, self.config.d_s),
            d_s=self.config.d_s,
        )

    def forward(
        self, prepared: PreparedQuarter
    ) -> tuple[dict[int, Tensor], Tensor, NetworkDiagnostics]:
        """Predictions per label window, final embeddings, and diagnostics."""
        v0 = self.encode(prepared)
        v_final, diag = company_network_encoder(
            v0,
            prepared.arrays,
            self.market_params,
            self.gat_params,
            literal_norm=self.config.literal_market_norm,
        )
        preds = {}
        for tau in self.taus:
            w1, b1, w2, b2 = self.heads[tau]
            h = relu(linear(v_final, w1, b1))
            y = linear(h, w2, b2)
            preds[tau] = reshape(y, (y.shape[0],))
        return preds, v_final, diag

    def predict(self, prepared: PreparedQuarter) -> dict[int, np.ndarray]:
        from ..numcore import no_grad

        with no_grad():
            preds, _, _ = self.forward(prepared)
        return {tau: p.data.copy() for tau, p in preds.items()}

    def warm_start_output_bias(self, label_means: dict[int, float]) -> None:
        """Aim the final bias at the train-label mean per window.

        Labels sit around -4, so Adam at the default learning rate would
        spend thousands of steps just moving the output level; starting the
        bias at the mean removes that plateau without touching anything else.
        """
        for tau in self.taus:
            _, _, _, b2 = self.heads[tau]
            b2.data = np.full_like(b2.data, label_means[tau])


def masked_mse_tensor(pred: Tensor, labels: np.ndarray, mask: np.ndarray) -> Tensor:
    """Differentiable MSE over masked nodes."""
    from ..numcore import mean_, mul, sub, take

    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise ShapeError("no labeled nodes in mask")
    diff = sub(take(pred, idx), Tensor(labels[idx]))
    return mean_(mul(diff, diff))
