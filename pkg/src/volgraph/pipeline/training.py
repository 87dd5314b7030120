"""Training loops: inductive pretraining, transductive fine-tuning, evaluation.

One optimizer step per quarter graph, full-graph loss over labeled
nodes, early stopping on validation MSE with snapshot/restore of the
best parameters. Everything is deterministic given a seed: the only
randomness is the parameter initialization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, InsufficientDataError, TrainingDivergedError
from ..numcore import AdamState, adam_step, no_grad
from .metrics import MetricsReport, build_report, mse
from .model import ModelConfig, PreparedQuarter, VolatilityModel, masked_mse_tensor


@dataclass
class TrainState:
    epoch: int = 0
    best_val_mse: float = float("inf")
    epochs_since_improvement: int = 0
    best_snapshot: dict | None = None

    def observe(self, val_mse: float, snapshot_fn) -> None:
        """Track one epoch's validation MSE; strict improvement resets patience."""
        if val_mse < self.best_val_mse:
            self.best_val_mse = val_mse
            self.epochs_since_improvement = 0
            self.best_snapshot = snapshot_fn()
        else:
            self.epochs_since_improvement += 1


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    val_mse: list = field(default_factory=list)
    stopped_epoch: int = 0
    best_epoch: int = 0
    best_val_mse: float = float("inf")

    def to_dict(self) -> dict:
        return {
            "train_loss": [float(x) for x in self.train_loss],
            "val_mse": [float(x) for x in self.val_mse],
            "stopped_epoch": self.stopped_epoch,
            "best_epoch": self.best_epoch,
            "best_val_mse": float(self.best_val_mse),
        }


def _quarter_loss(model: VolatilityModel, prepared: PreparedQuarter, mask: np.ndarray):
    preds, _, _ = model.forward(prepared)
    total = None
    for tau in model.taus:
        term = masked_mse_tensor(preds[tau], prepared.labels[tau], mask)
        total = term if total is None else total + term
    return total * (1.0 / len(model.taus))


def _validation_mse(model: VolatilityModel, quarters, masks) -> float:
    """Pooled per-sample MSE across quarters, averaged over the model's windows."""
    sq_sum = 0.0
    count = 0
    with no_grad():
        for prepared, mask in zip(quarters, masks):
            preds, _, _ = model.forward(prepared)
            idx = np.flatnonzero(mask)
            if idx.size == 0:
                continue
            for tau in model.taus:
                err = preds[tau].data[idx] - prepared.labels[tau][idx]
                sq_sum += float(np.sum(err * err))
                count += idx.size
    if count == 0:
        raise InsufficientDataError("validation split has no labeled nodes")
    return sq_sum / count


def train(
    model: VolatilityModel,
    train_quarters: list[PreparedQuarter],
    val_quarters: list[PreparedQuarter],
    config: ModelConfig | None = None,
) -> TrainHistory:
    """Early-stopped full-graph training; restores the best snapshot."""
    config = config or model.config
    if not train_quarters or not val_quarters:
        raise ConfigError("train and validation splits must both be nonempty")
    train_masks = [p.mask for p in train_quarters]
    val_masks = [p.mask for p in val_quarters]
    if not any(m.any() for m in train_masks):
        raise InsufficientDataError("no labeled training nodes")

    label_means = {
        tau: float(
            np.concatenate([p.labels[tau][m] for p, m in zip(train_quarters, train_masks)]).mean()
        )
        for tau in model.taus
    }
    model.warm_start_output_bias(label_means)

    state = TrainState()
    adam = AdamState.for_store(model.store)
    history = TrainHistory()
    for epoch in range(1, config.max_epochs + 1):
        state.epoch = epoch
        epoch_loss = 0.0
        for prepared, mask in zip(train_quarters, train_masks):
            if not mask.any():
                continue
            model.store.zero_grad()
            loss = _quarter_loss(model, prepared, mask)
            loss_value = loss.item()
            if not np.isfinite(loss_value):
                raise TrainingDivergedError(epoch, f"loss {loss_value}")
            loss.backward()
            adam_step(
                model.store,
                adam,
                lr=config.lr,
                weight_decay=config.weight_decay,
            )
            epoch_loss += loss_value
        val_mse = _validation_mse(model, val_quarters, val_masks)
        history.train_loss.append(epoch_loss / max(1, len(train_quarters)))
        history.val_mse.append(val_mse)
        state.observe(val_mse, model.store.state_arrays)
        if state.epochs_since_improvement == 0:
            history.best_epoch = epoch
        if state.epochs_since_improvement >= config.patience:
            break
    history.stopped_epoch = state.epoch
    history.best_val_mse = state.best_val_mse
    if state.best_snapshot is not None:
        model.store.load_state_arrays(state.best_snapshot)
    return history


def fine_tune(
    model: VolatilityModel,
    prepared: PreparedQuarter,
    masks: dict[str, np.ndarray],
    config: ModelConfig | None = None,
    max_epochs: int | None = None,
) -> TrainHistory:
    """Continue training on one masked graph with a fresh optimizer.

    The pretrained parameters are snapshotted with their validation MSE
    before any step, so a fine-tune that never improves restores them
    unchanged. ``max_epochs`` 0 is a no-op by the same route.
    """
    config = config or model.config
    train_mask = masks["train"] & prepared.mask
    val_mask = masks["val"] & prepared.mask
    if not train_mask.any() or not val_mask.any():
        raise InsufficientDataError("fine-tune masks leave no labeled nodes")
    epochs = config.max_epochs if max_epochs is None else max_epochs

    state = TrainState()
    state.observe(_validation_mse(model, [prepared], [val_mask]), model.store.state_arrays)
    adam = AdamState.for_store(model.store)  # fresh moments: pretraining state is gone
    history = TrainHistory()
    history.best_epoch = 0
    for epoch in range(1, epochs + 1):
        state.epoch = epoch
        model.store.zero_grad()
        loss = _quarter_loss(model, prepared, train_mask)
        loss_value = loss.item()
        if not np.isfinite(loss_value):
            raise TrainingDivergedError(epoch, f"loss {loss_value}")
        loss.backward()
        adam_step(model.store, adam, lr=config.lr, weight_decay=config.weight_decay)
        val_mse = _validation_mse(model, [prepared], [val_mask])
        history.train_loss.append(loss_value)
        history.val_mse.append(val_mse)
        state.observe(val_mse, model.store.state_arrays)
        if state.epochs_since_improvement == 0:
            history.best_epoch = epoch
        if state.epochs_since_improvement >= config.patience:
            break
    history.stopped_epoch = state.epoch
    history.best_val_mse = state.best_val_mse
    model.store.load_state_arrays(state.best_snapshot)
    return history


def evaluate(
    models: dict[int, VolatilityModel],
    quarters: list[PreparedQuarter],
    mask_per_quarter: list[np.ndarray] | None = None,
) -> tuple[MetricsReport, MetricsReport]:
    """Model and baseline reports over the same labeled sample set."""
    masks = mask_per_quarter or [p.mask for p in quarters]
    preds: dict[int, list] = {t: [] for t in models}
    labels: dict[int, list] = {t: [] for t in models}
    baseline: dict[int, list] = {t: [] for t in models}
    for prepared, mask in zip(quarters, masks):
        if prepared.v_past is None:
            raise ConfigError("evaluation needs baseline values; prepare with a dataset")
        idx = np.flatnonzero(mask & prepared.mask)
        if idx.size == 0:
            continue
        done: dict[int, dict[int, np.ndarray]] = {}
        for tau, model in models.items():
            key = id(model)
            if key not in done:
                done[key] = model.predict(prepared)
            preds[tau].append(done[key][tau][idx])
            labels[tau].append(prepared.labels[tau][idx])
            baseline[tau].append(prepared.v_past[tau][idx])
    cat = lambda d: {t: np.concatenate(v) for t, v in d.items()}
    return build_report(cat(preds), cat(labels), cat(baseline))


def v_past_report(quarters: list[PreparedQuarter]) -> MetricsReport:
    """Baseline-only report (no model involved)."""
    from ..dataio.datasets import TAUS

    per_tau = {}
    n = {}
    for tau in TAUS:
        y, v = [], []
        for p in quarters:
            if p.v_past is None:
                raise ConfigError("baseline report needs prepared datasets")
            idx = np.flatnonzero(p.mask)
            y.append(p.labels[tau][idx])
            v.append(p.v_past[tau][idx])
        y, v = np.concatenate(y), np.concatenate(v)
        per_tau[tau] = mse(v, y)
        n[tau] = len(y)
    return MetricsReport(
        mse_per_tau=per_tau, r2_per_tau={t: 0.0 for t in per_tau}, n_samples=n
    )
