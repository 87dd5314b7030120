"""Evaluation metrics: per-window MSE, their mean, and R² against the baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataio.datasets import TAUS
from ..errors import ConfigError, ShapeError


def mse(preds, labels) -> float:
    preds = np.asarray(preds, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if preds.shape != labels.shape:
        raise ShapeError(f"preds {preds.shape} vs labels {labels.shape}")
    if preds.size == 0:
        raise ShapeError("MSE over zero samples")
    return float(np.mean((preds - labels) ** 2))


def r_squared(mse_model: float, mse_vpast: float) -> float:
    """Fraction of the baseline's error the model removes: 1 - MSE/MSE_vpast."""
    if mse_vpast <= 0.0:
        raise ConfigError(f"baseline MSE must be positive, got {mse_vpast}")
    return 1.0 - mse_model / mse_vpast


def mean_mse(per_tau: dict) -> float:
    missing = [t for t in TAUS if t not in per_tau]
    if missing:
        raise ConfigError(f"mean MSE needs every window, missing {missing}")
    return float(sum(per_tau[t] for t in TAUS) / len(TAUS))


@dataclass
class MetricsReport:
    """Per-window MSE, their arithmetic mean, R² vs baseline, sample counts."""

    mse_per_tau: dict
    r2_per_tau: dict
    n_samples: dict

    @property
    def mean_mse(self) -> float:
        return mean_mse(self.mse_per_tau)

    def to_dict(self) -> dict:
        out = {"mse_mean": self.mean_mse}
        for tau in TAUS:
            out[f"mse_{tau}"] = self.mse_per_tau[tau]
        for tau in TAUS:
            out[f"r2_{tau}"] = self.r2_per_tau[tau]
        out["n_samples"] = {str(t): int(self.n_samples[t]) for t in TAUS}
        return out


def build_report(
    preds: dict[int, np.ndarray],
    labels: dict[int, np.ndarray],
    baseline: dict[int, np.ndarray],
) -> tuple[MetricsReport, MetricsReport]:
    """Model report and baseline report over one aligned sample set."""
    missing = [t for t in TAUS if t not in preds or t not in labels or t not in baseline]
    if missing:
        raise ConfigError(f"report needs every window, missing {missing}")
    model_mse = {t: mse(preds[t], labels[t]) for t in TAUS}
    base_mse = {t: mse(baseline[t], labels[t]) for t in TAUS}
    n = {t: len(labels[t]) for t in TAUS}
    model_report = MetricsReport(
        mse_per_tau=model_mse,
        r2_per_tau={t: r_squared(model_mse[t], base_mse[t]) for t in TAUS},
        n_samples=n,
    )
    base_report = MetricsReport(
        mse_per_tau=base_mse,
        r2_per_tau={t: r_squared(base_mse[t], base_mse[t]) for t in TAUS},
        n_samples=n,
    )
    return model_report, base_report
