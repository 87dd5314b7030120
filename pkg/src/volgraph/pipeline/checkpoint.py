"""Self-describing model checkpoints: one npz with a JSON manifest inside.

Layout: key "__manifest__" holds the JSON (format version, config,
seed, windows, mode, parameter manifest); every parameter array is
stored under "<tau-scope>/<param-name>". Separate-mode checkpoints
carry one scope per window; joint mode a single shared scope.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from .model import ModelConfig, VolatilityModel

FORMAT = "volgraph-checkpoint/1"


def save_checkpoint(path, models: dict[int, VolatilityModel], config: ModelConfig) -> None:
    arrays = {}
    scopes = {}
    seen = {}
    for tau, model in models.items():
        key = id(model)
        if key in seen:
            scopes[str(tau)] = seen[key]
            continue
        scope = "joint" if config.joint_heads else f"tau{tau}"
        seen[key] = scope
        scopes[str(tau)] = scope
        for name, t in model.store.items():
            arrays[f"{scope}/{name}"] = t.data
    manifest = {
        "format": FORMAT,
        "config": config.to_dict(),
        "seed": config.seed,
        "scopes": scopes,
        "params": sorted(arrays),
    }
    arrays["__manifest__"] = np.array(json.dumps(manifest))
    np.savez(Path(path), **arrays)


def load_checkpoint(path) -> tuple[dict[int, VolatilityModel], ModelConfig]:
    with np.load(Path(path), allow_pickle=False) as data:
        if "__manifest__" not in data:
            raise ConfigError(f"{path}: not a model checkpoint")
        manifest = json.loads(str(data["__manifest__"]))
        if manifest.get("format") != FORMAT:
            raise ConfigError(f"{path}: unsupported checkpoint format")
        config = ModelConfig.from_dict(manifest["config"])
        models: dict[int, VolatilityModel] = {}
        built: dict[str, VolatilityModel] = {}
        for tau_str, scope in manifest["scopes"].items():
            tau = int(tau_str)
            if scope not in built:
                taus = tuple(config.taus) if config.joint_heads else (tau,)
                model = VolatilityModel(config, taus)
                state = {
                    name: data[f"{scope}/{name}"] for name in model.store.names()
                }
                model.store.load_state_arrays(state)
                built[scope] = model
            models[tau] = built[scope]
    return models, config
