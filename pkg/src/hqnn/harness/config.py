"""INI configuration with a fixed schema.

Example::

    [experiment]
    task = univariate
    model = hqnn
    qubits = 1
    layers = 5

    [train]
    epochs = 20
    seed = 0

Unknown sections or keys are rejected. Command-line flags override file values.
"""

from __future__ import annotations

import configparser
from dataclasses import replace
from pathlib import Path

from ..embedding import Embedding
from ..noise import Channel, Insertion, NoiseModel
from ..training import TrainConfig
from .models import ExperimentSpec, ModelKind, Task


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


SCHEMA: dict[str, dict[str, type | object]] = {
    "experiment": {
        "task": Task,
        "model": ModelKind,
        "qubits": int,
        "layers": int,
        "embedding": Embedding,
        "nn_width": int,
        "range": int,
        "data_path": Path,
        "inputs": int,
    },
    "train": {
        "learning_rate": float,
        "weight_decay": float,
        "beta1": float,
        "beta2": float,
        "epsilon": float,
        "epochs": int,
        "batch_size": int,
        "seed": int,
        "repeats": int,
        "cosine_schedule": _bool,
    },
    "noise": {"channel": Channel, "rate": float, "insertion": Insertion},
    "metrics": {"n_samples": int, "n_bins": int, "n_runs": int},
    "run": {"output_dir": Path, "jobs": int},
}


def load_config(path) -> dict[str, dict]:
    """Parse and type-check an INI file into ``{section: {key: value}}``."""
    parser = configparser.ConfigParser(interpolation=None)
    path = Path(path)
    if not parser.read(path, encoding="utf-8"):
        raise FileNotFoundError(path)
    out: dict[str, dict] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ValueError(f"{path}: unknown section [{section}]")
        out[section] = {}
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ValueError(f"{path}: unknown key {key!r} in [{section}]")
            try:
                out[section][key] = SCHEMA[section][key](raw.strip())
            except ValueError as exc:
                raise ValueError(f"{path}: [{section}] {key} = {raw!r}: {exc}") from None
    return out


def merge(config: dict[str, dict], overrides: dict[str, dict]) -> dict[str, dict]:
    """Overlay non-None override values on a parsed config."""
    out = {s: dict(v) for s, v in config.items()}
    for section, values in overrides.items():
        for key, val in values.items():
            if val is not None:
                out.setdefault(section, {})[key] = val
    return out


def spec_from_config(config: dict[str, dict]) -> ExperimentSpec:
    exp = config.get("experiment", {})
    tr = config.get("train", {})
    nz = config.get("noise", {})
    run = config.get("run", {})
    noise = NoiseModel(
        nz.get("channel", Channel.NONE),
        nz.get("rate", 0.0),
        nz.get("insertion", Insertion.AFTER_EACH_GATE),
    )
    return ExperimentSpec(
        task=exp.get("task", Task.UNIVARIATE),
        model=exp.get("model", ModelKind.HQNN),
        n_qubits=exp.get("qubits", 1),
        n_layers=exp.get("layers", 5),
        embedding=exp.get("embedding", Embedding.ANGLE),
        noise=noise,
        train=replace(TrainConfig(), **tr),
        output_dir=run.get("output_dir"),
        nn_width=exp.get("nn_width", 2),
        range_r=exp.get("range", 1),
        data_path=exp.get("data_path"),
        custom_inputs=exp.get("inputs"),
    )
