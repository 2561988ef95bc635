"""Training protocol, MAE/MSE evaluation, and the experiment grid runner.

One training run is a pure function of (data bytes, config, seed): batching,
weight init, and dropout all draw from streams derived from the seed, so two
runs with identical inputs produce bitwise-identical reports.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigurationError, NumericDivergenceError, ValidationError
from .models import Model, ModelKind, ModelSpec, build
from .nn.losses import LossBreakdown, mse_loss_with_grad
from .nn.optim import adam_step
from .seeding import U64_MASK, stable_hash64
from .store import Dataset, load_labels, make_batches, read_embeddings

TEST_SPLITS = ("test-main", "test-other1")
EVAL_CHUNK = 256

RESULT_COLUMNS = ("cell", "kind", "split", "mae", "mse", "stopped_epoch", "seed", "error")


@dataclass
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 50
    alpha: float = 0.3
    patience: int = 10  # 0 disables early stopping
    seed: int = 0
    dropout_rate: float = 0.3

    def __post_init__(self):
        self.seed = int(self.seed) & U64_MASK
        self.validate()

    def validate(self) -> None:
        if self.lr <= 0:
            raise ConfigurationError(f"learning rate must be positive, got {self.lr}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be positive, got {self.batch_size}")
        if self.max_epochs < 1:
            raise ConfigurationError(f"max_epochs must be positive, got {self.max_epochs}")
        if self.alpha < 0:
            raise ConfigurationError(f"alpha must be non-negative, got {self.alpha}")
        if not 0 <= self.patience <= self.max_epochs:
            raise ConfigurationError(
                f"patience must lie in [0, max_epochs], got {self.patience}/{self.max_epochs}"
            )
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigurationError(f"dropout rate must lie in [0, 1), got {self.dropout_rate}")


@dataclass
class TrainReport:
    epochs: list  # per-epoch LossBreakdown over the train set
    dev_mse: list
    best_epoch: int  # 1-based
    stopped_epoch: int
    test_metrics: dict  # split -> {"mae": float, "mse": float}
    seed: int

    def to_dict(self) -> dict:
        return {
            "epochs": [e.as_dict() for e in self.epochs],
            "dev_mse": self.dev_mse,
            "best_epoch": self.best_epoch,
            "stopped_epoch": self.stopped_epoch,
            "test_metrics": self.test_metrics,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _predict_chunked(model: Model, x_a, x_b) -> np.ndarray:
    parts = []
    for start in range(0, x_a.shape[0], EVAL_CHUNK):
        stop = start + EVAL_CHUNK
        b = x_b[start:stop] if x_b is not None else None
        parts.append(model.forward(x_a[start:stop], b, training=False).predictions)
    return np.concatenate(parts)


def _metrics(preds: np.ndarray, targets: np.ndarray) -> dict:
    diff = preds - targets
    return {"mae": float(np.mean(np.abs(diff))), "mse": float(np.mean(diff * diff))}


def _snapshot(model: Model) -> list:
    return [(lp.weights.data.copy(), lp.bias.data.copy()) for lp in model.parameters()]


def _restore(model: Model, state) -> None:
    for lp, (w, b) in zip(model.parameters(), state):
        lp.weights.data[...] = w
        lp.bias.data[...] = b


def train(spec: ModelSpec, dataset: Dataset, config: TrainConfig) -> tuple:
    """Adam over shuffled mini-batches with dev-MSE early stopping.

    Tracks the best dev epoch, stops after `patience` epochs without
    improvement (patience 0 runs all epochs), restores the best weights, and
    evaluates both test splits before returning (model, report).
    """
    config.validate()
    spec.validate()
    if (dataset.table_b is not None) != spec.kind.is_fusion:
        raise ConfigurationError(
            f"{spec.kind.value} model needs {'two embedding tables' if spec.kind.is_fusion else 'one embedding table'}"
        )

    train_ids = dataset.clip_ids("train")
    if not train_ids:
        raise ValidationError("train split is empty")
    if not dataset.clip_ids("dev"):
        raise ValidationError("dev split is empty (needed for early stopping)")
    eval_splits = [s for s in TEST_SPLITS if dataset.clip_ids(s)]
    dataset.check_coverage(["train", "dev"] + eval_splits)

    x_train, xb_train, y_train = dataset.arrays("train")
    x_dev, xb_dev, y_dev = dataset.arrays("dev")
    row_of = {clip_id: i for i, clip_id in enumerate(train_ids)}

    model = build(spec)
    alpha = spec.alpha if spec.kind is ModelKind.BATCH else 0.0
    n_train = len(train_ids)

    epochs = []
    dev_curve = []
    best_dev = np.inf
    best_epoch = 0
    best_state = None
    since_best = 0
    stopped_epoch = 0

    for epoch in range(1, config.max_epochs + 1):
        mse_sum = 0.0
        bd_sum = 0.0
        for batch_no, ids in enumerate(
            make_batches(train_ids, config.seed, config.batch_size, epoch - 1), start=1
        ):
            rows = [row_of[c] for c in ids]
            batch_b = xb_train[rows] if xb_train is not None else None
            model.zero_grad()
            out = model.forward(x_train[rows], batch_b, training=True)
            mse_val, dpred = mse_loss_with_grad(out.predictions, y_train[rows])
            bd_val = out.bd_value if out.bd_value is not None else 0.0
            if not np.isfinite(mse_val) or not np.isfinite(bd_val):
                raise NumericDivergenceError("non-finite training loss", epoch, batch_no)
            model.backward(dpred, bd_weight=alpha)
            for lp in model.parameters():
                adam_step(lp, config.lr)
            mse_sum += mse_val * len(rows)
            bd_sum += bd_val * len(rows)

        epochs.append(LossBreakdown.combine(mse_sum / n_train, bd_sum / n_train, alpha))
        dev_mse = _metrics(_predict_chunked(model, x_dev, xb_dev), y_dev)["mse"]
        dev_curve.append(dev_mse)
        stopped_epoch = epoch

        if dev_mse < best_dev:
            best_dev = dev_mse
            best_epoch = epoch
            best_state = _snapshot(model)
            since_best = 0
        else:
            since_best += 1
            if config.patience > 0 and since_best >= config.patience:
                break

    _restore(model, best_state)
    test_metrics = {}
    for split in eval_splits:
        x_a, x_b, y = dataset.arrays(split)
        test_metrics[split] = _metrics(_predict_chunked(model, x_a, x_b), y)

    report = TrainReport(
        epochs=epochs,
        dev_mse=dev_curve,
        best_epoch=best_epoch,
        stopped_epoch=stopped_epoch,
        test_metrics=test_metrics,
        seed=config.seed,
    )
    return model, report


def evaluate(model: Model, split: str, dataset: Dataset) -> dict:
    """Eval-mode MAE/MSE of the model over one split."""
    ids = dataset.clip_ids(split)
    if not ids:
        raise ValidationError(f"split '{split}' is empty")
    dataset.check_coverage([split])
    x_a, x_b, y = dataset.arrays(split)
    return _metrics(_predict_chunked(model, x_a, x_b), y)


@dataclass(frozen=True)
class GridCell:
    name: str
    kind: ModelKind
    ptm_a: str
    ptm_b: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind.parse(self.kind))


def cell_seed(config_seed: int, cell_name: str) -> int:
    return (config_seed ^ stable_hash64(cell_name)) & U64_MASK


def _run_cell(args) -> list:
    cell, data_root, labels_path, config = args
    derived = cell_seed(config.seed, cell.name)
    try:
        table_a = read_embeddings(Path(data_root) / f"{cell.ptm_a}.smos")
        table_b = (
            read_embeddings(Path(data_root) / f"{cell.ptm_b}.smos") if cell.ptm_b else None
        )
        labels = load_labels(labels_path)
        spec = ModelSpec(
            kind=cell.kind,
            dim_a=table_a.dim,
            dim_b=table_b.dim if table_b is not None else None,
            alpha=config.alpha if cell.kind is ModelKind.BATCH else None,
            dropout_rate=config.dropout_rate,
            seed=derived,
        )
        _, report = train(spec, Dataset(table_a, table_b, labels), replace(config, seed=derived))
    except Exception as exc:  # keep the rest of the grid running
        return [{
            "cell": cell.name, "kind": cell.kind.value, "split": "", "mae": "", "mse": "",
            "stopped_epoch": "", "seed": derived, "error": str(exc),
        }]
    return [
        {
            "cell": cell.name,
            "kind": cell.kind.value,
            "split": split,
            "mae": metrics["mae"],
            "mse": metrics["mse"],
            "stopped_epoch": report.stopped_epoch,
            "seed": derived,
            "error": "",
        }
        for split, metrics in report.test_metrics.items()
    ]


def run_grid(cells, data_root, labels_path, config: TrainConfig, workers: int = 1) -> list:
    """Train/evaluate every cell with an independent derived seed.

    Cells share no mutable state, so they may run on parallel workers; rows
    come back in manifest order either way.
    """
    payloads = [(cell, str(data_root), str(labels_path), config) for cell in cells]
    if workers > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_cell = list(pool.map(_run_cell, payloads))
    else:
        per_cell = [_run_cell(p) for p in payloads]
    return [row for rows in per_cell for row in rows]


def write_results_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow([
                row["cell"],
                row["kind"],
                row["split"],
                f"{row['mae']:.6f}" if row["mae"] != "" else "",
                f"{row['mse']:.6f}" if row["mse"] != "" else "",
                row["stopped_epoch"],
                row["seed"],
                row["error"],
            ])
