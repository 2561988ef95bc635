"""Command-line entry point: synth, train, evaluate, predict, grid, inspect.

Relative paths resolve against $SMOS_DATA_ROOT when it is set, otherwise the
working directory. Results go to stdout (floats with 6 decimal places),
diagnostics to stderr. Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import ConfigurationError, DataConsistencyError, FormatError, SingmosError
from .models import (
    CHECKPOINT_MAGIC,
    ModelKind,
    ModelSpec,
    load_checkpoint,
    parameter_count,
    read_checkpoint_spec,
    save_checkpoint,
)
from .store import (
    EMBEDDING_MAGIC,
    Dataset,
    load_labels,
    read_embedding_header,
    read_embeddings,
    synth_generate,
    write_embeddings,
    write_labels,
)
from .training import GridCell, TrainConfig, evaluate, run_grid, train, write_results_csv

# Short column names used in the published result tables, accepted anywhere a
# ptm token is expected.
PTM_ABBREVIATIONS = {
    "U": "unispeech-sat",
    "W2": "wav2vec2",
    "W": "wavlm",
    "X": "xlsr",
    "Wh": "whisper",
    "M": "mms",
    "XV": "xvector",
    "EC": "ecapa",
    "m2v": "music2vec-v1",
    "MT95": "mert-v1-95m",
    "MTP": "mert-v0-public",
    "MT3M": "mert-v1-330m",
    "MTV0": "mert-v0",
}


def _resolve(path: str) -> Path:
    p = Path(path)
    if p.is_absolute():
        return p
    root = os.environ.get("SMOS_DATA_ROOT")
    return Path(root) / p if root else p


def _ptm_token(token: str) -> str:
    return PTM_ABBREVIATIONS.get(token, token)


def _load_dataset(emb_a: str, emb_b, labels_path: str) -> Dataset:
    table_a = read_embeddings(_resolve(emb_a))
    table_b = read_embeddings(_resolve(emb_b)) if emb_b else None
    labels = load_labels(_resolve(labels_path))
    return Dataset(table_a, table_b, labels)


def _cmd_synth(args) -> int:
    dims = tuple(int(d) for d in args.dims.split(","))
    if len(dims) != 2:
        raise ConfigurationError(f"--dims expects 'dim_a,dim_b', got '{args.dims}'")
    counts = tuple(int(c) for c in args.counts.split(","))
    if len(counts) != 4:
        raise ConfigurationError(f"--counts expects 'train,dev,test-main,test-other1', got '{args.counts}'")
    table_a, table_b, labels = synth_generate(args.seed, dims, counts, args.noise_sd)
    out_dir = _resolve(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = (out_dir / "synth_a.smos", out_dir / "synth_b.smos", out_dir / "labels.csv")
    write_embeddings(table_a, paths[0])
    write_embeddings(table_b, paths[1])
    write_labels(labels, paths[2])
    for p in paths:
        print(p)
    return 0


def _cmd_train(args) -> int:
    kind = ModelKind.parse(args.model)
    if kind.is_fusion and not args.emb_b:
        raise ConfigurationError(f"model '{kind.value}' requires --emb-b")
    if not kind.is_fusion and args.emb_b:
        raise ConfigurationError(f"model '{kind.value}' takes a single embedding (--emb-b given)")
    dataset = _load_dataset(args.emb_a, args.emb_b, args.labels)
    config = TrainConfig(
        lr=args.lr,
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        alpha=args.alpha,
        patience=args.patience,
        seed=args.seed,
        dropout_rate=args.dropout_rate,
    )
    spec = ModelSpec(
        kind=kind,
        dim_a=dataset.table_a.dim,
        dim_b=dataset.table_b.dim if dataset.table_b is not None else None,
        alpha=config.alpha if kind is ModelKind.BATCH else None,
        dropout_rate=config.dropout_rate,
        seed=config.seed,
    )
    model, report = train(spec, dataset, config)
    print(f"best_epoch {report.best_epoch} stopped_epoch {report.stopped_epoch}", file=sys.stderr)
    if args.out_checkpoint:
        path = _resolve(args.out_checkpoint)
        path.parent.mkdir(parents=True, exist_ok=True)
        save_checkpoint(model, path)
    if args.out_report:
        path = _resolve(args.out_report)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(report.to_json() + "\n", encoding="utf-8")
    for split, metrics in report.test_metrics.items():
        print(f"{split} mae {metrics['mae']:.6f} mse {metrics['mse']:.6f}")
    return 0


def _cmd_evaluate(args) -> int:
    model = load_checkpoint(_resolve(args.checkpoint))
    dataset = _load_dataset(args.emb_a, args.emb_b, args.labels)
    metrics = evaluate(model, args.split, dataset)
    print(f"mae {metrics['mae']:.6f}")
    print(f"mse {metrics['mse']:.6f}")
    return 0


def _cmd_predict(args) -> int:
    model = load_checkpoint(_resolve(args.checkpoint))
    table_a = read_embeddings(_resolve(args.emb_a))
    vec_a = table_a.vector(args.clip_id)[None, :].astype("float64")
    vec_b = None
    if model.spec.kind.is_fusion:
        if not args.emb_b:
            raise ConfigurationError(f"model '{model.spec.kind.value}' requires --emb-b")
        table_b = read_embeddings(_resolve(args.emb_b))
        vec_b = table_b.vector(args.clip_id)[None, :].astype("float64")
    out = model.forward(vec_a, vec_b, training=False)
    print(f"{out.predictions[0]:.6f}")
    return 0


def _parse_cells(raw) -> list:
    cells = []
    for i, entry in enumerate(raw):
        try:
            name = entry["name"]
            kind = ModelKind.parse(entry["kind"])
            ptm_a = _ptm_token(entry.get("a") or entry["ptm_a"])
            ptm_b = entry.get("b") or entry.get("ptm_b")
        except KeyError as missing:
            raise ConfigurationError(f"grid cell {i}: missing field {missing}")
        cells.append(GridCell(name=name, kind=kind, ptm_a=ptm_a,
                              ptm_b=_ptm_token(ptm_b) if ptm_b else None))
    return cells


def _cmd_grid(args) -> int:
    manifest_path = _resolve(args.manifest)
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if isinstance(manifest, list):
        manifest = {"cells": manifest}
    data_root = Path(manifest.get("data_root") or os.environ.get("SMOS_DATA_ROOT") or manifest_path.parent)
    labels_path = data_root / manifest.get("labels", "labels.csv")
    config = TrainConfig(**manifest.get("config", {}))
    cells = _parse_cells(manifest.get("cells", []))
    rows = run_grid(cells, data_root, labels_path, config, workers=args.workers)
    out_path = _resolve(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_results_csv(rows, out_path)
    print(out_path)
    return 0


def _cmd_inspect(args) -> int:
    path = _resolve(args.file)
    with open(path, "rb") as f:
        magic = f.read(4)
    if magic == EMBEDDING_MAGIC:
        ptm_id, dim, count = read_embedding_header(path)
        print(f"format embeddings")
        print(f"ptm_id {ptm_id}")
        print(f"dim {dim}")
        print(f"count {count}")
    elif magic == CHECKPOINT_MAGIC:
        spec = read_checkpoint_spec(path)
        print(f"format checkpoint")
        print(f"kind {spec.kind.value}")
        print(f"dim_a {spec.dim_a}")
        if spec.dim_b is not None:
            print(f"dim_b {spec.dim_b}")
        print(f"hidden {spec.hidden}")
        if spec.alpha is not None:
            print(f"alpha {spec.alpha:.6f}")
        print(f"dropout_rate {spec.dropout_rate:.6f}")
        print(f"seed {spec.seed}")
        print(f"parameters {parameter_count(spec)}")
    else:
        raise FormatError(f"unrecognised file magic {magic!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="singmos",
        description="Singing-voice MOS regression over precomputed embeddings.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("synth", help="generate planted-signal synthetic embeddings and labels")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dims", default="512,192", help="dim_a,dim_b")
    p.add_argument("--counts", default="1000,200,200,200",
                   help="clips per split: train,dev,test-main,test-other1")
    p.add_argument("--noise-sd", type=float, default=0.1)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(handler=_cmd_synth)

    p = sub.add_parser("train", help="train a model and report test metrics")
    p.add_argument("--model", required=True, choices=[k.value for k in ModelKind])
    p.add_argument("--emb-a", required=True)
    p.add_argument("--emb-b")
    p.add_argument("--labels", required=True)
    p.add_argument("--alpha", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--max-epochs", type=int, default=50)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--dropout-rate", type=float, default=0.3)
    p.add_argument("--out-checkpoint")
    p.add_argument("--out-report")
    p.set_defaults(handler=_cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on one split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--emb-a", required=True)
    p.add_argument("--emb-b")
    p.add_argument("--labels", required=True)
    p.add_argument("--split", required=True, choices=["train", "dev", "test-main", "test-other1"])
    p.set_defaults(handler=_cmd_evaluate)

    p = sub.add_parser("predict", help="predict the MOS of one clip")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--emb-a", required=True)
    p.add_argument("--emb-b")
    p.add_argument("--clip-id", required=True)
    p.set_defaults(handler=_cmd_predict)

    p = sub.add_parser("grid", help="run a manifest of train/evaluate cells")
    p.add_argument("--manifest", required=True, help="JSON manifest of grid cells")
    p.add_argument("--out", required=True, help="results CSV path")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(handler=_cmd_grid)

    p = sub.add_parser("inspect", help="print the header of an embedding or checkpoint file")
    p.add_argument("--file", required=True)
    p.set_defaults(handler=_cmd_inspect)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return 1
    except SingmosError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
