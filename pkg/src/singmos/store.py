"""Embedding persistence, label manifests, deterministic batching, synthetic data.

Embedding file layout (all little-endian):
  magic "SMOS" | u32 version = 1 | ptm_id (u16 length + UTF-8) | u32 dim
  | u32 count | count records of: clip_id (u16 length + UTF-8) + dim float32.

Vectors are stored at float32 (extraction precision) and promoted to float64
when assembled into training matrices. Record order is preserved exactly, so
write -> read -> write is byte-identical.

Label manifest: CSV with header `clip_id,mos,split`, UTF-8, LF line endings,
split one of train / dev / test-main / test-other1.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import binio
from .errors import (
    ConfigurationError,
    CorruptionError,
    DataConsistencyError,
    DimensionError,
    FormatError,
    ValidationError,
)
from .seeding import derive_seed

EMBEDDING_MAGIC = b"SMOS"
EMBEDDING_VERSION = 1

SPLITS = ("train", "dev", "test-main", "test-other1")
LABEL_HEADER = ("clip_id", "mos", "split")


@dataclass
class EmbeddingTable:
    """Per-model map from clip id to a fixed-dimension float32 vector."""

    ptm_id: str
    dim: int
    records: list = field(default_factory=list)  # [(clip_id, float32 vector)]

    def __post_init__(self):
        self._index = None

    def validate(self) -> None:
        if self.dim < 1:
            raise DimensionError(f"embedding dim must be positive, got {self.dim}")
        seen = set()
        for clip_id, vec in self.records:
            if vec.shape != (self.dim,):
                raise DimensionError(
                    f"record '{clip_id}': vector length {vec.shape} does not match table dim {self.dim}"
                )
            if clip_id in seen:
                raise ValidationError(f"duplicate clip_id '{clip_id}' in embedding table")
            seen.add(clip_id)

    def ids(self) -> list:
        return [clip_id for clip_id, _ in self.records]

    def _build_index(self) -> dict:
        if self._index is None or len(self._index) != len(self.records):
            self._index = {clip_id: i for i, (clip_id, _) in enumerate(self.records)}
        return self._index

    def __contains__(self, clip_id: str) -> bool:
        return clip_id in self._build_index()

    def vector(self, clip_id: str) -> np.ndarray:
        index = self._build_index()
        if clip_id not in index:
            raise DataConsistencyError(
                f"clip '{clip_id}' has no embedding in table '{self.ptm_id}'"
            )
        return self.records[index[clip_id]][1]

    def matrix(self, clip_ids) -> np.ndarray:
        """Float64 matrix [n, dim] for the given clips, in the given order."""
        out = np.empty((len(clip_ids), self.dim), dtype=np.float64)
        for row, clip_id in enumerate(clip_ids):
            out[row] = self.vector(clip_id)
        return out


def write_embeddings(table: EmbeddingTable, path) -> None:
    table.validate()
    buf = io.BytesIO()
    buf.write(EMBEDDING_MAGIC)
    binio.write_u32(buf, EMBEDDING_VERSION)
    binio.write_str(buf, table.ptm_id)
    binio.write_u32(buf, table.dim)
    binio.write_u32(buf, len(table.records))
    for clip_id, vec in table.records:
        binio.write_str(buf, clip_id)
        buf.write(np.ascontiguousarray(vec, dtype="<f4").tobytes())
    Path(path).write_bytes(buf.getvalue())


def _read_embedding_header(f) -> tuple:
    magic = binio.read_exact(f, 4, "magic")
    if magic != EMBEDDING_MAGIC:
        raise FormatError(f"not an embedding file: bad magic {magic!r}")
    version = binio.read_u32(f, "format version")
    if version != EMBEDDING_VERSION:
        raise FormatError(f"unsupported embedding format version {version}")
    ptm_id = binio.read_str(f, "ptm_id")
    dim = binio.read_u32(f, "dim")
    count = binio.read_u32(f, "record count")
    return ptm_id, dim, count


def read_embedding_header(path) -> tuple:
    """(ptm_id, dim, count) without loading the records."""
    with open(path, "rb") as f:
        return _read_embedding_header(f)


def read_embeddings(path) -> EmbeddingTable:
    with open(path, "rb") as f:
        ptm_id, dim, count = _read_embedding_header(f)
        if dim < 1:
            raise CorruptionError(f"header dim must be positive, got {dim}", offset=f.tell())
        records = []
        seen = set()
        for i in range(count):
            clip_id = binio.read_str(f, f"clip_id of record {i}")
            if clip_id in seen:
                raise ValidationError(f"duplicate clip_id '{clip_id}' in embedding file")
            seen.add(clip_id)
            raw = binio.read_exact(f, dim * 4, f"vector of record {i} ('{clip_id}')")
            records.append((clip_id, np.frombuffer(raw, dtype="<f4").copy()))
        if f.read(1):
            raise CorruptionError("trailing bytes after last record", offset=f.tell() - 1)
    return EmbeddingTable(ptm_id=ptm_id, dim=dim, records=records)


@dataclass(frozen=True)
class ClipLabel:
    clip_id: str
    mos: float
    split: str


def load_labels(path) -> list:
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("label CSV is empty (missing header)")
        if tuple(header) != LABEL_HEADER:
            raise FormatError(f"label CSV header must be 'clip_id,mos,split', got {header}")
        labels = []
        seen = set()
        for row_no, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise ValidationError(f"row {row_no}: expected 3 fields, got {len(row)}")
            clip_id, mos_raw, split = row
            try:
                mos = float(mos_raw)
            except ValueError:
                raise ValidationError(f"row {row_no}: MOS '{mos_raw}' is not numeric")
            if not np.isfinite(mos) or not 1.0 <= mos <= 5.0:
                raise ValidationError(f"row {row_no}: MOS {mos_raw} outside [1, 5]")
            if split not in SPLITS:
                raise ValidationError(f"row {row_no}: unknown split '{split}'")
            if clip_id in seen:
                raise ValidationError(f"row {row_no}: duplicate clip_id '{clip_id}'")
            seen.add(clip_id)
            labels.append(ClipLabel(clip_id=clip_id, mos=mos, split=split))
    return labels


def write_labels(labels, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(LABEL_HEADER) + "\n")
        for label in labels:
            f.write(f"{label.clip_id},{label.mos!r},{label.split}\n")


def split_ids(labels) -> dict:
    """Clip ids per split, preserving manifest order; every split key present."""
    out = {split: [] for split in SPLITS}
    for label in labels:
        out[label.split].append(label.clip_id)
    return out


def make_batches(train_ids, seed: int, batch_size: int, epoch: int) -> list:
    """Deterministic Fisher-Yates shuffle keyed by (seed, epoch), then chunk."""
    if not train_ids:
        raise ValidationError("cannot batch an empty train set")
    if batch_size < 1:
        raise ConfigurationError(f"batch_size must be positive, got {batch_size}")
    rng = np.random.default_rng(derive_seed("batches", seed, epoch))
    order = list(train_ids)
    for i in range(len(order) - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        order[i], order[j] = order[j], order[i]
    return [order[start : start + batch_size] for start in range(0, len(order), batch_size)]


@dataclass
class Dataset:
    """Embedding table(s) plus labels: the unit handed to training."""

    table_a: EmbeddingTable
    table_b: Optional[EmbeddingTable]
    labels: list

    def __post_init__(self):
        self._splits = split_ids(self.labels)
        self._mos = {label.clip_id: label.mos for label in self.labels}

    def clip_ids(self, split: str) -> list:
        if split not in SPLITS:
            raise ValidationError(f"unknown split '{split}'")
        return self._splits[split]

    def arrays(self, split: str) -> tuple:
        """(X_a, X_b or None, targets) for one split, rows in manifest order."""
        ids = self.clip_ids(split)
        x_a = self.table_a.matrix(ids)
        x_b = self.table_b.matrix(ids) if self.table_b is not None else None
        y = np.array([self._mos[c] for c in ids], dtype=np.float64)
        return x_a, x_b, y

    def check_coverage(self, splits) -> None:
        """Raise if any labelled clip in the given splits lacks an embedding."""
        tables = [self.table_a] + ([self.table_b] if self.table_b is not None else [])
        for split in splits:
            for clip_id in self.clip_ids(split):
                for table in tables:
                    if clip_id not in table:
                        raise DataConsistencyError(
                            f"clip '{clip_id}' ({split}) has no embedding in table '{table.ptm_id}'"
                        )


def synth_generate(seed: int, dims, counts, noise_sd: float) -> tuple:
    """Two embedding tables plus labels with a planted linear quality signal.

    Each clip gets a latent quality q ~ uniform[1, 5]; embeddings are q times
    a fixed random unit direction plus noise_sd-scaled gaussian noise, and the
    MOS label is q plus noise_sd-scaled gaussian noise clamped back to [1, 5].
    With noise_sd = 0 the label is an exact function of either embedding.
    """
    dim_a, dim_b = dims
    if dim_a < 1 or dim_b < 1:
        raise ConfigurationError(f"embedding dims must be positive, got {dims}")
    if len(counts) != len(SPLITS):
        raise ConfigurationError(f"need one count per split {SPLITS}, got {counts}")
    if any(c < 1 for c in counts):
        raise ConfigurationError(f"split counts must be >= 1, got {counts}")
    if noise_sd < 0:
        raise ConfigurationError(f"noise_sd must be non-negative, got {noise_sd}")

    rng = np.random.default_rng(derive_seed("synth", seed))
    total = int(sum(counts))
    w_a = rng.standard_normal(dim_a)
    w_a /= np.linalg.norm(w_a)
    w_b = rng.standard_normal(dim_b)
    w_b /= np.linalg.norm(w_b)
    quality = rng.uniform(1.0, 5.0, size=total)
    emb_a = quality[:, None] * w_a + noise_sd * rng.standard_normal((total, dim_a))
    emb_b = quality[:, None] * w_b + noise_sd * rng.standard_normal((total, dim_b))
    mos = np.clip(quality + noise_sd * rng.standard_normal(total), 1.0, 5.0)

    clip_ids = [f"clip_{i:05d}" for i in range(total)]
    labels = []
    cursor = 0
    for split, count in zip(SPLITS, counts):
        for i in range(cursor, cursor + count):
            labels.append(ClipLabel(clip_id=clip_ids[i], mos=float(mos[i]), split=split))
        cursor += count

    table_a = EmbeddingTable(
        ptm_id="synth_a", dim=dim_a,
        records=[(cid, emb_a[i].astype(np.float32)) for i, cid in enumerate(clip_ids)],
    )
    table_b = EmbeddingTable(
        ptm_id="synth_b", dim=dim_b,
        records=[(cid, emb_b[i].astype(np.float32)) for i, cid in enumerate(clip_ids)],
    )
    return table_a, table_b, labels
