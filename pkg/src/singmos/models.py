"""The four regression architectures over precomputed embeddings.

Single-model heads:
  fcn:  dense(hidden) -> relu -> dropout -> dense(1)
  cnn:  conv(1->64, k3) -> maxpool(2,2) -> conv(64->128, k3) -> maxpool(2,2)
        -> flatten -> dense(hidden) -> relu -> dropout -> dense(1)
        (the embedding vector is treated as a 1-channel sequence)

Two-model fusion (each branch runs the cnn conv stack, then a dense projection
to the shared hidden width):
  concat: projections are concatenated and fed to the fcn head
  batch:  projections pass a sigmoid self-gate; the per-sample Bhattacharyya
          distance between the softmax-normalised gated vectors is exposed as
          an auxiliary alignment term; the raw gated vectors are concatenated
          and fed to the fcn head
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from . import binio
from .errors import ConfigurationError, CorruptionError, DimensionError, FormatError
from .nn.functional import softmax, softmax_vjp
from .nn.layers import Conv1d, Dense, Dropout, Gate, MaxPool1d, ReLU
from .nn.losses import BhattacharyyaAlign, LossBreakdown, mse_loss
from .nn.tensor import LayerParams
from .seeding import U64_MASK, derive_seed

CONV_FILTERS = (64, 128)
KERNEL_SIZE = 3
POOL_WINDOW = 2
POOL_STRIDE = 2
MIN_CONV_DIM = 10
DEFAULT_HIDDEN = 128
DEFAULT_ALPHA = 0.3
DEFAULT_DROPOUT = 0.3

CHECKPOINT_MAGIC = b"SMCK"
CHECKPOINT_VERSION = 1


class ModelKind(str, Enum):
    FCN = "fcn"
    CNN = "cnn"
    CONCAT = "concat"
    BATCH = "batch"

    @property
    def is_fusion(self) -> bool:
        return self in (ModelKind.CONCAT, ModelKind.BATCH)

    @property
    def uses_conv(self) -> bool:
        return self is not ModelKind.FCN

    @classmethod
    def parse(cls, token) -> "ModelKind":
        if isinstance(token, cls):
            return token
        try:
            return cls(str(token).lower())
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ConfigurationError(f"unknown model kind '{token}' (expected one of: {valid})")


@dataclass
class ModelSpec:
    """Declarative architecture description; seeds are taken modulo 2**64."""

    kind: ModelKind
    dim_a: int
    dim_b: Optional[int] = None
    hidden: int = DEFAULT_HIDDEN
    alpha: Optional[float] = None
    dropout_rate: float = DEFAULT_DROPOUT
    seed: int = 0

    def __post_init__(self):
        self.kind = ModelKind.parse(self.kind)
        if self.kind is ModelKind.BATCH and self.alpha is None:
            self.alpha = DEFAULT_ALPHA
        self.seed = int(self.seed) & U64_MASK
        self.validate()

    def validate(self) -> None:
        if self.dim_a < 1:
            raise ConfigurationError(f"dim_a must be positive, got {self.dim_a}")
        if self.hidden < 1:
            raise ConfigurationError(f"hidden width must be positive, got {self.hidden}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigurationError(f"dropout rate must lie in [0, 1), got {self.dropout_rate}")
        if self.kind.is_fusion:
            if self.dim_b is None or self.dim_b < 1:
                raise ConfigurationError(f"{self.kind.value} model requires a positive dim_b")
        elif self.dim_b is not None:
            raise ConfigurationError(f"{self.kind.value} model takes a single embedding (dim_b given)")
        if self.kind is ModelKind.BATCH:
            if self.alpha is None or self.alpha < 0.0:
                raise ConfigurationError(f"batch model requires alpha >= 0, got {self.alpha}")
        elif self.alpha is not None:
            raise ConfigurationError(f"alpha only applies to the batch model, not {self.kind.value}")
        if self.kind.uses_conv:
            for label, dim in self.branch_dims():
                if dim < MIN_CONV_DIM:
                    raise ConfigurationError(
                        f"embedding dim {dim} (branch {label}) too small for two conv+pool "
                        f"stages; minimum is {MIN_CONV_DIM}"
                    )

    def branch_dims(self) -> list:
        dims = [("a", self.dim_a)]
        if self.kind.is_fusion:
            dims.append(("b", self.dim_b))
        return dims


def conv_stack_output_len(dim: int) -> int:
    """Sequence length after conv(k3)/pool(2,2)/conv(k3)/pool(2,2), no padding."""
    length = dim - (KERNEL_SIZE - 1)
    length = (length - POOL_WINDOW) // POOL_STRIDE + 1
    length = length - (KERNEL_SIZE - 1)
    length = (length - POOL_WINDOW) // POOL_STRIDE + 1
    return length


def flatten_len(dim: int) -> int:
    return conv_stack_output_len(dim) * CONV_FILTERS[1]


def parameter_shapes(spec: ModelSpec) -> list:
    """(weights shape, bias shape) per layer, in declaration order."""

    def conv_stack():
        return [
            ((CONV_FILTERS[0], 1, KERNEL_SIZE), (CONV_FILTERS[0],)),
            ((CONV_FILTERS[1], CONV_FILTERS[0], KERNEL_SIZE), (CONV_FILTERS[1],)),
        ]

    h = spec.hidden
    if spec.kind is ModelKind.FCN:
        shapes = [((h, spec.dim_a), (h,))]
    elif spec.kind is ModelKind.CNN:
        shapes = conv_stack() + [((h, flatten_len(spec.dim_a)), (h,))]
    else:
        shapes = (
            conv_stack()
            + conv_stack()
            + [((h, flatten_len(spec.dim_a)), (h,)), ((h, flatten_len(spec.dim_b)), (h,))]
            + [((h, 2 * h), (h,))]
        )
    shapes.append(((1, h), (1,)))
    return shapes


def parameter_count(spec: ModelSpec) -> int:
    total = 0
    for w_shape, b_shape in parameter_shapes(spec):
        total += int(np.prod(w_shape)) + int(np.prod(b_shape))
    return total


def _glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _conv_params(rng, c_in: int, c_out: int) -> LayerParams:
    w = _glorot(rng, (c_out, c_in, KERNEL_SIZE), c_in * KERNEL_SIZE, c_out * KERNEL_SIZE)
    return LayerParams.create(w, np.zeros(c_out))


def _dense_params(rng, d_in: int, d_out: int) -> LayerParams:
    w = _glorot(rng, (d_out, d_in), d_in, d_out)
    return LayerParams.create(w, np.zeros(d_out))


class _ConvStack:
    """Per-branch conv(k3) -> pool(2,2) -> conv(k3) -> pool(2,2) -> flatten."""

    def __init__(self, rng: np.random.Generator, dim: int):
        # the embedding itself never needs a gradient, so the first conv skips it
        self.conv1 = Conv1d(_conv_params(rng, 1, CONV_FILTERS[0]), input_grad=False)
        self.pool1 = MaxPool1d(POOL_WINDOW, POOL_STRIDE)
        self.conv2 = Conv1d(_conv_params(rng, CONV_FILTERS[0], CONV_FILTERS[1]))
        self.pool2 = MaxPool1d(POOL_WINDOW, POOL_STRIDE)
        self.flat_len = flatten_len(dim)
        self._pre_flat_shape = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        h = self.conv1.forward(x[:, None, :])
        h = self.pool1.forward(h)
        h = self.conv2.forward(h)
        h = self.pool2.forward(h)
        self._pre_flat_shape = h.shape
        return h.reshape(h.shape[0], -1)

    def backward(self, dflat: np.ndarray) -> None:
        dh = dflat.reshape(self._pre_flat_shape)
        dh = self.pool2.backward(dh)
        dh = self.conv2.backward(dh)
        dh = self.pool1.backward(dh)
        self.conv1.backward(dh)

    def parameters(self) -> list:
        return [self.conv1.params, self.conv2.params]


@dataclass
class ForwardOutput:
    """Per-item MOS predictions, plus the batch-mean alignment distance when present."""

    predictions: np.ndarray
    bd_value: Optional[float] = None


class Model:
    """A built network; owns its parameters, dropout RNG, and backward caches."""

    def __init__(self, spec: ModelSpec):
        spec.validate()
        self.spec = spec
        rng = np.random.default_rng(derive_seed("init", spec.seed))
        # the ablation tests flip these to turn a batch model into the plain
        # concatenation baseline without rebuilding
        self.use_gate = spec.kind is ModelKind.BATCH
        self.use_bd = spec.kind is ModelKind.BATCH

        self.stack_a = self.stack_b = None
        self.proj_a = self.proj_b = None
        self.gate_a = self.gate_b = None
        self.bd = None
        if spec.kind is ModelKind.FCN:
            head_in = spec.dim_a
        elif spec.kind is ModelKind.CNN:
            self.stack_a = _ConvStack(rng, spec.dim_a)
            head_in = self.stack_a.flat_len
        else:
            self.stack_a = _ConvStack(rng, spec.dim_a)
            self.stack_b = _ConvStack(rng, spec.dim_b)
            self.proj_a = Dense(_dense_params(rng, self.stack_a.flat_len, spec.hidden))
            self.proj_b = Dense(_dense_params(rng, self.stack_b.flat_len, spec.hidden))
            self.gate_a = Gate()
            self.gate_b = Gate()
            self.bd = BhattacharyyaAlign()
            head_in = 2 * spec.hidden
        self.hidden_layer = Dense(_dense_params(rng, head_in, spec.hidden))
        self.act = ReLU()
        self.dropout = Dropout(spec.dropout_rate)
        self.out = Dense(_dense_params(rng, spec.hidden, 1))

        self._dropout_rng = np.random.default_rng(derive_seed("dropout", spec.seed))
        self._soft_a = None
        self._soft_b = None

    def parameters(self) -> list:
        params = []
        if self.stack_a is not None:
            params += self.stack_a.parameters()
        if self.stack_b is not None:
            params += self.stack_b.parameters()
        if self.proj_a is not None:
            params += [self.proj_a.params, self.proj_b.params]
        params += [self.hidden_layer.params, self.out.params]
        return params

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def _check_branch(self, batch, dim: int, label: str) -> np.ndarray:
        x = np.ascontiguousarray(batch, dtype=np.float64)
        if x.ndim != 2:
            raise DimensionError(f"branch {label} input must be [batch, dim], got rank {x.ndim}")
        if x.shape[0] < 1:
            raise DimensionError(f"branch {label} batch must contain at least one item")
        if x.shape[1] != dim:
            raise DimensionError(
                f"branch {label} feature axis: got {x.shape[1]}, model expects {dim}"
            )
        return x

    def forward(self, batch_a, batch_b=None, training: bool = False) -> ForwardOutput:
        a = self._check_branch(batch_a, self.spec.dim_a, "a")
        if self.spec.kind.is_fusion:
            if batch_b is None:
                raise DimensionError("fusion model requires a second embedding batch")
            b = self._check_branch(batch_b, self.spec.dim_b, "b")
            if b.shape[0] != a.shape[0]:
                raise DimensionError(
                    f"batch axis: branch a has {a.shape[0]} items, branch b has {b.shape[0]}"
                )
        elif batch_b is not None:
            raise DimensionError(f"{self.spec.kind.value} model takes a single embedding batch")

        bd_value = None
        if self.spec.kind is ModelKind.FCN:
            feats = a
        elif self.spec.kind is ModelKind.CNN:
            feats = self.stack_a.forward(a)
        else:
            fa = self.proj_a.forward(self.stack_a.forward(a))
            fb = self.proj_b.forward(self.stack_b.forward(b))
            ga = self.gate_a.forward(fa) if self.use_gate else fa
            gb = self.gate_b.forward(fb) if self.use_gate else fb
            if self.use_bd:
                self._soft_a = softmax(ga, axis=1)
                self._soft_b = softmax(gb, axis=1)
                per_sample = self.bd.forward(self._soft_a, self._soft_b)
                bd_value = float(per_sample.mean())
            feats = np.concatenate([ga, gb], axis=1)

        h = self.hidden_layer.forward(feats)
        h = self.act.forward(h)
        h = self.dropout.forward(h, training, self._dropout_rng)
        preds = self.out.forward(h)[:, 0]
        return ForwardOutput(predictions=preds, bd_value=bd_value)

    def backward(self, dpred: np.ndarray, bd_weight: float = 0.0) -> None:
        """Accumulate parameter gradients; bd_weight scales the batch-mean BD term."""
        dh = self.out.backward(np.ascontiguousarray(dpred, dtype=np.float64)[:, None])
        dh = self.dropout.backward(dh)
        dh = self.act.backward(dh)
        dfeats = self.hidden_layer.backward(dh)

        if self.spec.kind is ModelKind.FCN:
            return
        if self.spec.kind is ModelKind.CNN:
            self.stack_a.backward(dfeats)
            return

        h = self.spec.hidden
        dga = dfeats[:, :h]
        dgb = dfeats[:, h:]
        if self.use_bd and bd_weight != 0.0:
            n = dpred.shape[0]
            dvals = np.full(n, bd_weight / n)
            dsoft_a, dsoft_b = self.bd.backward(dvals)
            dga = dga + softmax_vjp(self._soft_a, dsoft_a, axis=1)
            dgb = dgb + softmax_vjp(self._soft_b, dsoft_b, axis=1)
        dpa = self.gate_a.backward(dga) if self.use_gate else dga
        dpb = self.gate_b.backward(dgb) if self.use_gate else dgb
        self.stack_a.backward(self.proj_a.backward(dpa))
        self.stack_b.backward(self.proj_b.backward(dpb))

    def loss(self, output: ForwardOutput, targets) -> LossBreakdown:
        mse = mse_loss(output.predictions, targets)
        alpha = self.spec.alpha if self.spec.kind is ModelKind.BATCH else 0.0
        bd = output.bd_value if output.bd_value is not None else 0.0
        return LossBreakdown.combine(mse, bd, alpha)


def build(spec: ModelSpec) -> Model:
    return Model(spec)


def _encode_spec(f, spec: ModelSpec) -> None:
    binio.write_str(f, spec.kind.value)
    binio.write_u32(f, spec.dim_a)
    binio.write_u32(f, spec.dim_b if spec.dim_b is not None else 0)
    binio.write_u32(f, spec.hidden)
    binio.write_f64(f, spec.alpha if spec.alpha is not None else 0.0)
    binio.write_f64(f, spec.dropout_rate)
    binio.write_u64(f, spec.seed)


def _decode_spec(f) -> ModelSpec:
    kind = ModelKind.parse(binio.read_str(f, "model kind"))
    dim_a = binio.read_u32(f, "dim_a")
    dim_b = binio.read_u32(f, "dim_b") or None
    hidden = binio.read_u32(f, "hidden width")
    alpha = binio.read_f64(f, "alpha")
    dropout_rate = binio.read_f64(f, "dropout rate")
    seed = binio.read_u64(f, "seed")
    return ModelSpec(
        kind=kind,
        dim_a=dim_a,
        dim_b=dim_b,
        hidden=hidden,
        alpha=alpha if kind is ModelKind.BATCH else None,
        dropout_rate=dropout_rate,
        seed=seed,
    )


def save_checkpoint(model: Model, path) -> None:
    """Write magic, version, spec, then all weights/biases as little-endian f64."""
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    binio.write_u32(buf, CHECKPOINT_VERSION)
    _encode_spec(buf, model.spec)
    for lp in model.parameters():
        buf.write(lp.weights.data.astype("<f8").tobytes())
        buf.write(lp.bias.data.astype("<f8").tobytes())
    Path(path).write_bytes(buf.getvalue())


def read_checkpoint_spec(path) -> ModelSpec:
    with open(path, "rb") as f:
        magic = binio.read_exact(f, 4, "magic")
        if magic != CHECKPOINT_MAGIC:
            raise FormatError(f"not a model checkpoint: bad magic {magic!r}")
        version = binio.read_u32(f, "format version")
        if version != CHECKPOINT_VERSION:
            raise FormatError(f"unsupported checkpoint version {version}")
        return _decode_spec(f)


def load_checkpoint(path) -> Model:
    with open(path, "rb") as f:
        magic = binio.read_exact(f, 4, "magic")
        if magic != CHECKPOINT_MAGIC:
            raise FormatError(f"not a model checkpoint: bad magic {magic!r}")
        version = binio.read_u32(f, "format version")
        if version != CHECKPOINT_VERSION:
            raise FormatError(f"unsupported checkpoint version {version}")
        spec = _decode_spec(f)
        model = build(spec)
        for lp, (w_shape, b_shape) in zip(model.parameters(), parameter_shapes(spec)):
            for tensor, shape in ((lp.weights, w_shape), (lp.bias, b_shape)):
                count = int(np.prod(shape))
                raw = binio.read_exact(f, count * 8, f"parameter block of shape {shape}")
                tensor.data[...] = np.frombuffer(raw, dtype="<f8").reshape(shape)
        if f.read(1):
            raise CorruptionError("trailing bytes after parameters", offset=f.tell() - 1)
    return model
