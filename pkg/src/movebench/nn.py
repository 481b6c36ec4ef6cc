"""Small dense networks with hand-written reverse-mode gradients and an Adam optimizer."""

from __future__ import annotations

import json
import os
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


class ShapeError(ValueError):
    pass


class StateError(RuntimeError):
    pass


class NumericError(FloatingPointError):
    pass


class CheckpointFormatError(ValueError):
    pass


class ParameterStore:
    """Ordered named arrays with fixed shapes. ``version`` bumps on every in-place update."""

    def __init__(self, named: Sequence[tuple[str, np.ndarray]]):
        self.names = [n for n, _ in named]
        self.arrays = [np.array(a) for _, a in named]
        if len(set(self.names)) != len(self.names):
            raise ValueError("parameter names must be unique")
        for n, a in zip(self.names, self.arrays):
            if not np.all(np.isfinite(a)):
                raise NumericError(f"parameter {n} has non-finite values")
        self.version = 0

    @property
    def shapes(self) -> list[tuple[int, ...]]:
        return [a.shape for a in self.arrays]

    @property
    def dtype(self) -> np.dtype:
        return self.arrays[0].dtype

    def __len__(self) -> int:
        return len(self.arrays)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[self.names.index(name)]

    def copy(self, dtype=None) -> "ParameterStore":
        return ParameterStore([(n, a.astype(dtype or a.dtype, copy=True)) for n, a in zip(self.names, self.arrays)])

    def assign(self, arrays: Sequence[np.ndarray]) -> None:
        for dst, src in zip(self.arrays, arrays):
            if dst.shape != src.shape:
                raise ShapeError(f"cannot assign shape {src.shape} into {dst.shape}")
            dst[...] = src
        self.version += 1

    def equals(self, other: "ParameterStore") -> bool:
        return self.names == other.names and all(
            a.dtype == b.dtype and np.array_equal(a, b) for a, b in zip(self.arrays, other.arrays)
        )


def init_mlp(sizes: Sequence[int], rng: np.random.Generator, dtype=np.float32) -> ParameterStore:
    """Uniform(+-1/sqrt(fan_in)) initialization; weights stored (fan_in, fan_out)."""
    named = []
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        bound = 1.0 / np.sqrt(fan_in)
        named.append((f"W{i}", rng.uniform(-bound, bound, size=(fan_in, fan_out)).astype(dtype)))
        named.append((f"b{i}", rng.uniform(-bound, bound, size=(fan_out,)).astype(dtype)))
    return ParameterStore(named)


def layer_sizes(params: ParameterStore) -> list[int]:
    ws = params.arrays[0::2]
    return [ws[0].shape[0]] + [w.shape[1] for w in ws]


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def silu(x):
    return x * _sigmoid(x)


def silu_grad(x):
    s = _sigmoid(x)
    return s * (1.0 + x * (1.0 - s))


@dataclass
class Cache:
    inputs: list[np.ndarray]  # input to each affine layer
    pre: list[np.ndarray]  # pre-activations of the hidden layers
    version: int
    store_id: int


def mlp_forward(params: ParameterStore, x: np.ndarray) -> tuple[np.ndarray, Cache]:
    x = np.asarray(x, dtype=params.dtype)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    ws, bs = params.arrays[0::2], params.arrays[1::2]
    if x.shape[-1] != ws[0].shape[0]:
        raise ShapeError(f"input width {x.shape[-1]} does not match first layer {ws[0].shape[0]}")
    inputs, pre = [], []
    h = x
    last = len(ws) - 1
    for i, (w, b) in enumerate(zip(ws, bs)):
        inputs.append(h)
        z = h @ w + b
        if i < last:
            pre.append(z)
            h = silu(z)
        else:
            h = z
    cache = Cache(inputs, pre, params.version, id(params))
    return (h[0] if squeeze else h), cache


def mlp_predict(params: ParameterStore, x: np.ndarray) -> np.ndarray:
    """Forward pass without keeping a cache."""
    ws, bs = params.arrays[0::2], params.arrays[1::2]
    h = np.asarray(x, dtype=params.dtype)
    last = len(ws) - 1
    for i, (w, b) in enumerate(zip(ws, bs)):
        h = h @ w + b
        if i < last:
            h = silu(h)
    return h


def mlp_backward(params: ParameterStore, cache: Cache, dy: np.ndarray) -> list[np.ndarray]:
    """Gradients of ``sum(dy * y)`` with respect to every parameter, in store order."""
    if cache.store_id != id(params) or cache.version != params.version:
        raise StateError("cache was produced before the parameters last changed")
    dy = np.asarray(dy, dtype=params.dtype)
    if dy.ndim == 1:
        dy = dy[None, :]
    ws = params.arrays[0::2]
    grads: list[np.ndarray] = [None] * len(params.arrays)  # type: ignore[list-item]
    g = dy
    for i in range(len(ws) - 1, -1, -1):
        grads[2 * i] = cache.inputs[i].T @ g
        grads[2 * i + 1] = g.sum(axis=0)
        if i > 0:
            g = (g @ ws[i].T) * silu_grad(cache.pre[i - 1])
    return grads


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    diff = pred - target
    return float(np.mean(diff * diff)), (2.0 / diff.size) * diff


class Adam:
    def __init__(self, params: ParameterStore, lr: float = 1e-4, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(a) for a in params.arrays]
        self.v = [np.zeros_like(a) for a in params.arrays]
        self.t = 0

    def step(self, grads: Sequence[np.ndarray]) -> None:
        if len(grads) != len(self.m):
            raise ShapeError(f"expected {len(self.m)} gradients, got {len(grads)}")
        for g, a in zip(grads, self.params.arrays):
            if g.shape != a.shape:
                raise ShapeError(f"gradient shape {g.shape} does not match parameter {a.shape}")
            if not np.all(np.isfinite(g)):
                raise NumericError("non-finite gradient; update rejected")
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for a, g, m, v in zip(self.params.arrays, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            a -= (self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)).astype(a.dtype)
        self.params.version += 1


# --- checkpoint container ---------------------------------------------------


def blob_path(meta_path: str | os.PathLike) -> Path:
    p = Path(meta_path)
    return p.with_name(p.name + ".bin")


def write_checkpoint(meta_path: str | os.PathLike, params: ParameterStore, meta: dict) -> None:
    """JSON metadata at ``meta_path`` plus a float32 little-endian blob ending in a CRC32 trailer."""
    meta_path = Path(meta_path)
    data = b"".join(np.ascontiguousarray(a, dtype="<f4").tobytes() for a in params.arrays)
    bpath = blob_path(meta_path)
    bpath.write_bytes(data + struct.pack("<I", zlib.crc32(data)))
    doc = dict(meta)
    doc["parameters"] = [{"name": n, "shape": list(s)} for n, s in zip(params.names, params.shapes)]
    doc["blob"] = bpath.name
    doc["blob_crc32"] = zlib.crc32(data)
    meta_path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def read_checkpoint(meta_path: str | os.PathLike) -> tuple[ParameterStore, dict]:
    meta_path = Path(meta_path)
    try:
        doc = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise CheckpointFormatError(f"{meta_path}: malformed metadata ({exc})") from None
    bpath = meta_path.with_name(doc["blob"])
    raw = bpath.read_bytes()
    if len(raw) < 4:
        raise CheckpointFormatError(f"{bpath}: blob truncated")
    data, (crc,) = raw[:-4], struct.unpack("<I", raw[-4:])
    if zlib.crc32(data) != crc or crc != doc.get("blob_crc32"):
        raise CheckpointFormatError(f"{bpath}: checksum mismatch")
    named, offset = [], 0
    for entry in doc["parameters"]:
        shape = tuple(entry["shape"])
        n = int(np.prod(shape)) * 4
        if offset + n > len(data):
            raise CheckpointFormatError(f"{bpath}: blob too short for parameter {entry['name']}")
        named.append((entry["name"], np.frombuffer(data, dtype="<f4", count=n // 4, offset=offset).reshape(shape).astype(np.float32)))
        offset += n
    if offset != len(data):
        raise CheckpointFormatError(f"{bpath}: {len(data) - offset} trailing bytes")
    meta = {k: v for k, v in doc.items() if k not in ("parameters", "blob", "blob_crc32")}
    return ParameterStore(named), meta
