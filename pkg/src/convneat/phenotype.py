"""Compile genomes into executable networks and run inference.

Pipeline per conv stage: valid-padding cross-correlation, optional
non-overlapping pooling, elementwise activation. The flattened result feeds
the feed-forward node graph, evaluated in topological order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .genome import (
    ConfigurationError,
    conv_output_shape,
    pipeline_output_size,
    pool_output_shape,
)


class ShapeError(ValueError):
    """Raised when image/kernel/window dimensions are incompatible."""


@dataclass(frozen=True)
class ImageMatrix:
    """Grayscale image, values in [0, 1], stored row-major as a (h, w) array."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64).reshape(self.height, self.width)
        object.__setattr__(self, "pixels", px)
        if not np.all(np.isfinite(px)):
            raise ValueError("image contains non-finite pixels")
        if px.size and (px.min() < 0.0 or px.max() > 1.0):
            raise ValueError("pixel values must lie in [0, 1]")

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("expected a 2-d array")
        return cls(width=arr.shape[1], height=arr.shape[0], pixels=arr)

    @classmethod
    def from_flat(cls, values):
        arr = np.asarray(values, dtype=np.float64).reshape(1, -1)
        return cls(width=arr.shape[1], height=1, pixels=arr)


def activate(x, kind):
    """Scalar activation; `kind` is an ActivationKind tag."""
    if kind == "sigmoid_steepened":
        return 1.0 / (1.0 + math.exp(-4.9 * _clip(x)))
    if kind == "sigmoid":
        return 1.0 / (1.0 + math.exp(-_clip(x)))
    if kind == "relu":
        return max(0.0, x)
    if kind == "tanh":
        return math.tanh(x)
    if kind == "linear":
        return x
    raise ValueError(f"unknown activation {kind!r}")


def _clip(x, limit=500.0):
    # exp() overflows around 709; sigmoid is saturated long before that
    return max(-limit, min(limit, x))


def _activate_array(arr, kind):
    if kind == "sigmoid_steepened":
        return 1.0 / (1.0 + np.exp(np.clip(-4.9 * arr, -500, 500)))
    if kind == "sigmoid":
        return 1.0 / (1.0 + np.exp(np.clip(-arr, -500, 500)))
    if kind == "relu":
        return np.maximum(arr, 0.0)
    if kind == "tanh":
        return np.tanh(arr)
    if kind == "linear":
        return arr
    raise ValueError(f"unknown activation {kind!r}")


def convolve(image, kernel, stride=1):
    """Valid-padding cross-correlation (no kernel flip).

    Accepts an ImageMatrix or 2-d array; returns a 2-d array of shape
    ((h-kh)//stride + 1, (w-kw)//stride + 1).
    """
    img = image.pixels if isinstance(image, ImageMatrix) else np.asarray(image, dtype=np.float64)
    k = np.asarray(kernel, dtype=np.float64)
    h, w = img.shape
    kh, kw = k.shape
    if kh > h or kw > w:
        raise ShapeError(f"kernel {kh}x{kw} larger than image {h}x{w}")
    oh, ow = conv_output_shape(h, w, kh, kw, stride)
    windows = np.lib.stride_tricks.sliding_window_view(img, (kh, kw))
    windows = windows[::stride, ::stride][:oh, :ow]
    return np.einsum("ijab,ab->ij", windows, k)


def pool(feature_map, kind, window):
    """Non-overlapping window pooling, stride = window; trailing rows/cols that
    do not fill a window are dropped."""
    arr = np.asarray(feature_map, dtype=np.float64)
    h, w = arr.shape
    if window > h or window > w:
        raise ShapeError(f"pool window {window} exceeds map {h}x{w}")
    oh, ow = pool_output_shape(h, w, window)
    trimmed = arr[: oh * window, : ow * window]
    blocks = trimmed.reshape(oh, window, ow, window)
    if kind == "max":
        return blocks.max(axis=(1, 3))
    if kind == "average":
        return blocks.mean(axis=(1, 3))
    raise ValueError(f"unknown pooler {kind!r}")


# ---------------------------------------------------------------------------
# compilation

@dataclass
class Phenotype:
    """Executable network: conv stage list + flattened feed-forward graph.

    Safe for concurrent forward() calls; all fields are fixed after compile.
    """

    stages: list
    input_height: int
    input_width: int
    input_ids: list
    bias_ids: list
    eval_order: list  # node ids, hidden then outputs interleaved topologically
    incoming: dict  # node id -> list of (source id, weight)
    activations: dict  # node id -> activation tag
    output_ids: list

    def run_pipeline(self, img):
        """Apply every conv stage to one image; returns flat input vector."""
        if img.height != self.input_height or img.width != self.input_width:
            raise ShapeError(
                f"expected {self.input_height}x{self.input_width} image, "
                f"got {img.height}x{img.width}")
        arr = img.pixels
        for stage in self.stages:
            arr = convolve(arr, stage.kernel, stage.stride)
            if stage.pooler != "none":
                arr = pool(arr, stage.pooler, stage.pool_window)
            arr = _activate_array(arr, stage.activation)
        return arr.reshape(-1)

    def forward(self, img):
        """Evaluate one image; returns one value per output node."""
        flat = self.run_pipeline(img)
        values = dict(zip(self.input_ids, flat.tolist()))
        for b in self.bias_ids:
            values[b] = 1.0
        for nid in self.eval_order:
            total = 0.0
            for src, weight in self.incoming.get(nid, ()):
                total += values.get(src, 0.0) * weight
            values[nid] = activate(total, self.activations[nid])
        return [values[o] for o in self.output_ids]

    def forward_batch(self, images):
        """Vectorized forward over a stack of images, shape (n, h, w);
        returns an (n, outputs) array. Matches forward() per row."""
        stack = np.asarray(images, dtype=np.float64)
        n = stack.shape[0]
        flats = np.empty((n, len(self.input_ids)), dtype=np.float64)
        for i in range(n):
            arr = stack[i]
            for stage in self.stages:
                arr = convolve(arr, stage.kernel, stage.stride)
                if stage.pooler != "none":
                    arr = pool(arr, stage.pooler, stage.pool_window)
                arr = _activate_array(arr, stage.activation)
            flats[i] = arr.reshape(-1)

        values = {nid: flats[:, j] for j, nid in enumerate(self.input_ids)}
        ones = np.ones(n)
        for b in self.bias_ids:
            values[b] = ones
        zeros = np.zeros(n)
        for nid in self.eval_order:
            total = zeros
            for src, weight in self.incoming.get(nid, ()):
                total = total + values.get(src, zeros) * weight
            values[nid] = _activate_array(total, self.activations[nid])
        return np.stack([values[o] for o in self.output_ids], axis=1)


def compile_genome(genome, input_width, input_height):
    """Build a Phenotype; disabled connections are excluded from the graph."""
    flat = pipeline_output_size(genome.conv_stages, input_height, input_width)
    input_ids = genome.node_ids("input")
    if flat != len(input_ids):
        raise ConfigurationError(
            f"conv pipeline yields {flat} values but genome has "
            f"{len(input_ids)} input nodes")

    enabled = [c for c in genome.connections if c.enabled]
    incoming = {}
    for c in enabled:
        incoming.setdefault(c.dst, []).append((c.src, c.weight))

    by_id = genome.nodes_by_id()
    internal = sorted(n.id for n in genome.nodes if n.kind in ("hidden", "output"))
    # Kahn's algorithm restricted to hidden/output nodes, smallest id first
    # so the ordering is deterministic.
    deps = {
        nid: {src for src, _ in incoming.get(nid, ()) if by_id[src].kind in ("hidden", "output")}
        for nid in internal
    }
    eval_order = []
    remaining = set(internal)
    while remaining:
        ready = sorted(nid for nid in remaining if not (deps[nid] & remaining))
        if not ready:
            raise ConfigurationError("cycle detected among enabled connections")
        eval_order.extend(ready)
        remaining -= set(ready)

    stages = sorted(genome.conv_stages, key=lambda s: s.stage_index)
    return Phenotype(
        stages=stages,
        input_height=input_height,
        input_width=input_width,
        input_ids=input_ids,
        bias_ids=genome.node_ids("bias"),
        eval_order=eval_order,
        incoming=incoming,
        activations={nid: by_id[nid].activation for nid in internal},
        output_ids=genome.node_ids("output"),
    )
