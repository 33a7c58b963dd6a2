"""Fitness tasks and image ingestion.

Tasks are immutable: they decode/generate their data once and expose a pure
`evaluate(phenotype) -> fitness` callable, so populations can be scored
concurrently.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from PIL import Image, UnidentifiedImageError

from .phenotype import ImageMatrix


class DecodeError(ValueError):
    """Image file exists but cannot be decoded as a supported format."""


class ManifestError(ValueError):
    """Dataset manifest is malformed or references bad images."""


@dataclass(frozen=True)
class FitnessTask:
    name: str
    input_width: int
    input_height: int
    output_count: int
    evaluate: Callable  # Phenotype -> non-negative float
    fitness_target: Optional[float] = None


@dataclass(frozen=True)
class DatasetManifest:
    records: tuple  # of (absolute Path, label in {0, 1})


# ---------------------------------------------------------------------------
# image ingestion

_LUMINANCE = np.array([0.299, 0.587, 0.114])


def load_image(path):
    """Decode a png/bmp file to a grayscale ImageMatrix with values in [0, 1]."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"image not found: {path}")
    try:
        with Image.open(path) as img:
            fmt = img.format
            if fmt not in ("PNG", "BMP"):
                raise DecodeError(f"unsupported image format {fmt!r}: {path}")
            img.load()
            if img.mode == "L":
                arr = np.asarray(img, dtype=np.float64) / 255.0
            elif img.mode in ("I", "I;16"):
                arr = np.asarray(img, dtype=np.float64) / 65535.0
            else:
                rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
                arr = (rgb @ _LUMINANCE) / 255.0
    except DecodeError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise DecodeError(f"cannot decode {path}: {exc}") from exc
    arr = np.clip(arr, 0.0, 1.0)
    return ImageMatrix.from_array(arr)


def fit_to_dims(img, width, height):
    """Center-crop to the target aspect ratio, then nearest-neighbor resample.

    Nearest-neighbor index mapping: out[i][j] = crop[i*ch//height][j*cw//width].
    """
    src = img.pixels
    sh, sw = src.shape
    if sw * height >= sh * width:
        ch, cw = sh, max(1, sh * width // height)
    else:
        cw, ch = sw, max(1, sw * height // width)
    top = (sh - ch) // 2
    left = (sw - cw) // 2
    crop = src[top: top + ch, left: left + cw]

    rows = (np.arange(height) * ch) // height
    cols = (np.arange(width) * cw) // width
    return ImageMatrix.from_array(crop[np.ix_(rows, cols)])


def parse_manifest(path):
    """Read a `path,label` manifest (one record per line, # comments ignored).

    Paths resolve relative to the manifest's directory.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"manifest not found: {path}")
    base = path.parent
    records = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.rsplit(",", 1)
        if len(parts) != 2:
            raise ManifestError(f"{path}:{lineno}: expected 'path,label'")
        rel, label_str = parts[0].strip(), parts[1].strip()
        if label_str not in ("0", "1"):
            raise ManifestError(f"{path}:{lineno}: label must be 0 or 1, got {label_str!r}")
        records.append((base / rel, int(label_str)))
    if not records:
        raise ManifestError(f"{path}: manifest contains no records")
    return DatasetManifest(records=tuple(records))


# ---------------------------------------------------------------------------
# tasks

def _accuracy_evaluator(images, labels):
    stack = np.stack(images)
    labels = np.asarray(labels)

    def evaluate(phenotype):
        outputs = phenotype.forward_batch(stack)[:, 0]
        predictions = (outputs >= 0.5).astype(int)
        return float((predictions == labels).mean())

    return evaluate


def xor_task():
    """Two flat inputs, one output; fitness = (4 - sum of |error|)^2 in [0, 16]."""
    cases = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    expected = np.array([0.0, 1.0, 1.0, 0.0])
    stack = cases.reshape(4, 1, 2)

    def evaluate(phenotype):
        outputs = phenotype.forward_batch(stack)[:, 0]
        error = np.abs(outputs - expected).sum()
        return float((4.0 - error) ** 2)

    return FitnessTask(
        name="xor",
        input_width=2,
        input_height=1,
        output_count=1,
        evaluate=evaluate,
        fitness_target=15.0,
    )


def bars_conv_seed(size=16):
    """Default conv pipeline for bar-orientation runs: a horizontal-edge kernel
    followed by max pooling down to a 2x2 feature grid."""
    from .genome import ConvStageGene

    window = (size - 2) // 2
    return [ConvStageGene(
        stage_index=0,
        kernel=[[1.0, 1.0, 1.0], [0.0, 0.0, 0.0], [-1.0, -1.0, -1.0]],
        stride=1,
        pooler="max",
        pool_window=window,
        activation="linear",
    )]


def bars_task(size=16, samples_per_class=40, seed=0):
    """Synthetic bar-orientation classification.

    Class 0: one bright horizontal bar; class 1: one bright vertical bar; both
    on a noisy dark background. Fitness is accuracy with a 0.5 threshold.
    """
    if size < 4:
        raise ValueError("bars_task needs size >= 4")
    rng = random.Random(seed)
    images, labels = [], []
    for label in (0, 1):
        for _ in range(samples_per_class):
            img = np.array(
                [[rng.uniform(0.0, 0.2) for _ in range(size)] for _ in range(size)])
            pos = rng.randrange(size)
            bar = [rng.uniform(0.8, 1.0) for _ in range(size)]
            if label == 0:
                img[pos, :] = bar
            else:
                img[:, pos] = bar
            images.append(img)
            labels.append(label)

    return FitnessTask(
        name="bars",
        input_width=size,
        input_height=size,
        output_count=1,
        evaluate=_accuracy_evaluator(images, labels),
        fitness_target=0.95,
    )


def image_classification_task(manifest, input_width, input_height):
    """Binary classification over a decoded, cached image manifest."""
    images, labels, failures = [], [], []
    for path, label in manifest.records:
        try:
            img = load_image(path)
        except (FileNotFoundError, DecodeError) as exc:
            failures.append(str(exc))
            continue
        images.append(fit_to_dims(img, input_width, input_height).pixels)
        labels.append(label)
    if failures:
        raise ManifestError("undecodable images:\n" + "\n".join(failures))

    return FitnessTask(
        name="images",
        input_width=input_width,
        input_height=input_height,
        output_count=1,
        evaluate=_accuracy_evaluator(images, labels),
        fitness_target=None,
    )
