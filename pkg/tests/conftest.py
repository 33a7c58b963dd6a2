"""Shared builders and independent oracles for the test suite.

The oracles here deliberately avoid the library's own evaluation paths:
naive nested loops for convolution/pooling and a fixed-point sweep for
network evaluation.
"""

import math
import random

import numpy as np
import pytest

from convneat.genome import (
    ConvStageGene,
    InnovationRegistry,
    mutate_add_connection,
    mutate_add_node,
    mutate_conv,
    mutate_weights,
    new_minimal_genome,
)
from convneat.phenotype import activate


def make_registry():
    return InnovationRegistry()


def make_minimal(num_inputs=2, num_outputs=1, conv_seed=(), registry=None,
                 rng=None, **kw):
    registry = registry or InnovationRegistry()
    rng = rng or random.Random(0)
    return new_minimal_genome(num_inputs, num_outputs, list(conv_seed),
                              registry, rng, **kw)


def random_genome(seed, num_inputs=2, num_outputs=1, steps=8, conv_seed=(),
                  input_height=None, input_width=None):
    """Grow a valid genome by applying a random operator sequence."""
    rng = random.Random(seed)
    registry = InnovationRegistry()
    g = new_minimal_genome(num_inputs, num_outputs, list(conv_seed), registry,
                           rng, input_height=input_height,
                           input_width=input_width)
    for _ in range(steps):
        op = rng.randrange(4)
        if op == 0:
            g = mutate_add_node(g, registry, rng)
        elif op == 1:
            g = mutate_add_connection(g, registry, rng)
        elif op == 2:
            g = mutate_weights(g, 0.8, 0.5, 0.1, rng)
        elif g.conv_stages:
            g = mutate_conv(g, 0.1, 0.2, 0.2, rng, input_height, input_width)
    return g


def identity_stage(index=0):
    return ConvStageGene(stage_index=index, kernel=[[1.0]], stride=1,
                         pooler="none", pool_window=2, activation="linear")


# ---------------------------------------------------------------------------
# oracles

def naive_convolve(img, kernel, stride):
    img = np.asarray(img, dtype=float)
    kernel = np.asarray(kernel, dtype=float)
    h, w = img.shape
    kh, kw = kernel.shape
    oh = (h - kh) // stride + 1
    ow = (w - kw) // stride + 1
    out = np.zeros((oh, ow))
    for i in range(oh):
        for j in range(ow):
            acc = 0.0
            for a in range(kh):
                for b in range(kw):
                    acc += kernel[a, b] * img[i * stride + a, j * stride + b]
            out[i, j] = acc
    return out


def naive_pool(arr, kind, window):
    arr = np.asarray(arr, dtype=float)
    oh = arr.shape[0] // window
    ow = arr.shape[1] // window
    out = np.zeros((oh, ow))
    for i in range(oh):
        for j in range(ow):
            vals = [arr[i * window + a, j * window + b]
                    for a in range(window) for b in range(window)]
            out[i, j] = max(vals) if kind == "max" else sum(vals) / len(vals)
    return out


def naive_forward(genome, flat_inputs):
    """Fixed-point sweep evaluation of the enabled-connection graph, independent
    of any topological ordering."""
    by_id = genome.nodes_by_id()
    values = {}
    for nid, v in zip(genome.node_ids("input"), flat_inputs):
        values[nid] = v
    for nid in genome.node_ids("bias"):
        values[nid] = 1.0
    internal = [n.id for n in genome.nodes if n.kind in ("hidden", "output")]
    for nid in internal:
        values[nid] = activate(0.0, by_id[nid].activation)

    incoming = {}
    for c in genome.connections:
        if c.enabled:
            incoming.setdefault(c.dst, []).append((c.src, c.weight))

    for _ in range(len(internal) + 1):
        for nid in internal:
            total = sum(values[src] * w for src, w in incoming.get(nid, []))
            values[nid] = activate(total, by_id[nid].activation)
    return [values[o] for o in genome.node_ids("output")]
