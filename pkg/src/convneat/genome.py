"""Genome encoding and variation operators.

A genome combines an ordered list of convolutional preprocessing stages with a
NEAT-style feed-forward graph (node genes + connection genes carrying
innovation numbers). All operators return new genomes; existing genomes are
never modified in place.
"""

from __future__ import annotations

import copy
import math
import random
from dataclasses import dataclass, field, replace

NODE_KINDS = ("input", "bias", "hidden", "output")
ACTIVATION_KINDS = ("sigmoid_steepened", "sigmoid", "relu", "tanh", "linear")
POOLER_KINDS = ("max", "average", "none")

WEIGHT_CLAMP = 8.0


class ConfigurationError(ValueError):
    """Raised when a genome or pipeline configuration is inconsistent."""


@dataclass(frozen=True)
class NodeGene:
    id: int
    kind: str  # one of NODE_KINDS
    activation: str = "linear"  # meaningful for hidden/output only


@dataclass(frozen=True)
class ConnectionGene:
    innovation: int
    src: int
    dst: int
    weight: float
    enabled: bool = True


@dataclass
class ConvStageGene:
    """One conv pipeline stage: kernel, stride, optional pooler, activation."""

    stage_index: int
    kernel: list  # kh x kw nested list of floats, kh/kw in {1, 3, 5}
    stride: int = 1
    pooler: str = "none"  # one of POOLER_KINDS
    pool_window: int = 2
    activation: str = "linear"

    def kernel_shape(self):
        return len(self.kernel), len(self.kernel[0])


@dataclass
class Genome:
    conv_stages: list = field(default_factory=list)
    nodes: list = field(default_factory=list)
    connections: list = field(default_factory=list)  # kept sorted by innovation
    fitness: float = None  # set after evaluation
    adjusted_fitness: float = None  # set after fitness sharing

    def nodes_by_id(self):
        return {n.id: n for n in self.nodes}

    def node_ids(self, kind=None):
        if kind is None:
            return [n.id for n in self.nodes]
        return [n.id for n in self.nodes if n.kind == kind]

    def max_innovation(self):
        return self.connections[-1].innovation if self.connections else 0

    def clone(self):
        g = Genome(
            conv_stages=copy.deepcopy(self.conv_stages),
            nodes=list(self.nodes),
            connections=list(self.connections),
        )
        g.fitness = self.fitness
        g.adjusted_fitness = self.adjusted_fitness
        return g


@dataclass
class CompatibilityCoefficients:
    c1: float = 1.0  # excess
    c2: float = 1.0  # disjoint
    c3: float = 0.4  # mean weight difference
    n_floor: int = 20
    threshold: float = 2.5


class InnovationRegistry:
    """Global historical markers: equal structural mutations get equal numbers."""

    def __init__(self):
        self.next_innovation = 1
        self.next_node_id = 1
        self.connection_innovations = {}  # (src, dst) -> innovation
        self.split_records = {}  # split innovation -> (node_id, in_innov, out_innov)

    def connection_innovation(self, src, dst):
        key = (src, dst)
        if key not in self.connection_innovations:
            self.connection_innovations[key] = self.next_innovation
            self.next_innovation += 1
        return self.connection_innovations[key]

    def split(self, connection):
        """Markers for splitting `connection`; memoized so identical splits share."""
        key = connection.innovation
        if key not in self.split_records:
            node_id = self.fresh_node_id()
            in_innov = self.connection_innovation(connection.src, node_id)
            out_innov = self.connection_innovation(node_id, connection.dst)
            self.split_records[key] = (node_id, in_innov, out_innov)
        return self.split_records[key]

    def fresh_split(self, connection):
        """Unmemoized split markers, for the rare re-split of a connection whose
        recorded node id already exists in the genome."""
        node_id = self.fresh_node_id()
        in_innov = self.next_innovation
        out_innov = self.next_innovation + 1
        self.next_innovation += 2
        return node_id, in_innov, out_innov

    def fresh_node_id(self):
        nid = self.next_node_id
        self.next_node_id += 1
        return nid

    def reserve_node_ids(self, upto):
        self.next_node_id = max(self.next_node_id, upto + 1)


# ---------------------------------------------------------------------------
# shape algebra

def conv_output_shape(height, width, kh, kw, stride):
    if kh > height or kw > width:
        raise ConfigurationError(
            f"kernel {kh}x{kw} larger than input {height}x{width}")
    return (height - kh) // stride + 1, (width - kw) // stride + 1


def pool_output_shape(height, width, window):
    if window > height or window > width:
        raise ConfigurationError(
            f"pool window {window} exceeds map {height}x{width}")
    return height // window, width // window


def pipeline_output_shape(stages, height, width):
    """Spatial extent after applying every conv stage; raises ConfigurationError
    if any stage is dimension-incompatible or the result collapses below 1x1."""
    h, w = height, width
    for stage in sorted(stages, key=lambda s: s.stage_index):
        kh, kw = stage.kernel_shape()
        h, w = conv_output_shape(h, w, kh, kw, stage.stride)
        if stage.pooler != "none":
            h, w = pool_output_shape(h, w, stage.pool_window)
        if h < 1 or w < 1:
            raise ConfigurationError(
                f"stage {stage.stage_index} collapses output to {h}x{w}")
    return h, w


def pipeline_output_size(stages, height, width):
    h, w = pipeline_output_shape(stages, height, width)
    return h * w


# ---------------------------------------------------------------------------
# validation

def _check_acyclic(connections):
    """The full connection graph (enabled and disabled) must stay a DAG, so that
    any enable/disable combination produced by crossover is feed-forward."""
    adj = {}
    for c in connections:
        adj.setdefault(c.src, []).append(c.dst)
    state = {}  # 0 visiting, 1 done

    for start in list(adj):
        if start in state:
            continue
        stack = [(start, iter(adj.get(start, ())))]
        state[start] = 0
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if state.get(nxt) == 0:
                    return False
                if nxt not in state:
                    state[nxt] = 0
                    stack.append((nxt, iter(adj.get(nxt, ()))))
                    advanced = True
                    break
            if not advanced:
                state[node] = 1
                stack.pop()
    return True


def validate_genome(g, input_height=None, input_width=None):
    """Check every structural invariant; raises ConfigurationError on violation."""
    ids = [n.id for n in g.nodes]
    if len(ids) != len(set(ids)):
        raise ConfigurationError("duplicate node ids")
    by_id = g.nodes_by_id()
    for n in g.nodes:
        if n.kind not in NODE_KINDS:
            raise ConfigurationError(f"bad node kind {n.kind!r}")
        if n.kind in ("hidden", "output") and n.activation not in ACTIVATION_KINDS:
            raise ConfigurationError(f"bad activation {n.activation!r}")

    innovs = [c.innovation for c in g.connections]
    if len(innovs) != len(set(innovs)):
        raise ConfigurationError("duplicate innovation numbers")
    if innovs != sorted(innovs):
        raise ConfigurationError("connections not sorted by innovation")
    pairs = [(c.src, c.dst) for c in g.connections]
    if len(pairs) != len(set(pairs)):
        raise ConfigurationError("duplicate (src, dst) pair")
    for c in g.connections:
        if c.src not in by_id or c.dst not in by_id:
            raise ConfigurationError(f"connection {c.innovation} references unknown node")
        if by_id[c.dst].kind in ("input", "bias"):
            raise ConfigurationError(f"connection {c.innovation} targets an input/bias node")
        if not math.isfinite(c.weight):
            raise ConfigurationError(f"non-finite weight on innovation {c.innovation}")
    if not _check_acyclic(g.connections):
        raise ConfigurationError("connection graph contains a cycle")

    indices = sorted(s.stage_index for s in g.conv_stages)
    if indices != list(range(len(g.conv_stages))):
        raise ConfigurationError("conv stage indices not contiguous from 0")
    for s in g.conv_stages:
        kh, kw = s.kernel_shape()
        if kh not in (1, 3, 5) or kw not in (1, 3, 5):
            raise ConfigurationError(f"kernel shape {kh}x{kw} not in {{1,3,5}}")
        if any(len(row) != kw for row in s.kernel):
            raise ConfigurationError("ragged kernel")
        if s.pooler not in POOLER_KINDS:
            raise ConfigurationError(f"bad pooler {s.pooler!r}")
        if s.pooler != "none" and s.pool_window < 2:
            raise ConfigurationError("pool_window must be >= 2 when pooling")
        if s.stride < 1:
            raise ConfigurationError("stride must be positive")
        if s.activation not in ACTIVATION_KINDS:
            raise ConfigurationError(f"bad stage activation {s.activation!r}")

    if input_height is not None and input_width is not None:
        flat = pipeline_output_size(g.conv_stages, input_height, input_width)
        n_inputs = len(g.node_ids("input"))
        if flat != n_inputs:
            raise ConfigurationError(
                f"conv pipeline yields {flat} values but genome has {n_inputs} inputs")
    return g


# ---------------------------------------------------------------------------
# construction

def new_minimal_genome(num_inputs, num_outputs, conv_seed, registry, rng,
                       output_activation="sigmoid",
                       input_height=None, input_width=None):
    """Fully connected inputs+bias -> outputs, no hidden nodes.

    Innovation numbers come from the registry so every initial genome shares
    markers for the same (src, dst) pair.
    """
    if num_inputs < 1 or num_outputs < 1:
        raise ConfigurationError("need at least one input and one output")
    if input_height is not None and input_width is not None:
        flat = pipeline_output_size(conv_seed, input_height, input_width)
        if flat != num_inputs:
            raise ConfigurationError(
                f"conv seed yields {flat} values, expected {num_inputs} inputs")

    nodes = []
    input_ids = list(range(1, num_inputs + 1))
    bias_id = num_inputs + 1
    output_ids = list(range(num_inputs + 2, num_inputs + 2 + num_outputs))
    for i in input_ids:
        nodes.append(NodeGene(i, "input"))
    nodes.append(NodeGene(bias_id, "bias"))
    for o in output_ids:
        nodes.append(NodeGene(o, "output", output_activation))
    registry.reserve_node_ids(output_ids[-1])

    connections = []
    for src in input_ids + [bias_id]:
        for dst in output_ids:
            innov = registry.connection_innovation(src, dst)
            connections.append(
                ConnectionGene(innov, src, dst, rng.uniform(-1.0, 1.0)))
    connections.sort(key=lambda c: c.innovation)
    return Genome(conv_stages=copy.deepcopy(conv_seed), nodes=nodes,
                  connections=connections)


# ---------------------------------------------------------------------------
# compatibility distance

def _kernel_mean_abs_diff(ka, kb):
    flat_a = [v for row in ka for v in row]
    flat_b = [v for row in kb for v in row]
    return sum(abs(x - y) for x, y in zip(flat_a, flat_b)) / len(flat_a)


def compatibility_distance(a, b, coeffs):
    """delta = c1*E/N + c2*D/N + c3*Wbar over connection and conv stage genes."""
    conns_a = {c.innovation: c for c in a.connections}
    conns_b = {c.innovation: c for c in b.connections}
    max_a = a.max_innovation()
    max_b = b.max_innovation()

    excess = disjoint = 0
    weight_diffs = []
    for innov, ca in conns_a.items():
        cb = conns_b.get(innov)
        if cb is not None:
            weight_diffs.append(abs(ca.weight - cb.weight))
        elif innov > max_b:
            excess += 1
        else:
            disjoint += 1
    for innov in conns_b:
        if innov not in conns_a:
            if innov > max_a:
                excess += 1
            else:
                disjoint += 1

    stages_a = {s.stage_index: s for s in a.conv_stages}
    stages_b = {s.stage_index: s for s in b.conv_stages}
    for idx, sa in stages_a.items():
        sb = stages_b.get(idx)
        if sb is None:
            disjoint += 1
        elif sa.kernel_shape() == sb.kernel_shape():
            weight_diffs.append(_kernel_mean_abs_diff(sa.kernel, sb.kernel))
        else:
            disjoint += 2  # incommensurable stages count as one disjoint gene each
    disjoint += sum(1 for idx in stages_b if idx not in stages_a)

    count_a = len(a.connections) + len(a.conv_stages)
    count_b = len(b.connections) + len(b.conv_stages)
    n = max(count_a, count_b)
    if n == 0:
        return 0.0
    if count_a < coeffs.n_floor and count_b < coeffs.n_floor:
        n = 1
    wbar = sum(weight_diffs) / len(weight_diffs) if weight_diffs else 0.0
    return coeffs.c1 * excess / n + coeffs.c2 * disjoint / n + coeffs.c3 * wbar


# ---------------------------------------------------------------------------
# crossover

def crossover(fitter, other, rng, p_disable=0.75):
    """Historical-marking crossover.

    Matching genes take their weight from either parent uniformly at random;
    disjoint/excess genes come from the fitter parent only. On a fitness tie
    both parents' non-matching genes are merged (deduplicated, cycle-guarded).
    A gene disabled in either parent stays disabled with probability p_disable.
    """
    tie = fitter.fitness == other.fitness
    other_conns = {c.innovation: c for c in other.connections}

    child_conns = []
    for ca in fitter.connections:
        cb = other_conns.get(ca.innovation)
        if cb is None:
            child_conns.append(ca)
            continue
        chosen = ca if rng.random() < 0.5 else cb
        enabled = chosen.enabled
        if not (ca.enabled and cb.enabled) and rng.random() < p_disable:
            enabled = False
        child_conns.append(replace(chosen, enabled=enabled))

    nodes_by_id = {n.id: n for n in fitter.nodes}
    if tie:
        fitter_innovs = {c.innovation for c in fitter.connections}
        pairs = {(c.src, c.dst) for c in child_conns}
        other_nodes = other.nodes_by_id()
        for cb in other.connections:
            if cb.innovation in fitter_innovs or (cb.src, cb.dst) in pairs:
                continue
            if not _check_acyclic(child_conns + [cb]):
                continue
            child_conns.append(cb)
            pairs.add((cb.src, cb.dst))
            for nid in (cb.src, cb.dst):
                if nid not in nodes_by_id:
                    nodes_by_id[nid] = other_nodes[nid]

    child_stages = []
    other_stages = {s.stage_index: s for s in other.conv_stages}
    for sa in fitter.conv_stages:
        sb = other_stages.get(sa.stage_index)
        if sb is not None and rng.random() < 0.5:
            child_stages.append(copy.deepcopy(sb))
        else:
            child_stages.append(copy.deepcopy(sa))

    child_conns.sort(key=lambda c: c.innovation)
    nodes = sorted(nodes_by_id.values(), key=lambda n: n.id)
    return Genome(conv_stages=child_stages, nodes=nodes, connections=child_conns)


# ---------------------------------------------------------------------------
# mutation

def _descendants(connections):
    adj = {}
    for c in connections:
        adj.setdefault(c.src, set()).add(c.dst)
    memo = {}

    def reach(node):
        if node in memo:
            return memo[node]
        memo[node] = set()  # placeholder breaks self-loops during recursion
        out = set()
        for nxt in adj.get(node, ()):
            out.add(nxt)
            out |= reach(nxt)
        memo[node] = out
        return out

    for node in list(adj):
        reach(node)
    return memo


def mutate_add_connection(g, registry, rng):
    """Add one enabled connection between unconnected nodes, keeping the graph
    acyclic; returns g unchanged if no legal pair exists."""
    existing = {(c.src, c.dst) for c in g.connections}
    sources = [n.id for n in g.nodes if n.kind != "output"]
    targets = [n.id for n in g.nodes if n.kind in ("hidden", "output")]
    reach = _descendants(g.connections)

    legal = []
    for src in sources:
        for dst in targets:
            if src == dst or (src, dst) in existing:
                continue
            if src in reach.get(dst, ()):  # dst already reaches src
                continue
            legal.append((src, dst))
    if not legal:
        return g

    legal.sort()
    src, dst = legal[rng.randrange(len(legal))]
    innov = registry.connection_innovation(src, dst)
    child = g.clone()
    child.connections = child.connections + [
        ConnectionGene(innov, src, dst, rng.uniform(-1.0, 1.0))]
    child.connections.sort(key=lambda c: c.innovation)
    return child


def mutate_add_node(g, registry, rng, hidden_activation="sigmoid_steepened"):
    """Split a random enabled connection: src -> new (weight 1.0) -> dst (old
    weight); the split connection is disabled. No-op without enabled connections."""
    enabled = [c for c in g.connections if c.enabled]
    if not enabled:
        return g
    conn = enabled[rng.randrange(len(enabled))]
    node_id, in_innov, out_innov = registry.split(conn)
    existing_ids = {n.id for n in g.nodes}
    while node_id in existing_ids:
        node_id, in_innov, out_innov = registry.fresh_split(conn)

    child = g.clone()
    child.nodes = child.nodes + [NodeGene(node_id, "hidden", hidden_activation)]
    child.connections = [
        replace(c, enabled=False) if c.innovation == conn.innovation else c
        for c in child.connections
    ]
    child.connections += [
        ConnectionGene(in_innov, conn.src, node_id, 1.0),
        ConnectionGene(out_innov, node_id, conn.dst, conn.weight),
    ]
    child.connections.sort(key=lambda c: c.innovation)
    return child


def mutate_weights(g, perturb_prob, perturb_sigma, reset_prob, rng):
    """Per connection: perturb with Gaussian noise, reset uniformly in [-1, 1],
    or leave unchanged; results clamp to [-8, 8]."""
    child = g.clone()
    new_conns = []
    for c in child.connections:
        r = rng.random()
        if r < perturb_prob:
            w = c.weight + rng.gauss(0.0, perturb_sigma)
        elif r < perturb_prob + reset_prob:
            w = rng.uniform(-1.0, 1.0)
        else:
            new_conns.append(c)
            continue
        w = max(-WEIGHT_CLAMP, min(WEIGHT_CLAMP, w))
        new_conns.append(replace(c, weight=w))
    child.connections = new_conns
    return child


def mutate_conv(g, kernel_sigma, swap_pooler_prob, swap_activation_prob, rng,
                input_height=None, input_width=None):
    """Perturb every kernel element; occasionally resample one stage's pooler or
    activation. Pooler swaps that break dimension compatibility roll back."""
    if not g.conv_stages:
        return g
    child = g.clone()

    if kernel_sigma > 0:
        for stage in child.conv_stages:
            stage.kernel = [
                [v + rng.gauss(0.0, kernel_sigma) for v in row]
                for row in stage.kernel
            ]

    if rng.random() < swap_pooler_prob:
        stage = child.conv_stages[rng.randrange(len(child.conv_stages))]
        old_pooler = stage.pooler
        stage.pooler = POOLER_KINDS[rng.randrange(len(POOLER_KINDS))]
        if input_height is not None and input_width is not None:
            try:
                flat = pipeline_output_size(child.conv_stages, input_height,
                                            input_width)
            except ConfigurationError:
                flat = -1
            if flat != len(g.node_ids("input")):
                stage.pooler = old_pooler

    if rng.random() < swap_activation_prob:
        stage = child.conv_stages[rng.randrange(len(child.conv_stages))]
        stage.activation = ACTIVATION_KINDS[rng.randrange(len(ACTIVATION_KINDS))]

    return child
