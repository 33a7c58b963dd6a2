/**
 * Pure scene-graph construction for genome drawings.
 *
 * The scene is plain data (no DOM), so identical inputs snapshot
 * identically; dom.ts turns a scene into SVG. Layout is layered by
 * topological depth: inputs and bias on the left, outputs on the right,
 * hidden nodes at their longest-path depth.
 */

import { ConvStage, GenomeDoc } from "./schema.js";

export interface NodeGlyph {
  id: number;
  kind: "input" | "bias" | "hidden" | "output";
  activation: string;
  x: number;
  y: number;
  label: string;
}

export interface EdgeGlyph {
  innovation: number;
  from: { x: number; y: number };
  to: { x: number; y: number };
  width: number;
  sign: "positive" | "negative";
  dashed: boolean;
}

export interface KernelCell {
  row: number;
  col: number;
  value: number;
  /** 0..1 intensity relative to the stage's largest |value| */
  intensity: number;
}

export interface ConvGlyph {
  stageIndex: number;
  cells: KernelCell[];
  rows: number;
  cols: number;
  label: string;
  x: number;
  y: number;
}

export interface Scene {
  width: number;
  height: number;
  convStages: ConvGlyph[];
  nodes: NodeGlyph[];
  edges: EdgeGlyph[];
}

const LAYER_SPACING = 140;
const NODE_SPACING = 46;
const CONV_COLUMN_WIDTH = 110;
const MARGIN = 40;
const MAX_EDGE_WIDTH = 6;

/** Longest-path depth from the input/bias layer over enabled connections. */
export function topologicalDepths(genome: GenomeDoc): Map<number, number> {
  const depths = new Map<number, number>();
  const incoming = new Map<number, number[]>();
  for (const c of genome.connections) {
    if (!c.enabled) continue;
    (incoming.get(c.dst) ?? incoming.set(c.dst, []).get(c.dst)!).push(c.src);
  }
  const outputs = genome.nodes.filter((n) => n.kind === "output");
  const depthOf = (id: number, seen: Set<number>): number => {
    const cached = depths.get(id);
    if (cached !== undefined) return cached;
    if (seen.has(id)) throw new Error(`cycle through node ${id}`);
    seen.add(id);
    const sources = incoming.get(id) ?? [];
    const depth = sources.length
      ? 1 + Math.max(...sources.map((s) => depthOf(s, seen)))
      : 0;
    seen.delete(id);
    depths.set(id, depth);
    return depth;
  };
  for (const node of genome.nodes) depthOf(node.id, new Set());
  // outputs share the rightmost layer regardless of their own depth
  const maxDepth = Math.max(1, ...depths.values());
  for (const out of outputs) depths.set(out.id, maxDepth);
  return depths;
}

function kernelGlyph(stage: ConvStage, x: number, y: number): ConvGlyph {
  const flat = stage.kernel.flat();
  const peak = Math.max(...flat.map(Math.abs), 1e-12);
  const cells: KernelCell[] = [];
  stage.kernel.forEach((row, r) =>
    row.forEach((value, c) =>
      cells.push({
        row: r,
        col: c,
        value,
        intensity: Math.abs(value) / peak,
      }),
    ),
  );
  const pooling =
    stage.pooler === "none" ? "" : ` ${stage.pooler}/${stage.pool_window}`;
  return {
    stageIndex: stage.stage_index,
    cells,
    rows: stage.kernel.length,
    cols: stage.kernel[0]!.length,
    label: `s${stage.stride}${pooling} ${stage.activation}`,
    x,
    y,
  };
}

export function renderGenome(genome: GenomeDoc): Scene {
  const depths = topologicalDepths(genome);
  const maxDepth = Math.max(0, ...depths.values());

  // group nodes per layer, ordered by id for stable layouts
  const layers: number[][] = Array.from({ length: maxDepth + 1 }, () => []);
  const sorted = [...genome.nodes].sort((a, b) => a.id - b.id);
  for (const node of sorted) layers[depths.get(node.id) ?? 0]!.push(node.id);

  const convWidth = genome.conv_stages.length
    ? CONV_COLUMN_WIDTH * genome.conv_stages.length
    : 0;
  const positions = new Map<number, { x: number; y: number }>();
  const glyphs: NodeGlyph[] = [];
  for (const node of sorted) {
    const depth = depths.get(node.id) ?? 0;
    const layer = layers[depth]!;
    const row = layer.indexOf(node.id);
    const x = MARGIN + convWidth + depth * LAYER_SPACING;
    const y = MARGIN + row * NODE_SPACING;
    positions.set(node.id, { x, y });
    glyphs.push({
      id: node.id,
      kind: node.kind,
      activation: node.activation,
      x,
      y,
      label: node.kind === "bias" ? "bias" : `${node.id}`,
    });
  }

  const weights = genome.connections.map((c) => Math.abs(c.weight));
  const peak = Math.max(...weights, 1e-12);
  const edges: EdgeGlyph[] = [...genome.connections]
    .sort((a, b) => a.innovation - b.innovation)
    .map((c) => ({
      innovation: c.innovation,
      from: positions.get(c.src)!,
      to: positions.get(c.dst)!,
      width: Math.max(0.5, (Math.abs(c.weight) / peak) * MAX_EDGE_WIDTH),
      sign: c.weight >= 0 ? "positive" : "negative",
      dashed: !c.enabled,
    }));

  const convStages = [...genome.conv_stages]
    .sort((a, b) => a.stage_index - b.stage_index)
    .map((stage, i) =>
      kernelGlyph(stage, MARGIN + i * CONV_COLUMN_WIDTH, MARGIN),
    );

  const tallest = Math.max(1, ...layers.map((l) => l.length));
  return {
    width: 2 * MARGIN + convWidth + (maxDepth + 1) * LAYER_SPACING,
    height: 2 * MARGIN + tallest * NODE_SPACING,
    convStages,
    nodes: glyphs,
    edges,
  };
}
