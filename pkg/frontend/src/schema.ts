/**
 * Runtime validation of history archive documents.
 *
 * Mirrors the engine's published JSON schema; zod gives typed parse results
 * and error paths suitable for a user-facing banner.
 */

import { z } from "zod";

export const HISTORY_FORMAT_VERSION = 1;

const poolers = z.enum(["max", "average", "none"]);
const activations = z.enum([
  "sigmoid",
  "sigmoid_steepened",
  "relu",
  "tanh",
  "linear",
]);

export const convStageSchema = z
  .object({
    stage_index: z.number().int().nonnegative(),
    kernel: z.array(z.array(z.number()).nonempty()).nonempty(),
    stride: z.number().int().positive(),
    pooler: poolers,
    pool_window: z.number().int().min(2),
    activation: activations,
  })
  .strict();

export const nodeSchema = z
  .object({
    id: z.number().int().positive(),
    kind: z.enum(["input", "bias", "hidden", "output"]),
    activation: activations,
  })
  .strict();

export const connectionSchema = z
  .object({
    innovation: z.number().int().positive(),
    src: z.number().int().positive(),
    dst: z.number().int().positive(),
    weight: z.number(),
    enabled: z.boolean(),
  })
  .strict();

export const genomeSchema = z
  .object({
    conv_stages: z.array(convStageSchema),
    nodes: z.array(nodeSchema),
    connections: z.array(connectionSchema),
  })
  .strict();

export const speciesSchema = z
  .object({
    id: z.number().int().positive(),
    size: z.number().int().positive(),
    best_fitness: z.number(),
    stagnation: z.number().int().nonnegative(),
    representative: genomeSchema,
    members: z.array(genomeSchema).optional(),
  })
  .strict();

export const generationSchema = z
  .object({
    index: z.number().int().nonnegative(),
    species: z.array(speciesSchema).nonempty(),
    champion: genomeSchema,
    fitness: z
      .object({ min: z.number(), mean: z.number(), max: z.number() })
      .strict(),
    best_fitness_ever: z.number(),
  })
  .strict();

export const historySchema = z
  .object({
    format_version: z.literal(HISTORY_FORMAT_VERSION),
    config: z.record(z.unknown()),
    truncated: z.boolean(),
    generations: z.array(generationSchema).nonempty(),
  })
  .strict();

export type ConvStage = z.infer<typeof convStageSchema>;
export type GenomeDoc = z.infer<typeof genomeSchema>;
export type SpeciesDoc = z.infer<typeof speciesSchema>;
export type GenerationDoc = z.infer<typeof generationSchema>;
export type HistoryDoc = z.infer<typeof historySchema>;

export class SchemaError extends Error {}

/** Parse an unknown document, throwing SchemaError naming the first bad path. */
export function parseHistory(document: unknown): HistoryDoc {
  const result = historySchema.safeParse(document);
  if (!result.success) {
    const issue = result.error.issues[0];
    if (!issue) throw new SchemaError("document does not match the schema");
    const path = issue.path.length ? "$." + issue.path.join(".") : "$";
    throw new SchemaError(`${path}: ${issue.message}`);
  }
  return result.data;
}
