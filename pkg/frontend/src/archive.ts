/**
 * Pure view-state over a parsed history archive.
 *
 * Navigation is a total function: out-of-range actions return the input
 * view unchanged, so UI code never needs bounds checks.
 */

import { GenomeDoc, HistoryDoc, parseHistory } from "./schema.js";

export type GenomeRef =
  | { kind: "champion" }
  | { kind: "representative"; speciesId: number }
  | { kind: "member"; speciesId: number; index: number };

export interface ArchiveView {
  readonly archive: HistoryDoc;
  readonly generation: number;
  readonly speciesId: number;
  readonly selection: GenomeRef;
}

export type Action =
  | { type: "next_gen" }
  | { type: "prev_gen" }
  | { type: "select_species"; id: number }
  | { type: "select_genome"; ref: GenomeRef };

export function loadArchive(document: unknown): ArchiveView {
  const archive = parseHistory(document);
  const first = archive.generations[0];
  return {
    archive,
    generation: 0,
    speciesId: first.species[0].id,
    selection: { kind: "champion" },
  };
}

function currentGeneration(view: ArchiveView) {
  const gen = view.archive.generations[view.generation];
  if (!gen) throw new Error(`generation ${view.generation} out of range`);
  return gen;
}

function speciesIn(view: ArchiveView, generation: number): number[] {
  const gen = view.archive.generations[generation];
  return gen ? gen.species.map((s) => s.id) : [];
}

/** Clamp species/selection after a generation change. */
function reanchor(view: ArchiveView, generation: number): ArchiveView {
  const ids = speciesIn(view, generation);
  const speciesId = ids.includes(view.speciesId) ? view.speciesId : ids[0]!;
  const selection: GenomeRef =
    resolveGenome({ ...view, generation, speciesId }) === null
      ? { kind: "champion" }
      : view.selection;
  return { archive: view.archive, generation, speciesId, selection };
}

export function navigate(view: ArchiveView, action: Action): ArchiveView {
  switch (action.type) {
    case "next_gen": {
      const next = view.generation + 1;
      if (next >= view.archive.generations.length) return view;
      return reanchor(view, next);
    }
    case "prev_gen": {
      if (view.generation === 0) return view;
      return reanchor(view, view.generation - 1);
    }
    case "select_species": {
      if (!speciesIn(view, view.generation).includes(action.id)) return view;
      return { ...view, speciesId: action.id };
    }
    case "select_genome": {
      const candidate = { ...view, selection: action.ref };
      return resolveGenome(candidate) === null ? view : candidate;
    }
  }
}

/** The genome document the current selection points at, or null if absent. */
export function resolveGenome(view: ArchiveView): GenomeDoc | null {
  const gen = currentGeneration(view);
  const ref = view.selection;
  if (ref.kind === "champion") return gen.champion;
  const species = gen.species.find((s) => s.id === ref.speciesId);
  if (!species) return null;
  if (ref.kind === "representative") return species.representative;
  return species.members?.[ref.index] ?? null;
}

export function currentSpecies(view: ArchiveView) {
  const gen = currentGeneration(view);
  return gen.species.find((s) => s.id === view.speciesId) ?? gen.species[0]!;
}

/** Max fitness per generation, for the timeline strip. */
export function fitnessTimeline(archive: HistoryDoc): number[] {
  return archive.generations.map((g) => g.fitness.max);
}

/** Every genome reference present in a generation, for reachability checks. */
export function allRefsIn(view: ArchiveView): GenomeRef[] {
  const gen = currentGeneration(view);
  const refs: GenomeRef[] = [{ kind: "champion" }];
  for (const species of gen.species) {
    refs.push({ kind: "representative", speciesId: species.id });
    (species.members ?? []).forEach((_, index) =>
      refs.push({ kind: "member", speciesId: species.id, index }),
    );
  }
  return refs;
}
