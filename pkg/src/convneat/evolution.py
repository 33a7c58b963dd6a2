"""Generational loop: evaluation, speciation, fitness sharing, reproduction.

Fitness evaluation is a pure map over genomes and may run in parallel;
speciation, offspring allocation and reproduction are serialized and draw
all randomness from a single seeded generator.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Optional

from .genome import (
    CompatibilityCoefficients,
    ConvStageGene,
    Genome,
    InnovationRegistry,
    compatibility_distance,
    crossover,
    mutate_add_connection,
    mutate_add_node,
    mutate_conv,
    mutate_weights,
    new_minimal_genome,
    pipeline_output_size,
)
from .history import (
    HISTORY_FORMAT_VERSION,
    GenerationReport,
    HistoryArchive,
    SpeciesSnapshot,
)
from .phenotype import compile_genome


class EvaluationError(RuntimeError):
    """A task returned a non-finite fitness for some genome."""


@dataclass
class Species:
    id: int
    representative: Genome
    members: list = field(default_factory=list)
    best_fitness_ever: float = -math.inf
    stagnation: int = 0


@dataclass
class EvolutionConfig:
    population_size: int = 150
    coeffs: CompatibilityCoefficients = field(default_factory=CompatibilityCoefficients)
    # mutation rates
    weight_perturb_prob: float = 0.8
    weight_perturb_sigma: float = 0.5
    weight_reset_prob: float = 0.1
    add_connection_prob: float = 0.05
    add_node_prob: float = 0.03
    conv_kernel_sigma: float = 0.05
    conv_swap_pooler_prob: float = 0.01
    conv_swap_activation_prob: float = 0.01
    disable_inherit_prob: float = 0.75
    # selection / speciation
    elitism_count: int = 1
    elitism_min_size: int = 5
    stagnation_limit: int = 20
    interspecies_mating_prob: float = 0.001
    survival_fraction: float = 0.2
    # run control
    max_generations: int = 100
    fitness_target: Optional[float] = None
    seed: int = 0
    workers: int = 1
    conv_seed: list = field(default_factory=list)  # ConvStageGene list
    hidden_activation: str = "sigmoid_steepened"
    output_activation: str = "sigmoid_steepened"

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if not (0.0 < self.survival_fraction <= 1.0):
            raise ValueError("survival_fraction must be in (0, 1]")


# ---------------------------------------------------------------------------
# phases

def evaluate_population(population, task, workers=1):
    """Set fitness on every genome; aborts on non-finite task output."""

    def score(genome):
        phenotype = compile_genome(genome, task.input_width, task.input_height)
        return task.evaluate(phenotype)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scores = list(pool.map(score, population))
    else:
        scores = [score(g) for g in population]

    for index, (genome, fitness) in enumerate(zip(population, scores)):
        if not math.isfinite(fitness):
            raise EvaluationError(
                f"task {task.name!r} returned non-finite fitness {fitness!r} "
                f"for genome #{index}")
        genome.fitness = float(fitness)


def speciate(population, previous_species, coeffs):
    """Assign genomes to the first compatible species (ascending id); unmatched
    genomes found new species with themselves as representative."""
    candidates = [
        Species(id=s.id, representative=s.representative,
                best_fitness_ever=s.best_fitness_ever, stagnation=s.stagnation)
        for s in sorted(previous_species, key=lambda s: s.id)
    ]
    next_id = max((s.id for s in candidates), default=0) + 1
    for genome in population:
        for species in candidates:
            if compatibility_distance(genome, species.representative, coeffs) < coeffs.threshold:
                species.members.append(genome)
                break
        else:
            candidates.append(Species(id=next_id, representative=genome, members=[genome]))
            next_id += 1
    return [s for s in candidates if s.members]


def update_stagnation(species_list):
    for species in species_list:
        best = max(m.fitness for m in species.members)
        if best > species.best_fitness_ever:
            species.best_fitness_ever = best
            species.stagnation = 0
        else:
            species.stagnation += 1


def share_fitness(species_list):
    """adjusted_fitness = fitness / species size for every member."""
    for species in species_list:
        size = len(species.members)
        for member in species.members:
            if member.fitness is None:
                raise ValueError("share_fitness called before evaluation")
            member.adjusted_fitness = member.fitness / size


def allocate_offspring(species_list, population_size, stagnation_limit=math.inf,
                       champion_species_id=None):
    """Proportional allocation by shared (adjusted) fitness, repaired to sum
    exactly to population_size. Stagnant species get 0 unless they hold the
    champion."""
    if all(s.stagnation >= stagnation_limit for s in species_list):
        # mass extinction: only the champion's species carries on
        champion = next(s for s in species_list if s.id == champion_species_id)
        champion.stagnation = 0
        return {champion.id: population_size}
    eligible = [
        s for s in species_list
        if s.stagnation < stagnation_limit or s.id == champion_species_id
    ]

    # Proportional to each species' total adjusted fitness (= its mean raw
    # fitness). Using the per-member mean here instead would hand almost the
    # whole population to any singleton species and stalls convergence.
    totals = {
        s.id: sum(m.adjusted_fitness for m in s.members) for s in eligible
    }
    total = sum(totals.values())
    if total <= 0:
        # degenerate flat landscape: split evenly
        counts = {s.id: population_size // len(eligible) for s in eligible}
    else:
        counts = {
            s.id: round(population_size * totals[s.id] / total) for s in eligible
        }

    # repair rounding drift, biased toward the best species
    by_mean = sorted(eligible, key=lambda s: (-totals[s.id], s.id))
    diff = population_size - sum(counts.values())
    i = 0
    while diff != 0:
        sid = by_mean[i % len(by_mean)].id
        if diff > 0:
            counts[sid] += 1
            diff -= 1
        elif counts[sid] > 0:
            counts[sid] -= 1
            diff += 1
        i += 1
    return {sid: n for sid, n in counts.items() if n > 0}


def reproduce(species_list, allocation, registry, config, rng,
              input_height=None, input_width=None):
    """Produce the next population: per-species elites plus mutated crossover
    offspring; representatives for the next generation are re-sampled."""
    pools = {}
    ranked = {}
    for species in species_list:
        members = sorted(species.members, key=lambda g: -g.fitness)
        ranked[species.id] = members
        cutoff = max(1, math.ceil(len(members) * config.survival_fraction))
        pools[species.id] = members[:cutoff]

    offspring = []
    for species in sorted(species_list, key=lambda s: s.id):
        quota = allocation.get(species.id, 0)
        if quota == 0:
            continue
        members = ranked[species.id]
        pool = pools[species.id]
        other_pools = [pools[s.id] for s in sorted(species_list, key=lambda s: s.id)
                       if s.id != species.id and allocation.get(s.id, 0) > 0]

        elites = 0
        if len(members) >= config.elitism_min_size:
            elites = min(config.elitism_count, quota, len(members))
        for elite in members[:elites]:
            child = elite.clone()
            child.fitness = None
            child.adjusted_fitness = None
            offspring.append(child)

        for _ in range(quota - elites):
            parent_a = pool[rng.randrange(len(pool))]
            if other_pools and rng.random() < config.interspecies_mating_prob:
                foreign = other_pools[rng.randrange(len(other_pools))]
                parent_b = foreign[rng.randrange(len(foreign))]
            else:
                parent_b = pool[rng.randrange(len(pool))]
            if parent_b.fitness > parent_a.fitness:
                parent_a, parent_b = parent_b, parent_a
            child = crossover(parent_a, parent_b, rng, config.disable_inherit_prob)
            child = mutate_weights(child, config.weight_perturb_prob,
                                   config.weight_perturb_sigma,
                                   config.weight_reset_prob, rng)
            if rng.random() < config.add_connection_prob:
                child = mutate_add_connection(child, registry, rng)
            if rng.random() < config.add_node_prob:
                child = mutate_add_node(child, registry, rng,
                                        config.hidden_activation)
            if child.conv_stages:
                child = mutate_conv(child, config.conv_kernel_sigma,
                                    config.conv_swap_pooler_prob,
                                    config.conv_swap_activation_prob, rng,
                                    input_height, input_width)
            offspring.append(child)

        species.representative = species.members[rng.randrange(len(species.members))]
    return offspring


# ---------------------------------------------------------------------------
# full run

def evolve(task, config, progress=None):
    """Run the generational loop; returns (best-ever genome, HistoryArchive).

    Identical (task, config) pairs produce identical histories: all randomness
    flows from config.seed.
    """
    rng = random.Random(config.seed)
    registry = InnovationRegistry()
    num_inputs = pipeline_output_size(config.conv_seed,
                                      task.input_height, task.input_width)
    population = [
        new_minimal_genome(num_inputs, task.output_count, config.conv_seed,
                           registry, rng,
                           output_activation=config.output_activation,
                           input_height=task.input_height,
                           input_width=task.input_width)
        for _ in range(config.population_size)
    ]

    target = config.fitness_target
    if target is None:
        target = task.fitness_target

    species = []
    reports = []
    best_ever = None

    for generation in range(config.max_generations + 1):
        evaluate_population(population, task, config.workers)
        species = speciate(population, species, config.coeffs)
        update_stagnation(species)
        share_fitness(species)

        champion = max(population, key=lambda g: g.fitness)
        if best_ever is None or champion.fitness > best_ever.fitness:
            best_ever = champion
        fitnesses = [g.fitness for g in population]
        report = GenerationReport(
            generation_index=generation,
            species=[
                SpeciesSnapshot(
                    id=s.id,
                    size=len(s.members),
                    best_fitness=max(m.fitness for m in s.members),
                    stagnation=s.stagnation,
                    representative=s.representative,
                    members=list(s.members),
                )
                for s in species
            ],
            champion=champion,
            fitness_min=min(fitnesses),
            fitness_mean=sum(fitnesses) / len(fitnesses),
            fitness_max=max(fitnesses),
            best_fitness_ever=best_ever.fitness,
        )
        reports.append(report)
        if progress is not None:
            progress(report)

        if target is not None and champion.fitness >= target:
            break
        if generation == config.max_generations:
            break

        champion_species_id = next(
            s.id for s in species if champion in s.members)
        allocation = allocate_offspring(species, config.population_size,
                                        config.stagnation_limit,
                                        champion_species_id)
        population = reproduce(species, allocation, registry, config, rng,
                               task.input_height, task.input_width)
        species = [s for s in species if allocation.get(s.id, 0) > 0]

    archive = HistoryArchive(
        format_version=HISTORY_FORMAT_VERSION,
        config=config_snapshot(config),
        generations=reports,
    )
    return best_ever, archive


def config_snapshot(config):
    """Plain-dict snapshot of an EvolutionConfig for embedding in archives."""
    snap = asdict(config)
    snap["conv_seed"] = [asdict(s) if not isinstance(s, dict) else s
                         for s in config.conv_seed]
    return snap
