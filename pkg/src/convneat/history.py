"""Run-history records shared between the evolution loop and persistence."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

HISTORY_FORMAT_VERSION = 1

# Full member genomes are embedded only while population * generations stays
# under this cap; beyond it archives keep representatives and champions only.
DEFAULT_MEMBER_CAP = 50_000


@dataclass
class SpeciesSnapshot:
    id: int
    size: int
    best_fitness: float
    stagnation: int
    representative: object  # Genome
    members: list = field(default_factory=list)  # Genomes; may be dropped on export


@dataclass
class GenerationReport:
    generation_index: int
    species: list
    champion: object  # Genome, best of this generation
    fitness_min: float
    fitness_mean: float
    fitness_max: float
    best_fitness_ever: float = 0.0  # running maximum up to this generation


@dataclass
class HistoryArchive:
    format_version: int
    config: dict
    generations: list
    truncated: bool = False
