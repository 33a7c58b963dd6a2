"""Neuroevolution engine: NEAT-style topology search with evolvable
convolutional preprocessing stages."""

from .genome import (
    ACTIVATION_KINDS,
    CompatibilityCoefficients,
    ConfigurationError,
    ConnectionGene,
    ConvStageGene,
    Genome,
    InnovationRegistry,
    NodeGene,
    compatibility_distance,
    crossover,
    mutate_add_connection,
    mutate_add_node,
    mutate_conv,
    mutate_weights,
    new_minimal_genome,
    validate_genome,
)
from .phenotype import ImageMatrix, Phenotype, activate, compile_genome, convolve, pool
from .evolution import EvolutionConfig, Species, evolve
from .history import GenerationReport, HistoryArchive, SpeciesSnapshot
from .persistence import export_history, load_genome, load_history, save_genome
from .tasks import FitnessTask, bars_task, image_classification_task, load_image, xor_task

__version__ = "0.1.0"
