"""Canonical JSON serialization of genomes and run histories.

Documents are canonical: stable key order, arrays sorted (nodes by id,
connections by innovation, stages by index), floats emitted as shortest
round-tripping decimals. Serializing the same value twice yields identical
bytes. File writes are atomic (temp file + rename).
"""

from __future__ import annotations

import json
import os
from importlib import resources
from pathlib import Path

import jsonschema

from .genome import ConnectionGene, ConvStageGene, Genome, NodeGene
from .history import (
    DEFAULT_MEMBER_CAP,
    HISTORY_FORMAT_VERSION,
    GenerationReport,
    HistoryArchive,
    SpeciesSnapshot,
)

GENOME_FORMAT_VERSION = 1


class ParseError(ValueError):
    """Document violates the published schema; message names the field path."""


class UnsupportedVersionError(ValueError):
    """Document declares a format_version newer than this build supports."""


def _load_schema(name):
    text = resources.files("convneat.schemas").joinpath(name).read_text("utf-8")
    return json.loads(text)


GENOME_SCHEMA = _load_schema("genome.schema.json")
HISTORY_SCHEMA = _load_schema("history.schema.json")


def _validate(document, schema):
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(document), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = "$" + "".join(
            f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)
        raise ParseError(f"{path}: {err.message}")


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      allow_nan=False) + "\n"


def atomic_write_text(path, text):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# genome documents

def genome_to_obj(genome):
    return {
        "conv_stages": [
            {
                "stage_index": s.stage_index,
                "kernel": [[float(v) for v in row] for row in s.kernel],
                "stride": s.stride,
                "pooler": s.pooler,
                "pool_window": s.pool_window,
                "activation": s.activation,
            }
            for s in sorted(genome.conv_stages, key=lambda s: s.stage_index)
        ],
        "nodes": [
            {"id": n.id, "kind": n.kind, "activation": n.activation}
            for n in sorted(genome.nodes, key=lambda n: n.id)
        ],
        "connections": [
            {
                "innovation": c.innovation,
                "src": c.src,
                "dst": c.dst,
                "weight": float(c.weight),
                "enabled": c.enabled,
            }
            for c in sorted(genome.connections, key=lambda c: c.innovation)
        ],
    }


def obj_to_genome(obj):
    return Genome(
        conv_stages=[
            ConvStageGene(
                stage_index=s["stage_index"],
                kernel=[[float(v) for v in row] for row in s["kernel"]],
                stride=s["stride"],
                pooler=s["pooler"],
                pool_window=s["pool_window"],
                activation=s["activation"],
            )
            for s in obj["conv_stages"]
        ],
        nodes=[
            NodeGene(id=n["id"], kind=n["kind"], activation=n["activation"])
            for n in obj["nodes"]
        ],
        connections=sorted(
            (
                ConnectionGene(
                    innovation=c["innovation"], src=c["src"], dst=c["dst"],
                    weight=float(c["weight"]), enabled=c["enabled"])
                for c in obj["connections"]
            ),
            key=lambda c: c.innovation,
        ),
    )


def genome_document(genome):
    obj = genome_to_obj(genome)
    obj["format_version"] = GENOME_FORMAT_VERSION
    return obj


def save_genome(genome, path):
    document = genome_document(genome)
    _validate(document, GENOME_SCHEMA)
    atomic_write_text(path, canonical_json(document))


def load_genome(path):
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    version = document.get("format_version")
    if isinstance(version, int) and version > GENOME_FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"{path}: format_version {version} > supported {GENOME_FORMAT_VERSION}")
    _validate(document, GENOME_SCHEMA)
    return obj_to_genome(document)


# ---------------------------------------------------------------------------
# history documents

def history_to_document(archive, member_cap=DEFAULT_MEMBER_CAP):
    population = sum(len(s.members) for s in archive.generations[0].species) \
        if archive.generations else 0
    entries = population * len(archive.generations)
    include_members = entries <= member_cap

    generations = []
    for report in archive.generations:
        species = []
        for snap in report.species:
            entry = {
                "id": snap.id,
                "size": snap.size,
                "best_fitness": float(snap.best_fitness),
                "stagnation": snap.stagnation,
                "representative": genome_to_obj(snap.representative),
            }
            if include_members and snap.members:
                entry["members"] = [genome_to_obj(g) for g in snap.members]
            species.append(entry)
        generations.append({
            "index": report.generation_index,
            "species": species,
            "champion": genome_to_obj(report.champion),
            "fitness": {
                "min": float(report.fitness_min),
                "mean": float(report.fitness_mean),
                "max": float(report.fitness_max),
            },
            "best_fitness_ever": float(report.best_fitness_ever),
        })
    return {
        "format_version": archive.format_version,
        "config": archive.config,
        "truncated": archive.truncated or not include_members,
        "generations": generations,
    }


def document_to_history(document):
    generations = []
    for entry in document["generations"]:
        species = []
        for s in entry["species"]:
            species.append(SpeciesSnapshot(
                id=s["id"],
                size=s["size"],
                best_fitness=s["best_fitness"],
                stagnation=s["stagnation"],
                representative=obj_to_genome(s["representative"]),
                members=[obj_to_genome(g) for g in s.get("members", [])],
            ))
        generations.append(GenerationReport(
            generation_index=entry["index"],
            species=species,
            champion=obj_to_genome(entry["champion"]),
            fitness_min=entry["fitness"]["min"],
            fitness_mean=entry["fitness"]["mean"],
            fitness_max=entry["fitness"]["max"],
            best_fitness_ever=entry["best_fitness_ever"],
        ))
    return HistoryArchive(
        format_version=document["format_version"],
        config=document["config"],
        generations=generations,
        truncated=document["truncated"],
    )


def export_history(archive, path, member_cap=DEFAULT_MEMBER_CAP):
    document = history_to_document(archive, member_cap)
    _validate(document, HISTORY_SCHEMA)
    try:
        atomic_write_text(path, canonical_json(document))
    except OSError as exc:
        raise OSError(f"cannot write history to {path}: {exc}") from exc


def load_history(path):
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    version = document.get("format_version")
    if isinstance(version, int) and version > HISTORY_FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"{path}: format_version {version} > supported {HISTORY_FORMAT_VERSION}")
    _validate(document, HISTORY_SCHEMA)
    return document_to_history(document)
