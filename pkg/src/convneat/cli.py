"""Command-line entry point: train runs, single-image classification,
genome/history inspection and export.

Exit codes: 0 success, 2 usage/config error, 3 fitness target not reached,
4 runtime evaluation failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

from .evolution import EvaluationError, EvolutionConfig, evolve
from .genome import CompatibilityCoefficients, ConfigurationError, ConvStageGene, pipeline_output_size
from .persistence import (
    ParseError,
    UnsupportedVersionError,
    export_history,
    load_genome,
    load_history,
    save_genome,
)
from .phenotype import compile_genome
from .tasks import (
    DecodeError,
    ManifestError,
    bars_conv_seed,
    bars_task,
    image_classification_task,
    load_image,
    parse_manifest,
    xor_task,
)

log = logging.getLogger("convneat")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_TARGET_NOT_REACHED = 3
EXIT_EVALUATION = 4

DISCLAIMER = ("note=advisory result only; it can support but never replace a "
              "professional assessment")


class ConfigError(ValueError):
    pass


def _build_dataclass(cls, data, path="config"):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{path}: unknown key(s): {', '.join(sorted(unknown))}")
    return data


def load_config(path, overrides=None):
    """Parse a JSON config mirroring EvolutionConfig field names 1:1.

    Unknown keys are errors so hyperparameter typos fail loudly.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}")
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return config_from_dict(data, overrides)


def config_from_dict(data, overrides=None):
    data = dict(data)
    _build_dataclass(EvolutionConfig, data)
    if "coeffs" in data:
        coeffs = data["coeffs"]
        if not isinstance(coeffs, dict):
            raise ConfigError("config.coeffs: must be an object")
        _build_dataclass(CompatibilityCoefficients, coeffs, "config.coeffs")
        data["coeffs"] = CompatibilityCoefficients(**coeffs)
    if "conv_seed" in data:
        stages = data["conv_seed"]
        if not isinstance(stages, list):
            raise ConfigError("config.conv_seed: must be an array of stages")
        built = []
        for i, stage in enumerate(stages):
            if not isinstance(stage, dict):
                raise ConfigError(f"config.conv_seed[{i}]: must be an object")
            _build_dataclass(ConvStageGene, stage, f"config.conv_seed[{i}]")
            built.append(ConvStageGene(**stage))
        data["conv_seed"] = built
    if overrides:
        data.update(overrides)
    try:
        return EvolutionConfig(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config: {exc}")


def build_task(selector, config, image_width, image_height):
    if selector == "xor":
        return xor_task()
    if selector == "bars":
        return bars_task(size=image_width, seed=config.seed)
    if selector.startswith("images:"):
        manifest_path = selector.split(":", 1)[1]
        manifest = parse_manifest(manifest_path)
        return image_classification_task(manifest, image_width, image_height)
    raise ConfigError(
        f"unknown task {selector!r}; expected xor, bars, or images:<manifest>")


# ---------------------------------------------------------------------------
# commands

def cmd_train(args):
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.config:
        config = load_config(args.config, overrides)
    else:
        config = config_from_dict({}, overrides)

    task = build_task(args.task, config, args.image_width, args.image_height)
    if args.task == "bars" and not config.conv_seed:
        # without a conv front end the raw-pixel bars problem is not
        # linearly separable; seed an edge-detecting stage by default
        config = dataclasses.replace(config, conv_seed=bars_conv_seed(args.image_width))

    quiet = os.environ.get("NEUROEVO_LOG", "info") == "quiet"

    def progress(report):
        if quiet:
            return
        print(f"generation={report.generation_index} "
              f"species={len(report.species)} "
              f"best={report.fitness_max:.6g} "
              f"mean={report.fitness_mean:.6g}")
        sys.stdout.flush()

    champion, archive = evolve(task, config, progress=progress)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_genome(champion, out_dir / "champion.json")
    export_history(archive, out_dir / "history.json")

    target = config.fitness_target
    if target is None:
        target = task.fitness_target
    if target is not None and champion.fitness is not None and champion.fitness >= target:
        return EXIT_OK
    return EXIT_TARGET_NOT_REACHED


def cmd_classify(args):
    genome = load_genome(args.genome)
    image = load_image(args.image)
    n_inputs = len(genome.node_ids("input"))
    try:
        flat = pipeline_output_size(genome.conv_stages, image.height, image.width)
    except ConfigurationError:
        flat = None
    if flat != n_inputs:
        print(f"error: image {image.height}x{image.width} yields "
              f"{flat if flat is not None else 'no'} pipeline values but the "
              f"genome expects {n_inputs} inputs", file=sys.stderr)
        return EXIT_USAGE
    phenotype = compile_genome(genome, image.width, image.height)
    outputs = phenotype.forward(image)
    print(f"probability={outputs[0]!r}")
    print(DISCLAIMER)
    return EXIT_OK


def cmd_export(args):
    archive = load_history(args.history)
    export_history(archive, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="convneat",
        description="Neuroevolution engine with convolutional preprocessing")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="run an evolution experiment")
    train.add_argument("task", help="xor | bars | images:<manifest>")
    train.add_argument("--config", help="JSON config file (EvolutionConfig fields)")
    train.add_argument("--out", required=True, help="output directory")
    train.add_argument("--seed", type=int, help="override config seed")
    train.add_argument("--workers", type=int,
                       default=None, help="parallel fitness evaluation workers")
    train.add_argument("--image-width", type=int, default=16)
    train.add_argument("--image-height", type=int, default=16)
    train.set_defaults(func=cmd_train)

    classify = sub.add_parser("classify", help="score one image with a genome")
    classify.add_argument("genome", help="genome document path")
    classify.add_argument("image", help="png/bmp image path")
    classify.set_defaults(func=cmd_classify)

    export = sub.add_parser("export", help="re-emit a validated history document")
    export.add_argument("history", help="history archive path")
    export.add_argument("out", help="output document path")
    export.set_defaults(func=cmd_export)
    return parser


def main(argv=None):
    level = {"quiet": logging.WARNING, "info": logging.INFO,
             "debug": logging.DEBUG}.get(os.environ.get("NEUROEVO_LOG", "info"),
                                         logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(message)s")

    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ConfigurationError, ParseError,
            UnsupportedVersionError, ManifestError, DecodeError,
            FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EvaluationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EVALUATION


if __name__ == "__main__":
    sys.exit(main())
