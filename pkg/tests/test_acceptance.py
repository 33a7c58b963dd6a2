"""End-to-end acceptance checks. Each test prints one PASS/FAIL summary line
so a full run reads as a checklist. Run with `pytest tests/test_acceptance.py -s`
to see the lines as they complete."""

import json
import random
import time

import jsonschema
import numpy as np

from convneat.cli import main
from convneat.evolution import (
    EvolutionConfig,
    Species,
    allocate_offspring,
    share_fitness,
    speciate,
)
from convneat.genome import (
    CompatibilityCoefficients,
    InnovationRegistry,
    compatibility_distance,
    crossover,
    mutate_add_connection,
    mutate_add_node,
    mutate_conv,
    mutate_weights,
    new_minimal_genome,
    validate_genome,
)
from convneat.persistence import (
    GENOME_SCHEMA,
    HISTORY_SCHEMA,
    export_history,
    genome_document,
    history_to_document,
    load_genome,
    load_history,
    save_genome,
)
from convneat.phenotype import convolve, pool
from convneat.tasks import bars_conv_seed, bars_task, xor_task
from convneat.evolution import evolve

from conftest import naive_convolve, naive_pool, random_genome


def report(name, passed, detail):
    line = f"ACCEPTANCE {name}: {detail} -> {'PASS' if passed else 'FAIL'}"
    print(line, flush=True)
    assert passed, line


class TestEvolutionBenchmarks:
    def test_xor_convergence(self):
        seeds = range(20)
        start = time.monotonic()
        successes = 0
        for seed in seeds:
            config = EvolutionConfig(max_generations=150, seed=seed)
            champion, _ = evolve(xor_task(), config)
            if champion.fitness >= 15.0:
                successes += 1
        elapsed = time.monotonic() - start
        report("xor", successes >= 16 and elapsed <= 300,
               f"{successes}/20 seeds reached fitness 15.0 within "
               f"150 generations in {elapsed:.1f}s (need >= 16, <= 300s)")

    def test_bars_convergence(self):
        start = time.monotonic()
        successes = 0
        for seed in range(10):
            config = EvolutionConfig(max_generations=200, seed=seed,
                                     conv_seed=bars_conv_seed(16))
            task = bars_task(16, 40, seed=seed)
            champion, _ = evolve(task, config)
            if champion.fitness >= 0.95:
                successes += 1
        elapsed = time.monotonic() - start
        report("bars", successes >= 7 and elapsed <= 600,
               f"{successes}/10 seeds reached accuracy 0.95 within "
               f"200 generations in {elapsed:.1f}s (need >= 7, <= 600s)")


class TestOracles:
    def test_convolution_oracle(self):
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(1_000):
            h, w = rng.integers(1, 9, 2)
            kh = int(rng.integers(1, min(h, 3) + 1))
            kw = int(rng.integers(1, min(w, 3) + 1))
            stride = int(rng.integers(1, 3))
            img = rng.uniform(-1, 1, (h, w))
            kernel = rng.uniform(-1, 1, (kh, kw))
            diff = np.abs(convolve(img, kernel, stride) -
                          naive_convolve(img, kernel, stride)).max()
            worst = max(worst, float(diff))
        report("convolution-oracle", worst <= 1e-9,
               f"1000 random cases, max deviation {worst:.2e} (need <= 1e-9)")

    def test_pooling_oracle(self):
        rng = np.random.default_rng(2025)
        worst = 0.0
        for _ in range(1_000):
            h, w = rng.integers(2, 9, 2)
            window = int(rng.integers(2, min(h, w) + 1))
            arr = rng.uniform(-1, 1, (h, w))
            for kind in ("max", "average"):
                diff = np.abs(pool(arr, kind, window) -
                              naive_pool(arr, kind, window)).max()
                worst = max(worst, float(diff))
        report("pooling-oracle", worst <= 1e-9,
               f"1000 random cases x 2 poolers, max deviation {worst:.2e}")


class TestGenomeAlgebra:
    def test_distance_laws_and_fuzz(self):
        rng = random.Random(99)
        registry = InnovationRegistry()
        coeffs = CompatibilityCoefficients()
        genomes = [
            new_minimal_genome(3, 2, [], registry, rng) for _ in range(8)
        ]
        violations = 0
        ops = 0
        while ops < 10_000:
            i = rng.randrange(len(genomes))
            g = genomes[i]
            op = rng.randrange(5)
            if op == 0:
                g = mutate_weights(g, 0.9, 0.5, 0.1, rng)
            elif op == 1:
                g = mutate_add_connection(g, registry, rng)
            elif op == 2:
                g = mutate_add_node(g, registry, rng)
            elif op == 3:
                other = genomes[rng.randrange(len(genomes))]
                g.fitness, other.fitness = 1.0, 0.5
                g = crossover(g, other, rng)
            else:
                g = mutate_conv(g, 0.05, 0.1, 0.1, rng)
            try:
                validate_genome(g)
            except Exception:
                violations += 1
            genomes[i] = g
            ops += 1
            if ops % 500 == 0:
                a, b = rng.sample(genomes, 2)
                if compatibility_distance(a, a, coeffs) != 0.0:
                    violations += 1
                if compatibility_distance(a, b, coeffs) != \
                        compatibility_distance(b, a, coeffs):
                    violations += 1
                a.fitness, b.fitness = 1.0, 0.5
                child = crossover(a, b, rng)
                child_innov = {c.innovation for c in child.connections}
                parents = {c.innovation for c in a.connections} | \
                    {c.innovation for c in b.connections}
                if not child_innov <= parents:
                    violations += 1
        report("genome-algebra", violations == 0,
               f"10000 operator applications, {violations} invariant "
               "violations (need 0)")


class TestDeterminism:
    def test_cmd_train_byte_identical(self, tmp_path, capsys):
        config = tmp_path / "config.json"
        config.write_text(json.dumps(
            {"population_size": 40, "max_generations": 10}), encoding="utf-8")
        for name in ("a", "b"):
            code = main(["train", "xor", "--config", str(config),
                         "--out", str(tmp_path / name), "--seed", "42"])
            assert code in (0, 3)
        capsys.readouterr()
        identical = all(
            (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
            for f in ("champion.json", "history.json"))
        report("determinism", identical,
               "two cmd_train runs with seed 42 byte-identical "
               "champion and history")


class TestSpeciationProperties:
    def test_partition_and_allocation(self):
        failures = 0
        for seed in range(1_000):
            rng = random.Random(seed)
            registry = InnovationRegistry()
            population = []
            for _ in range(rng.randint(2, 12)):
                g = random_genome(rng.randrange(10_000), num_inputs=2,
                                  num_outputs=1, steps=rng.randint(0, 5))
                g.fitness = rng.uniform(0.1, 10.0)
                population.append(g)
            coeffs = CompatibilityCoefficients(
                threshold=rng.choice([0.5, 1.5, 3.0, 6.0]))
            species = speciate(population, [], coeffs)

            assigned = [m for s in species for m in s.members]
            if sorted(map(id, assigned)) != sorted(map(id, population)):
                failures += 1
                continue
            share_fitness(species)
            pop_size = rng.randint(5, 60)
            alloc = allocate_offspring(species, pop_size)
            if sum(alloc.values()) != pop_size:
                failures += 1
                continue
            # exact scale invariance for a power-of-two factor
            for s in species:
                for m in s.members:
                    m.fitness *= 4.0
            share_fitness(species)
            if allocate_offspring(species, pop_size) != alloc:
                failures += 1
        report("speciation-allocation", failures == 0,
               f"1000 random populations, {failures} property failures "
               "(partition, allocation sum, scale invariance)")


class TestSerialization:
    def test_round_trip_and_schema(self, tmp_path):
        failures = 0
        validator = jsonschema.Draft202012Validator(GENOME_SCHEMA)
        path = tmp_path / "genome.json"
        for seed in range(1_000):
            g = random_genome(seed, num_inputs=3, num_outputs=2,
                              steps=seed % 10)
            save_genome(g, path)
            doc = json.loads(path.read_text(encoding="utf-8"))
            if list(validator.iter_errors(doc)):
                failures += 1
                continue
            if genome_document(load_genome(path)) != genome_document(g):
                failures += 1

        config = EvolutionConfig(population_size=20, max_generations=2,
                                 fitness_target=1e9, seed=0)
        _, archive = evolve(xor_task(), config)
        hist_path = tmp_path / "history.json"
        export_history(archive, hist_path)
        hist_doc = json.loads(hist_path.read_text(encoding="utf-8"))
        schema_ok = not list(
            jsonschema.Draft202012Validator(HISTORY_SCHEMA).iter_errors(hist_doc))
        round_trip_ok = history_to_document(load_history(hist_path)) == hist_doc
        report("serialization",
               failures == 0 and schema_ok and round_trip_ok,
               f"1000 genome round trips ({failures} failures), archive "
               f"schema valid={schema_ok}, archive round trip={round_trip_ok}")
