"""Evolve XOR solvers over a batch of seeds and summarize convergence.

Usage: python scripts/run_xor.py [--seeds N] [--generations N] [--out DIR]
"""

import argparse
import time
from pathlib import Path

from convneat.evolution import EvolutionConfig, evolve
from convneat.persistence import export_history, save_genome
from convneat.tasks import xor_task


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=20)
    parser.add_argument("--generations", type=int, default=150)
    parser.add_argument("--out", type=Path, default=None,
                        help="save champion/history per seed into this directory")
    args = parser.parse_args()

    task = xor_task()
    wins = 0
    start = time.monotonic()
    for seed in range(args.seeds):
        config = EvolutionConfig(max_generations=args.generations, seed=seed)
        champion, archive = evolve(task, config)
        solved = champion.fitness >= task.fitness_target
        wins += solved
        print(f"seed={seed} fitness={champion.fitness:.4f} "
              f"generations={len(archive.generations)} "
              f"{'solved' if solved else 'unsolved'}")
        if args.out:
            run_dir = args.out / f"seed_{seed}"
            run_dir.mkdir(parents=True, exist_ok=True)
            save_genome(champion, run_dir / "champion.json")
            export_history(archive, run_dir / "history.json")
    elapsed = time.monotonic() - start
    print(f"solved {wins}/{args.seeds} seeds in {elapsed:.1f}s")


if __name__ == "__main__":
    main()
