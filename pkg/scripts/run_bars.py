"""Evolve bar-orientation classifiers over a batch of seeds.

The task distinguishes horizontal from vertical bars in noisy grayscale
images; each genome starts with an edge-detecting convolution stage.

Usage: python scripts/run_bars.py [--seeds N] [--generations N] [--size N]
"""

import argparse
import time

from convneat.evolution import EvolutionConfig, evolve
from convneat.tasks import bars_conv_seed, bars_task


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--generations", type=int, default=200)
    parser.add_argument("--size", type=int, default=16)
    args = parser.parse_args()

    wins = 0
    start = time.monotonic()
    for seed in range(args.seeds):
        task = bars_task(args.size, 40, seed=seed)
        config = EvolutionConfig(max_generations=args.generations, seed=seed,
                                 conv_seed=bars_conv_seed(args.size))
        champion, archive = evolve(task, config)
        solved = champion.fitness >= task.fitness_target
        wins += solved
        print(f"seed={seed} accuracy={champion.fitness:.3f} "
              f"generations={len(archive.generations)} "
              f"{'solved' if solved else 'unsolved'}")
    elapsed = time.monotonic() - start
    print(f"solved {wins}/{args.seeds} seeds in {elapsed:.1f}s")


if __name__ == "__main__":
    main()
