"""Produce the golden history fixture consumed by the frontend test suite.

Runs a short deterministic XOR experiment and copies the resulting archive
into frontend/test/fixtures/.

Usage: python scripts/make_fixture.py [--out PATH]
"""

import argparse
import shutil
import tempfile
from pathlib import Path

from convneat.cli import main as cli_main

DEFAULT_OUT = Path(__file__).resolve().parent.parent / \
    "frontend" / "test" / "fixtures" / "history.golden.json"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=DEFAULT_OUT)
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        config = Path(tmp) / "config.json"
        config.write_text(
            '{"population_size": 30, "max_generations": 8, '
            '"fitness_target": 1e9}', encoding="utf-8")
        code = cli_main(["train", "xor", "--config", str(config),
                         "--out", tmp, "--seed", "12"])
        if code not in (0, 3):
            raise SystemExit(f"training failed with exit code {code}")
        args.out.parent.mkdir(parents=True, exist_ok=True)
        shutil.copy(Path(tmp) / "history.json", args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
