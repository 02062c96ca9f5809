#!/usr/bin/env python3
"""Run the full experiment battery and drop traces under an output directory.

Covers the 2x2 non-contraction instance, the 3x3 divergence demo at orders
0.2 and 0.4, random-ensemble fixed-point runs at orders 0.8/1.5/3/5, one
capacity run, and one market run per schedule kind.  Pass --small to shrink
the random ensembles for a quick smoke run.
"""

import argparse
import sys
from pathlib import Path

from augustin_lab.cli import main as cli_main


def run(argv, failures):
    print(f"\n$ augustin-lab {' '.join(argv)}")
    code = cli_main(argv)
    if code != 0:
        failures.append((argv, code))
    return code


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/suite", help="output root directory")
    parser.add_argument("--small", action="store_true", help="shrink ensembles for a quick run")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    root = Path(args.out)
    n, d = ("8", "16") if args.small else ("32", "128")
    seed = str(args.seed)
    failures = []

    run(["counterexample", "--out", str(root / "counterexample")], failures)
    run(
        [
            "divergence-demo",
            "--iters", "60",
            "--polyak-steps", "1000",
            "--out", str(root / "divergence_demo"),
        ],
        failures,
    )
    for alpha in ("0.8", "1.5", "3", "5"):
        run(
            [
                "augustin",
                "--n", n, "--d", d,
                "--alpha", alpha,
                "--iters", "60",
                "--seed", seed,
                "--out", str(root / f"augustin_alpha{alpha}"),
            ],
            failures,
        )
    run(
        [
            "classical",
            "--n", n, "--d", d,
            "--alpha", "1.5",
            "--iters", "60",
            "--seed", seed,
            "--out", str(root / "classical_alpha1.5"),
        ],
        failures,
    )
    run(
        [
            "capacity",
            "--n", "4", "--d", "2",
            "--alpha", "0.8",
            "--outer-steps", "50",
            "--seed", seed,
            "--out", str(root / "capacity"),
        ],
        failures,
    )
    for schedule in ("synchronous", "round-robin", "random"):
        run(
            [
                "fisher",
                "--buyers", "5", "--goods", "6",
                "--epochs", "20",
                "--schedule", schedule,
                "--seed", seed,
                "--out", str(root / f"fisher_{schedule}"),
            ],
            failures,
        )

    if failures:
        print(f"\n{len(failures)} task(s) failed:")
        for argv, code in failures:
            print(f"  exit {code}: {' '.join(argv)}")
        return 1
    print(f"\nall tasks complete; outputs under {root}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
