#!/usr/bin/env python3
"""Monte-Carlo detection rate of sampled verification against single forged rows, swept over k."""

import argparse

from zkpc.soundness import SoundnessConfig, run_soundness


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--k", type=int, nargs="+", default=[16, 64, 256])
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--no-full", action="store_true")
    a = ap.parse_args()
    for k in a.k:
        res = run_soundness(SoundnessConfig(trials=a.trials, samples=k, seed=a.seed, full=not a.no_full))
        print(res.summary(), flush=True)


if __name__ == "__main__":
    main()
