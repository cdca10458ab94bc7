#!/usr/bin/env python3
"""Full adversarial suite over a generated corpus; prints one line per case and a tally."""

import argparse
from collections import Counter

from zkpc.attacks import KINDS, SuiteConfig, make_baseline, run_suite
from zkpc.exprlang import exprcc_image, gen_program


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--mutations", type=int, default=20)
    ap.add_argument("--full", action="store_true")
    a = ap.parse_args()
    cfg = SuiteConfig(corpus_seeds=tuple(range(a.count)), compiler_mutations=a.mutations, full=a.full)
    image = exprcc_image()
    baselines = [make_baseline(image, gen_program(s, cfg.program_size), cfg.samples) for s in cfg.corpus_seeds]
    tally: Counter = Counter()
    for o in run_suite(baselines, cfg, KINDS):
        print(o.line())
        tally[(o.scenario.kind, o.scenario.control, o.passed)] += 1
    for (kind, control, passed), n in sorted(tally.items()):
        print(f"{kind:22s} {'control' if control else 'attack ':7s} {'pass' if passed else 'FAIL'} {n}")
    return 0 if all(p for (_, _, p) in tally) else 1


if __name__ == "__main__":
    raise SystemExit(main())
