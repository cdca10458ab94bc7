#!/usr/bin/env python3
"""Write bench CSVs for a fixed-size corpus and a size sweep, then print the summary statistics."""

import argparse
import statistics
from pathlib import Path

from zkpc.bench import BenchConfig, least_squares, run_bench, sweep_sizes, write_csv, read_csv


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--sweep", type=int, default=30)
    ap.add_argument("--outdir", default="results")
    a = ap.parse_args()
    out = Path(a.outdir)
    out.mkdir(parents=True, exist_ok=True)

    fixed = out / "bench.csv"
    with fixed.open("w") as f:
        write_csv(run_bench(BenchConfig(count=a.count)), f)
    recs = read_csv(fixed.read_text())
    med = {k: statistics.median(getattr(r, k) for r in recs)
           for k in ("standard_compile_seconds", "prove_seconds", "verify_seconds")}
    print(f"fixed size: n={len(recs)} " + " ".join(f"median_{k}={v:.4f}" for k, v in med.items()))
    print(f"prove/compile={med['prove_seconds'] / med['standard_compile_seconds']:.0f}x "
          f"prove/verify={med['prove_seconds'] / med['verify_seconds']:.1f}x")

    sweep = out / "sweep.csv"
    with sweep.open("w") as f:
        write_csv(run_bench(BenchConfig(count=a.sweep, seed_base=1000, sizes=sweep_sizes(a.sweep))), f)
    recs = read_csv(sweep.read_text())
    for ylab in ("receipt_size_bytes", "prove_seconds", "verify_seconds"):
        slope, icept, r = least_squares([x.trace_len for x in recs], [getattr(x, ylab) for x in recs])
        print(f"sweep {ylab} ~ trace_len: slope={slope:.4g} intercept={icept:.4g} r={r:.4f}")


if __name__ == "__main__":
    main()
