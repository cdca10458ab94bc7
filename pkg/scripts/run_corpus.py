#!/usr/bin/env python3
"""Prove and verify a generated corpus; check guest output against the reference compiler."""

import argparse
import time

from zkpc.exprlang import exprcc_image, gen_program, reference_compile
from zkpc.isa import compute_image_id
from zkpc.prover import prove
from zkpc.verifier import verify, verify_full


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--seed-base", type=int, default=0)
    ap.add_argument("--size", type=int, default=20)
    ap.add_argument("--samples", type=int, default=64)
    ap.add_argument("--full", action="store_true", help="also re-execute each receipt")
    a = ap.parse_args()

    image = exprcc_image()
    iid = compute_image_id(image)
    failures = 0
    t0 = time.perf_counter()
    for seed in range(a.seed_base, a.seed_base + a.count):
        src = gen_program(seed, a.size)
        r = prove(image, src, a.samples)
        ok = verify(r, iid, src, image).accepted and r.claim.output_bytes == reference_compile(src)
        if a.full:
            ok &= verify_full(r, iid, src, image).accepted
        failures += not ok
        print(f"seed={seed} trace_len={r.claim.trace_len} {'ok' if ok else 'FAIL'}", flush=True)
    print(f"{a.count - failures}/{a.count} ok in {time.perf_counter() - t0:.1f}s")
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
