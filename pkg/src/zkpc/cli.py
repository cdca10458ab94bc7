"""Command-line front end.

Exit codes: 0 ok/accept, 1 rejected, 2 usage, 3 guest trap, 4 I/O.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .attacks import KINDS, REPLAY, SuiteConfig, make_baseline, run_suite
from .bench import BenchConfig, BenchFailure, run_bench, sweep_sizes, write_csv
from .exprlang import (
    StackVMTrap, exprcc_image, exprcc_source, gen_program, is_error_output, stackvm_run,
)
from .isa import GuestImage, IsaError, compute_image_id
from .minilang import AsmError, MiniLangError, compile_minilang
from .prover import DEFAULT_MAX_STEPS, DEFAULT_SAMPLES, ProverError, prove
from .receipt import MalformedReceipt, deserialize_receipt, serialize_receipt
from .soundness import SoundnessConfig, run_soundness
from .verifier import FailureClass, VerifyReport, verify, verify_full

EXIT_OK, EXIT_REJECT, EXIT_USAGE, EXIT_TRAP, EXIT_IO = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, msg: str, code: int):
        super().__init__(msg)
        self.code = code


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise CliError(f"cannot read {path}: {e.strerror}", EXIT_IO) from e


def _write(path: str | Path, data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as e:
        raise CliError(f"cannot write {path}: {e.strerror}", EXIT_IO) from e


def _load_image(path: str | None) -> GuestImage:
    if path is None:
        return exprcc_image()
    try:
        return GuestImage.from_bytes(_read(path))
    except IsaError as e:
        raise CliError(f"{path}: {e}", EXIT_IO) from e


def _positive(s: str) -> int:
    v = int(s, 0)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


# ---------------------------------------------------------------------------


def cmd_handshake(a: argparse.Namespace) -> int:
    print(compute_image_id(_load_image(a.image)).hex())
    return EXIT_OK


def cmd_prove(a: argparse.Namespace) -> int:
    image = _load_image(a.image)
    source = _read(a.source)
    try:
        receipt = prove(image, source, a.samples, a.max_steps)
    except ProverError as e:
        print(f"error: {e}", file=sys.stderr)
        if e.exit_code is not None and e.exit_code != 0:
            # the guest ran to completion and reported a compile error
            sys.stderr.write(_guest_output(image, source, a.max_steps).decode("ascii", "replace"))
        return EXIT_TRAP
    data = serialize_receipt(receipt)
    out = Path(a.out)
    asm_path = out.with_suffix(".s") if out.suffix != ".s" else out.with_name(out.name + ".s")
    _write(out, data)
    _write(asm_path, receipt.claim.output_bytes)
    print(f"trace_len={receipt.claim.trace_len} receipt_bytes={len(data)} receipt={out} output={asm_path}")
    return EXIT_OK


def _guest_output(image: GuestImage, source: bytes, max_steps: int) -> bytes:
    from .isa import run

    return run(image, source, max_steps).output_bytes


def cmd_verify(a: argparse.Namespace) -> int:
    try:
        expected = bytes.fromhex(a.image_id)
    except ValueError:
        raise CliError("--image-id must be hex", EXIT_USAGE) from None
    if len(expected) != 32:
        raise CliError("--image-id must be 32 bytes of hex", EXIT_USAGE)
    data = _read(a.receipt)
    source = _read(a.source)
    image = _load_image(a.image)
    try:
        receipt = deserialize_receipt(data)
    except MalformedReceipt as e:
        report = VerifyReport.reject(FailureClass.MALFORMED_RECEIPT, str(e))
    else:
        report = (verify_full if a.full else verify)(receipt, expected, source, image)
        if report.accepted and a.expect_output is not None:
            if _read(a.expect_output) != receipt.claim.output_bytes:
                report = VerifyReport.reject(FailureClass.OUTPUT_CHAIN_MISMATCH,
                                             "supplied output file differs from the receipt's output")
    print(report.line())
    return EXIT_OK if report.accepted else EXIT_REJECT


def cmd_run(a: argparse.Namespace) -> int:
    try:
        sys.stdout.write(stackvm_run(_read(a.asm)).decode("ascii"))
    except StackVMTrap as e:
        print(f"trap: {e}", file=sys.stderr)
        return EXIT_TRAP
    return EXIT_OK


def cmd_gen(a: argparse.Namespace) -> int:
    sys.stdout.write(gen_program(a.seed, a.size).decode("ascii"))
    return EXIT_OK


def cmd_compile(a: argparse.Namespace) -> int:
    """Run the guest compiler without proving (handy for quick checks)."""
    from .isa import run

    res = run(_load_image(a.image), _read(a.source), a.max_steps)
    sys.stdout.write(res.output_bytes.decode("ascii", "replace"))
    if res.trap is not None:
        print(f"trap: {res.trap.value}", file=sys.stderr)
        return EXIT_TRAP
    return EXIT_OK if res.exit_code == 0 and not is_error_output(res.output_bytes) else EXIT_TRAP


def cmd_build_guest(a: argparse.Namespace) -> int:
    src = _read(a.source) if a.source else exprcc_source()
    try:
        image = compile_minilang(src)
    except (MiniLangError, AsmError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    _write(a.out, image.to_bytes())
    print(compute_image_id(image).hex())
    return EXIT_OK


def cmd_attack(a: argparse.Namespace) -> int:
    kinds = KINDS if a.scenario == "all" else tuple(k for k in KINDS if k.lower().startswith(a.scenario))
    image = _load_image(a.image)
    cfg = SuiteConfig(corpus_seeds=tuple(range(a.seed_base, a.seed_base + a.count)),
                      compiler_mutations=a.mutations, samples=a.samples, full=a.full)
    # replay needs at least two programs, the others only one
    seeds = cfg.corpus_seeds if len(cfg.corpus_seeds) > 1 or REPLAY not in kinds else cfg.corpus_seeds * 2
    baselines = [make_baseline(image, gen_program(s, cfg.program_size), cfg.samples) for s in seeds]
    ok = True
    for outcome in run_suite(baselines, cfg, kinds):
        print(outcome.line())
        ok &= outcome.passed
    return EXIT_OK if ok else EXIT_REJECT


def cmd_bench(a: argparse.Namespace) -> int:
    cfg = BenchConfig(count=a.count, seed_base=a.seed_base, size=a.size, samples=a.samples,
                      sizes=sweep_sizes(a.count) if a.sweep else ())
    try:
        with open(a.out, "w", encoding="ascii") as f:
            write_csv(run_bench(cfg, _load_image(a.image)), f)
    except OSError as e:
        raise CliError(f"cannot write {a.out}: {e.strerror}", EXIT_IO) from e
    except BenchFailure as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_REJECT
    return EXIT_OK


def cmd_soundness(a: argparse.Namespace) -> int:
    res = run_soundness(SoundnessConfig(trials=a.trials, samples=a.samples, seed=a.seed, full=not a.no_full))
    print(res.summary())
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zkpc", description="Proof-carrying compilation of ExprLang.")
    sub = p.add_subparsers(dest="cmd", required=True)
    img_help = "ZKPI image file (default: the bundled exprcc build)"

    s = sub.add_parser("handshake", help="print the ImageID of a compiler image")
    s.add_argument("--image", help=img_help)
    s.set_defaults(fn=cmd_handshake)

    s = sub.add_parser("prove", help="compile under proof and write a receipt plus the .s output")
    s.add_argument("--image", help=img_help)
    s.add_argument("--source", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--samples", type=_positive, default=DEFAULT_SAMPLES)
    s.add_argument("--max-steps", type=_positive, default=DEFAULT_MAX_STEPS)
    s.set_defaults(fn=cmd_prove)

    s = sub.add_parser("verify", help="check a receipt against a source file and an agreed ImageID")
    s.add_argument("--receipt", required=True)
    s.add_argument("--source", required=True)
    s.add_argument("--image-id", required=True)
    s.add_argument("--image", help=img_help)
    s.add_argument("--full", action="store_true", help="re-execute the guest instead of sampling")
    s.add_argument("--expect-output", help="also require this .s file to equal the receipt's output")
    s.set_defaults(fn=cmd_verify)

    s = sub.add_parser("run", help="execute StackAsm")
    s.add_argument("--asm", required=True)
    s.set_defaults(fn=cmd_run)

    s = sub.add_parser("gen", help="print a generated ExprLang program")
    s.add_argument("--seed", type=lambda v: int(v, 0), default=0)
    s.add_argument("--size", type=_positive, default=20)
    s.set_defaults(fn=cmd_gen)

    s = sub.add_parser("compile", help="run the guest compiler without proving")
    s.add_argument("--image", help=img_help)
    s.add_argument("--source", required=True)
    s.add_argument("--max-steps", type=_positive, default=DEFAULT_MAX_STEPS)
    s.set_defaults(fn=cmd_compile)

    s = sub.add_parser("build-guest", help="compile MiniLang (default: bundled exprcc.mini) to an image")
    s.add_argument("--source")
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_build_guest)

    s = sub.add_parser("attack", help="run tampering scenarios against honest receipts")
    s.add_argument("--scenario", choices=["all", "compiler", "source", "output", "replay"], default="all")
    s.add_argument("--image", help=img_help)
    s.add_argument("--count", type=_positive, default=20, help="corpus size")
    s.add_argument("--seed-base", type=int, default=0)
    s.add_argument("--mutations", type=_positive, default=20, help="compiler mutations")
    s.add_argument("--samples", type=_positive, default=DEFAULT_SAMPLES)
    s.add_argument("--full", action="store_true", help="also re-execute on every case")
    s.set_defaults(fn=cmd_attack)

    s = sub.add_parser("bench", help="write timing/size CSV over generated programs")
    s.add_argument("--count", type=_positive, default=10)
    s.add_argument("--seed-base", type=int, default=0)
    s.add_argument("--size", type=_positive, default=20)
    s.add_argument("--sweep", action="store_true", help="vary program size 5, 10, 15, ...")
    s.add_argument("--samples", type=_positive, default=DEFAULT_SAMPLES)
    s.add_argument("--image", help=img_help)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_bench)

    s = sub.add_parser("soundness", help="Monte-Carlo forged-row detection experiment")
    s.add_argument("--trials", type=_positive, default=1000)
    s.add_argument("--samples", type=_positive, default=64)
    s.add_argument("--seed", type=int, default=2024)
    s.add_argument("--no-full", action="store_true", help="skip re-execution per trial")
    s.set_defaults(fn=cmd_soundness)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
