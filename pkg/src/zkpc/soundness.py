"""Monte-Carlo estimate of how often sampled verification catches a forged row.

The forger takes an honest trace, overwrites one register in one interior
row and re-commits the tree, so every path still opens. The register chosen
is one the row's own instruction overwrites without reading, which means the
only transition that no longer holds is the one *into* the forged row. Sampled
verification can only notice if that transition is among the k Fiat-Shamir
samples, so the detection rate should be ``1 - (1 - 1/(T-1))**k`` where T is
the row count. Re-execution (``verify_full``) should catch every forgery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .exprlang.gen import SplitMix64
from .isa import ALU_OPS, GuestImage, Illegal, Op, compute_image_id, decode
from .minilang.asm import assemble_text
from .prover import CommittedTrace, claim_for, execute_traced, receipt_from_trace
from .receipt import TraceRow, boundary_steps
from .verifier import verify, verify_full

# 1 + 6*170 + 2 + 1 = 1024 executed instructions, so 1025 rows
FIXED_PROGRAM = """
    .entry start
start:
    ADDI r1, r0, 170
loop:
    ADDI r2, r0, 7
    ADD r3, r2, r1
    SW r1, r3, 512
    LW r4, r1, 512
    ADDI r1, r1, -1
    BNE r1, r0, loop
    ADDI r5, r0, 79
    WRITE r5
    HALT r0
"""
FIXED_STEPS = 1024


def fixed_image() -> GuestImage:
    return assemble_text(FIXED_PROGRAM)


def expected_detection(transitions: int, k: int) -> float:
    return 1.0 - (1.0 - 1.0 / transitions) ** k


def dead_register(word: int) -> int | None:
    """Register the instruction writes without reading, if any."""
    d = decode(word)
    if isinstance(d, Illegal) or d.rd == 0:
        return None
    if d.op in ALU_OPS:
        reads = {d.rs1, d.rs2}
    elif d.op in (Op.ADDI, Op.LW, Op.JALR):
        reads = {d.rs1}
    elif d.op in (Op.LUI, Op.JAL):
        reads = set()
    else:
        return None
    return None if d.rd in reads else d.rd


def forgeable_rows(trace: CommittedTrace) -> list[int]:
    """Rows j whose forgery breaks only transition j-1, which must not be a boundary step."""
    code = trace.image.code
    fixed = set(boundary_steps(trace.trace_len))
    out = []
    for j in range(1, trace.trace_len - 1):
        if j - 1 in fixed:
            continue
        pc = trace.row(j).pc
        if pc < len(code) and dead_register(code[pc]) is not None:
            out.append(j)
    return out


def forge(trace: CommittedTrace, j: int, xor: int) -> CommittedTrace:
    row = trace.row(j)
    r = dead_register(trace.image.code[row.pc])
    regs = list(row.regs)
    regs[r] ^= xor
    return trace.with_row(j, TraceRow(row.pc, tuple(regs), row.mem_root, row.out_acc, row.halted, row.exit_code))


@dataclass
class SoundnessConfig:
    trials: int = 1000
    samples: int = 64
    seed: int = 2024
    full: bool = True  # also run re-execution on every forgery


@dataclass
class SoundnessResult:
    trials: int
    transitions: int
    samples: int
    detected: int
    full_detected: int | None
    transition_failures: int  # detections attributed to the forged transition

    @property
    def rate(self) -> float:
        return self.detected / self.trials

    @property
    def expected(self) -> float:
        return expected_detection(self.transitions, self.samples)

    @property
    def stderr(self) -> float:
        p = self.expected
        return math.sqrt(p * (1 - p) / self.trials)

    @property
    def z(self) -> float:
        return (self.rate - self.expected) / self.stderr

    def summary(self) -> str:
        s = (f"trials={self.trials} T-1={self.transitions} k={self.samples} "
             f"detected={self.detected} rate={self.rate:.4f} expected={self.expected:.4f} "
             f"se={self.stderr:.4f} z={self.z:+.2f}")
        if self.full_detected is not None:
            s += f" full_detected={self.full_detected}/{self.trials}"
        return s


def run_soundness(cfg: SoundnessConfig, image: GuestImage | None = None, source: bytes = b"") -> SoundnessResult:
    image = image or fixed_image()
    image_id = compute_image_id(image)
    honest = execute_traced(image, source)
    rows = forgeable_rows(honest)
    if not rows:
        raise ValueError("program has no forgeable rows")
    rng = SplitMix64(cfg.seed)
    detected = full_detected = via_transition = 0
    for _ in range(cfg.trials):
        j = rows[rng.below(len(rows))]
        xor = 1 + rng.below(0xFFFFFFFF)
        forged = forge(honest, j, xor)
        receipt = receipt_from_trace(forged, cfg.samples, claim_for(forged, image_id))
        rep = verify(receipt, image_id, source, image)
        if not rep.accepted:
            detected += 1
            if rep.failure_class.value == "TransitionViolation":
                via_transition += 1
        if cfg.full and not verify_full(receipt, image_id, source, image).accepted:
            full_detected += 1
    return SoundnessResult(
        cfg.trials, honest.trace_len - 1, cfg.samples, detected,
        full_detected if cfg.full else None, via_transition,
    )
