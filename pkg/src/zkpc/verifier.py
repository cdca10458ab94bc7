"""Receipt verification: sampled (``verify``) and re-execution (``verify_full``).

Checks run in a fixed order and the first failure decides the report:
source digest, image binding, transcript, boundary rows, then every opening
(trace paths first, then the step transition).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .commit import (
    CHAIN_INIT,
    MEMORY_DEPTH,
    Digest,
    chain,
    derive_samples,
    sha256,
    sparse_memory_root,
    verify_path,
)
from .isa import (
    GuestImage,
    Illegal,
    IsaError,
    MachineState,
    Op,
    compute_image_id,
    decode,
    init_memory,
    step,
)
from .receipt import Receipt, StepOpening, TraceRow, boundary_steps


class FailureClass(str, enum.Enum):
    NONE = "none"
    SOURCE_DIGEST_MISMATCH = "SourceDigestMismatch"
    IMAGE_BINDING_FAILURE = "ImageBindingFailure"
    BOUNDARY_VIOLATION = "BoundaryViolation"
    TRANSCRIPT_MISMATCH = "TranscriptMismatch"
    PATH_FAILURE = "PathFailure"
    TRANSITION_VIOLATION = "TransitionViolation"
    OUTPUT_CHAIN_MISMATCH = "OutputChainMismatch"
    MALFORMED_RECEIPT = "MalformedReceipt"


@dataclass(frozen=True)
class VerifyReport:
    accepted: bool
    failure_class: FailureClass = FailureClass.NONE
    detail: str = ""

    def __post_init__(self):
        assert self.accepted == (self.failure_class is FailureClass.NONE)

    @classmethod
    def ok(cls, detail: str = "") -> "VerifyReport":
        return cls(True, FailureClass.NONE, detail)

    @classmethod
    def reject(cls, fc: FailureClass, detail: str) -> "VerifyReport":
        return cls(False, fc, detail)

    def line(self) -> str:
        if self.accepted:
            return "ACCEPT"
        return f"REJECT {self.failure_class.value}: {self.detail}"


class _Reject(Exception):
    def __init__(self, fc: FailureClass, detail: str):
        self.fc = fc
        self.detail = detail


def tree_depth(trace_len: int) -> int:
    d = 0
    while (1 << d) < trace_len:
        d += 1
    return d


def _paths_ok(o: StepOpening, trace_root: Digest, depth: int) -> bool:
    if o.path_i.depth != depth or o.path_i1.depth != depth:
        return False
    return verify_path(trace_root, o.step_index, o.row_i.pack(), o.path_i) and verify_path(
        trace_root, o.step_index + 1, o.row_i1.pack(), o.path_i1
    )


def _semantics_ok(o: StepOpening, image: GuestImage) -> tuple[bool, str]:
    """Does stepping ``row_i`` under ``image`` yield exactly ``row_i1``?"""
    row = o.row_i
    if row.halted:
        return False, "step from a halted row"
    if row.regs[0] != 0 or o.row_i1.regs[0] != 0:
        return False, "register 0 is nonzero"
    if row.pc >= len(image.code):
        return False, f"pc {row.pc} outside image"
    instr = decode(image.code[row.pc])
    if isinstance(instr, Illegal):
        return False, f"illegal instruction at pc {row.pc}"
    want_kind = {Op.LW: 1, Op.SW: 2}.get(instr.op, 0)
    if o.mem_kind != want_kind:
        return False, f"memory flag {o.mem_kind} does not match {instr.op.name}"
    memory: dict[int, int] = {}
    w = o.mem_witness
    if want_kind:
        if w is None or len(w.siblings) != MEMORY_DEPTH:
            return False, "missing memory witness"
        addr = (row.regs[instr.rs1] + instr.imm) & 0xFFFFFFFF
        if w.address != addr:
            return False, f"witness address {w.address:#x} != effective address {addr:#x}"
        if not w.verify(row.mem_root):
            return False, "memory witness does not match row memory root"
        memory[addr] = w.old_value
    elif w is not None:
        return False, "unexpected memory witness"
    state = MachineState(
        pc=row.pc, regs=list(row.regs), memory=memory, out_acc=row.out_acc,
        halted=False, exit_code=row.exit_code,
    )
    nxt, memop = step(state, image)
    if nxt.trap is not None:
        return False, f"step traps: {nxt.trap.value}"
    new_root = w.root_with(memop.new_value) if want_kind == 2 else row.mem_root
    expect = TraceRow(nxt.pc, tuple(nxt.regs), new_root, nxt.out_acc, int(nxt.halted), nxt.exit_code)
    if expect != o.row_i1:
        diff = [f for f in ("pc", "regs", "mem_root", "out_acc", "halted", "exit_code")
                if getattr(expect, f) != getattr(o.row_i1, f)]
        return False, f"step {o.step_index} successor mismatch in {', '.join(diff)}"
    return True, ""


def check_transition(opening: StepOpening, image: GuestImage, trace_root: Digest, trace_len: int | None = None) -> bool:
    depth = opening.path_i.depth if trace_len is None else tree_depth(trace_len)
    if not _paths_ok(opening, trace_root, depth):
        return False
    return _semantics_ok(opening, image)[0]


def _check_source_and_image(receipt: Receipt, expected_image_id: Digest, source: bytes, image: GuestImage | None) -> None:
    c = receipt.claim
    if sha256(source) != c.input_digest:
        raise _Reject(FailureClass.SOURCE_DIGEST_MISMATCH, "SHA-256 of source differs from the committed input digest")
    if c.image_id != expected_image_id:
        raise _Reject(FailureClass.IMAGE_BINDING_FAILURE,
                      f"receipt image {c.image_id.hex()[:16]}... is not the agreed {expected_image_id.hex()[:16]}...")
    if image is not None and compute_image_id(image) != expected_image_id:
        raise _Reject(FailureClass.IMAGE_BINDING_FAILURE, "supplied image does not hash to the agreed ImageID")


def _verify(receipt: Receipt, expected_image_id: Digest, source: bytes, image: GuestImage) -> None:
    c = receipt.claim
    _check_source_and_image(receipt, expected_image_id, source, image)

    # transcript
    bsteps = boundary_steps(c.trace_len) if c.trace_len >= 2 else []
    if c.trace_len < 2 or receipt.sample_count < 1 or len(receipt.openings) != receipt.sample_count + len(bsteps):
        raise _Reject(FailureClass.MALFORMED_RECEIPT, "opening count does not match sample count")
    expected = derive_samples(c, receipt.sample_count) + bsteps
    got = [o.step_index for o in receipt.openings]
    if got != expected:
        raise _Reject(FailureClass.TRANSCRIPT_MISMATCH, "opening indices differ from the Fiat-Shamir samples")

    # boundary rows
    if c.exit_code != 0:
        raise _Reject(FailureClass.BOUNDARY_VIOLATION, f"claimed exit code {c.exit_code}")
    first, last = receipt.boundary[0], receipt.boundary[-1]
    r0 = first.row_i
    try:
        init_root = sparse_memory_root(init_memory(source))
    except IsaError as e:
        raise _Reject(FailureClass.BOUNDARY_VIOLATION, str(e))
    if r0.pc != image.entry_pc:
        raise _Reject(FailureClass.BOUNDARY_VIOLATION, "row 0 pc is not the image entry point")
    if any(r0.regs) or r0.halted or r0.exit_code:
        raise _Reject(FailureClass.BOUNDARY_VIOLATION, "row 0 registers/flags are not zero")
    if r0.out_acc != CHAIN_INIT:
        raise _Reject(FailureClass.BOUNDARY_VIOLATION, "row 0 output accumulator is not the chain seed")
    if r0.mem_root != init_root:
        raise _Reject(FailureClass.BOUNDARY_VIOLATION, "row 0 memory root does not commit to the source")
    fin = last.row_i1
    if fin.halted != 1 or last.row_i.halted:
        raise _Reject(FailureClass.BOUNDARY_VIOLATION, "trace does not end in its first halted row")
    if fin.exit_code != c.exit_code:
        raise _Reject(FailureClass.BOUNDARY_VIOLATION, "final exit code differs from the claim")
    if fin.out_acc != chain(c.output_bytes):
        raise _Reject(FailureClass.OUTPUT_CHAIN_MISMATCH, "claimed output does not match the committed output chain")

    # openings
    depth = tree_depth(c.trace_len)
    for o in receipt.openings:
        if not _paths_ok(o, c.trace_root, depth):
            raise _Reject(FailureClass.PATH_FAILURE, f"step {o.step_index}: row does not open against trace root")
    for o in receipt.openings:
        ok, why = _semantics_ok(o, image)
        if not ok:
            raise _Reject(FailureClass.TRANSITION_VIOLATION, why)


def verify(receipt: Receipt, expected_image_id: Digest, source: bytes, image: GuestImage) -> VerifyReport:
    """Sampled verification against the agreed image and the claimed source."""
    try:
        _verify(receipt, expected_image_id, source, image)
    except _Reject as r:
        return VerifyReport.reject(r.fc, r.detail)
    return VerifyReport.ok(f"{len(receipt.openings)} openings checked")


def verify_full(receipt: Receipt, expected_image_id: Digest, source: bytes, image: GuestImage) -> VerifyReport:
    """Oracle mode: re-execute the guest and compare the whole claim."""
    from .prover import ProverError, execute_traced

    c = receipt.claim
    try:
        _check_source_and_image(receipt, expected_image_id, source, image)
        try:
            trace = execute_traced(image, source)
        except (ProverError, IsaError) as e:
            raise _Reject(FailureClass.BOUNDARY_VIOLATION, f"re-execution failed: {e}")
        if trace.output_bytes != c.output_bytes:
            raise _Reject(FailureClass.OUTPUT_CHAIN_MISMATCH, "claimed output differs from re-executed output")
        if trace.exit_code != c.exit_code:
            raise _Reject(FailureClass.BOUNDARY_VIOLATION, "claimed exit code differs from re-execution")
        if trace.trace_len != c.trace_len or trace.root != c.trace_root:
            raise _Reject(FailureClass.TRANSITION_VIOLATION, "trace commitment differs from re-execution")
    except _Reject as r:
        return VerifyReport.reject(r.fc, r.detail)
    return VerifyReport.ok("re-execution matches")
