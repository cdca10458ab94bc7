"""Traced execution, trace commitment and receipt assembly."""

from __future__ import annotations

import bisect
import hashlib
from dataclasses import dataclass, replace
from typing import Iterable

from .commit import (
    LEAF_TAG,
    MemWitness,
    MerkleTree,
    SparseMemory,
    derive_samples,
    sha256,
)
from .isa import (
    DEFAULT_MAX_STEPS,
    GuestImage,
    Illegal,
    MachineState,
    Op,
    TrapReason,
    compute_image_id,
    decode,
    execute,
    init_memory,
    predecode,
)
from .receipt import (
    Receipt,
    ReceiptClaim,
    StepOpening,
    TraceRow,
    boundary_steps,
)

DEFAULT_SAMPLES = 64

_sha = hashlib.sha256


class ProverError(RuntimeError):
    """The guest did not halt cleanly, so no receipt can be issued."""

    def __init__(self, message: str, trap: TrapReason | None = None, exit_code: int | None = None):
        super().__init__(message)
        self.trap = trap
        self.exit_code = exit_code


@dataclass
class CommittedTrace:
    """All trace rows plus the Merkle tree committing to them.

    ``stores`` is the ``(step, address, value)`` write log; together with
    ``init_mem`` it regenerates the memory witness for any step.
    """

    image: GuestImage
    input_bytes: bytes
    rows: list[bytes]
    tree: MerkleTree
    output_bytes: bytes
    exit_code: int
    init_mem: dict[int, int]
    stores: list[tuple[int, int, int]]
    final_mem: SparseMemory | None = None
    journal: list | None = None

    @property
    def trace_len(self) -> int:
        return len(self.rows)

    @property
    def root(self) -> bytes:
        return self.tree.root

    @property
    def step_count(self) -> int:
        return len(self.rows) - 1

    def row(self, i: int) -> TraceRow:
        return TraceRow.unpack(self.rows[i])

    def with_row(self, i: int, row: TraceRow | bytes) -> "CommittedTrace":
        """Copy with row ``i`` replaced and the tree re-committed (used to build forgeries)."""
        data = row if isinstance(row, bytes) else row.pack()
        rows = list(self.rows)
        rows[i] = data
        tree = self.tree.replace_leaf(i, _sha(LEAF_TAG + data).digest())
        return replace(self, rows=rows, tree=tree)

    def memory_access(self, i: int) -> tuple[int, int]:
        """``(kind, address)`` of the memory access performed by step ``i``."""
        row = self.row(i)
        d = decode(self.image.code[row.pc]) if row.pc < len(self.image.code) else None
        if d is None or isinstance(d, Illegal) or d.op not in (Op.LW, Op.SW):
            return 0, 0
        addr = (row.regs[d.rs1] + d.imm) & 0xFFFFFFFF
        return (1 if d.op == Op.LW else 2), addr

    def mem_witnesses(self, steps: Iterable[int]) -> dict[int, MemWitness]:
        """Replay the write log once, capturing witnesses for the requested memory steps."""
        wanted = sorted({s for s in steps if self.memory_access(s)[0]})
        out: dict[int, MemWitness] = {}
        if not wanted:
            return out
        store_steps = [s for s, _, _ in self.stores]
        if self.final_mem is not None and self.journal is not None:
            # walk backwards from the final tree, undoing writes
            smem = self.final_mem.copy()
            applied = len(self.journal)
            for s in reversed(wanted):
                upto = bisect.bisect_left(store_steps, s)
                while applied > upto:
                    applied -= 1
                    smem.rewind(self.journal[applied])
                out[s] = smem.witness(self.memory_access(s)[1])
            return out
        smem = SparseMemory(self.init_mem)
        applied = 0
        for s in wanted:
            upto = bisect.bisect_left(store_steps, s)
            for _, a, v in self.stores[applied:upto]:
                smem.update(a, v)
            applied = upto
            out[s] = smem.witness(self.memory_access(s)[1])
        return out

    def open_steps(self, steps: list[int]) -> tuple[StepOpening, ...]:
        wits = self.mem_witnesses(steps)
        out = []
        for s in steps:
            kind, _ = self.memory_access(s)
            out.append(
                StepOpening(
                    s,
                    self.row(s), self.tree.open(s),
                    self.row(s + 1), self.tree.open(s + 1),
                    kind, wits.get(s),
                )
            )
        return tuple(out)


def execute_traced(image: GuestImage, input_bytes: bytes, max_steps: int = DEFAULT_MAX_STEPS) -> CommittedTrace:
    init_mem = init_memory(input_bytes)
    state = MachineState.initial(image, input_bytes)
    rows: list[bytes] = []
    stores: list[tuple[int, int, int]] = []
    output = bytearray()
    smem = SparseMemory(init_mem)
    journal: list = []
    execute(predecode(image.code), state, max_steps, rows=rows, smem=smem, stores=stores,
            output=output, journal=journal)
    if state.trap is not None:
        raise ProverError(f"guest trapped: {state.trap.value} at pc={state.pc}", trap=state.trap)
    if not state.halted:
        raise ProverError("guest did not halt", trap=TrapReason.STEP_BUDGET_EXHAUSTED)
    if state.exit_code != 0:
        raise ProverError(f"guest exited with code {state.exit_code}", exit_code=state.exit_code)
    sha = _sha
    tree = MerkleTree([sha(LEAF_TAG + r).digest() for r in rows])
    return CommittedTrace(
        image, bytes(input_bytes), rows, tree, bytes(output), state.exit_code, init_mem, stores, smem, journal
    )


def claim_for(trace: CommittedTrace, image_id: bytes | None = None) -> ReceiptClaim:
    return ReceiptClaim(
        image_id=image_id if image_id is not None else compute_image_id(trace.image),
        input_digest=sha256(trace.input_bytes),
        output_bytes=trace.output_bytes,
        exit_code=trace.exit_code,
        trace_len=trace.trace_len,
        trace_root=trace.root,
    )


def receipt_from_trace(trace: CommittedTrace, k: int = DEFAULT_SAMPLES, claim: ReceiptClaim | None = None) -> Receipt:
    """Assemble a receipt; samples are derived only once the trace root is fixed."""
    if k < 1:
        raise ValueError("sample count must be at least 1")
    claim = claim or claim_for(trace)
    steps = derive_samples(claim, k) + boundary_steps(claim.trace_len)
    return Receipt(claim, k, trace.open_steps(steps))


def prove(image: GuestImage, source: bytes, k: int = DEFAULT_SAMPLES, max_steps: int = DEFAULT_MAX_STEPS) -> Receipt:
    if k < 1:
        raise ValueError("sample count must be at least 1")
    return receipt_from_trace(execute_traced(image, source, max_steps), k)
