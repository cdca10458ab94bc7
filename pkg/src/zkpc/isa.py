"""Guest instruction set, image format and the deterministic virtual machine.

Word layout (bit 31 on the left)::

    R  | op:8 | rd:4  | rs1:4 | rs2:4 | 0:12 |
    I  | op:8 | rd:4  | rs1:4 | imm:16      |
    B  | op:8 | rs1:4 | rs2:4 | imm:16      |
    J  | op:8 | rd:4  | imm:20              |

Relative control flow (branches and JAL) targets ``pc + 1 + imm``.
Code lives outside data memory; data memory is 2^16 32-bit words.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .commit import (
    CHAIN_INIT,
    IMAGE_TAG,
    MEMORY_DEPTH,
    WORD_MASK,
    Digest,
    SparseMemory,
    chain_extend,
    sha256,
)

NUM_REGS = 8
MEMORY_WORDS = 1 << MEMORY_DEPTH
MAX_CODE_WORDS = 1 << 20
MAX_INPUT_BYTES = 32768
INPUT_BASE = 0x0100
DEFAULT_MAX_STEPS = 1 << 24
IMAGE_MAGIC = b"ZKPI"
IMAGE_VERSION = 1


class Op(enum.IntEnum):
    HALT = 0x00
    ADD = 0x01
    SUB = 0x02
    MUL = 0x03
    DIVU = 0x04
    REMU = 0x05
    AND = 0x06
    OR = 0x07
    XOR = 0x08
    SLL = 0x09
    SRL = 0x0A
    SRA = 0x0B
    SLT = 0x0C
    SLTU = 0x0D
    ADDI = 0x10
    LUI = 0x11
    LW = 0x12
    SW = 0x13
    BEQ = 0x18
    BNE = 0x19
    BLT = 0x1A
    BLTU = 0x1B
    JAL = 0x1C
    JALR = 0x1D
    WRITE = 0x20


ALU_OPS = frozenset(range(Op.ADD, Op.SLTU + 1))
BRANCH_OPS = frozenset({Op.BEQ, Op.BNE, Op.BLT, Op.BLTU})
I_OPS = frozenset({Op.ADDI, Op.LUI, Op.LW, Op.JALR})
B_OPS = BRANCH_OPS | {Op.SW}
UNARY_OPS = frozenset({Op.HALT, Op.WRITE})  # R-format, rs1 only


class IsaError(ValueError):
    """Malformed instruction fields or image data."""


class TrapReason(str, enum.Enum):
    ILLEGAL_INSTRUCTION = "IllegalInstruction"
    PC_OUT_OF_RANGE = "PcOutOfRange"
    DIVIDE_BY_ZERO = "DivideByZero"
    MEMORY_OUT_OF_RANGE = "MemoryOutOfRange"
    STEP_BUDGET_EXHAUSTED = "StepBudgetExhausted"


@dataclass(frozen=True)
class Instruction:
    op: Op
    rd: int = 0
    rs1: int = 0
    rs2: int = 0
    imm: int = 0

    def __str__(self) -> str:
        return disassemble_instr(self)


@dataclass(frozen=True)
class Illegal:
    """Decode result for a word that is not a canonical instruction."""

    word: int


def _imm_bits(op: Op) -> int:
    return 20 if op == Op.JAL else 16


def _check_reg(name: str, r: int) -> None:
    if not 0 <= r < NUM_REGS:
        raise IsaError(f"register {name}={r} out of range")


def encode(instr: Instruction) -> int:
    op = Op(instr.op)
    for name in ("rd", "rs1", "rs2"):
        _check_reg(name, getattr(instr, name))
    rd, rs1, rs2, imm = instr.rd, instr.rs1, instr.rs2, instr.imm
    if op in UNARY_OPS:
        if rd or rs2 or imm:
            raise IsaError(f"{op.name} only takes rs1")
        return (op << 24) | (rs1 << 16)
    if op in ALU_OPS:
        if imm:
            raise IsaError(f"{op.name} takes no immediate")
        return (op << 24) | (rd << 20) | (rs1 << 16) | (rs2 << 12)
    bits = _imm_bits(op)
    lo, hi = -(1 << (bits - 1)), (1 << (bits - 1)) - 1
    if not lo <= imm <= hi:
        raise IsaError(f"{op.name} immediate {imm} outside [{lo}, {hi}]")
    uimm = imm & ((1 << bits) - 1)
    if op in I_OPS:
        if rs2 or (op == Op.LUI and rs1):
            raise IsaError(f"{op.name}: unused register field set")
        return (op << 24) | (rd << 20) | (rs1 << 16) | uimm
    if op in B_OPS:
        if rd:
            raise IsaError(f"{op.name} has no rd")
        return (op << 24) | (rs1 << 20) | (rs2 << 16) | uimm
    # JAL
    if rs1 or rs2:
        raise IsaError("JAL only takes rd")
    return (op << 24) | (rd << 20) | uimm


def _sext(v: int, bits: int) -> int:
    return v - (1 << bits) if v >> (bits - 1) else v


def decode(word: int) -> Instruction | Illegal:
    """Decode a 32-bit word; non-canonical encodings yield ``Illegal``."""
    word &= WORD_MASK
    try:
        op = Op(word >> 24)
    except ValueError:
        return Illegal(word)
    a = (word >> 20) & 0xF
    b = (word >> 16) & 0xF
    if op in UNARY_OPS:
        instr = Instruction(op, rs1=b)
    elif op in ALU_OPS:
        instr = Instruction(op, rd=a, rs1=b, rs2=(word >> 12) & 0xF)
    elif op in I_OPS:
        instr = Instruction(op, rd=a, rs1=b, imm=_sext(word & 0xFFFF, 16))
    elif op in B_OPS:
        instr = Instruction(op, rs1=a, rs2=b, imm=_sext(word & 0xFFFF, 16))
    else:
        instr = Instruction(op, rd=a, imm=_sext(word & 0xFFFFF, 20))
    try:
        if encode(instr) != word:
            return Illegal(word)
    except IsaError:
        return Illegal(word)
    return instr


def disassemble_instr(i: Instruction) -> str:
    op = Op(i.op)
    n = op.name
    if op in UNARY_OPS:
        return f"{n} r{i.rs1}"
    if op in ALU_OPS:
        return f"{n} r{i.rd}, r{i.rs1}, r{i.rs2}"
    if op == Op.LUI:
        return f"{n} r{i.rd}, {i.imm}"
    if op in I_OPS:
        return f"{n} r{i.rd}, r{i.rs1}, {i.imm}"
    if op in B_OPS:
        return f"{n} r{i.rs1}, r{i.rs2}, {i.imm}"
    return f"{n} r{i.rd}, {i.imm}"


def disassemble(word: int) -> str:
    d = decode(word)
    if isinstance(d, Illegal):
        return f".word {d.word:#010x}"
    return disassemble_instr(d)


# ---------------------------------------------------------------------------
# images


@dataclass(frozen=True)
class GuestImage:
    code: tuple[int, ...]
    entry_pc: int = 0
    format_version: int = IMAGE_VERSION

    def __post_init__(self):
        object.__setattr__(self, "code", tuple(w & WORD_MASK for w in self.code))
        if not self.code:
            raise IsaError("image has no code")
        if len(self.code) > MAX_CODE_WORDS:
            raise IsaError(f"image has {len(self.code)} words, limit is {MAX_CODE_WORDS}")
        if not 0 <= self.entry_pc < len(self.code):
            raise IsaError(f"entry_pc {self.entry_pc} outside code of {len(self.code)} words")
        if not 0 <= self.format_version < 256:
            raise IsaError("format_version must fit in one byte")

    def with_word(self, index: int, word: int) -> "GuestImage":
        code = list(self.code)
        code[index] = word
        return GuestImage(tuple(code), self.entry_pc, self.format_version)

    def to_bytes(self) -> bytes:
        n = len(self.code)
        return (
            IMAGE_MAGIC
            + struct.pack("<HII", self.format_version, self.entry_pc, n)
            + struct.pack(f"<{n}I", *self.code)
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "GuestImage":
        if len(data) < 14 or data[:4] != IMAGE_MAGIC:
            raise IsaError("not a ZKPI image (bad magic)")
        version, entry, n = struct.unpack_from("<HII", data, 4)
        if version != IMAGE_VERSION:
            raise IsaError(f"unsupported image version {version}")
        if len(data) != 14 + 4 * n:
            raise IsaError(f"image length mismatch: header says {n} words")
        code = struct.unpack_from(f"<{n}I", data, 14)
        return cls(code, entry, version)


def compute_image_id(image: GuestImage) -> Digest:
    n = len(image.code)
    return sha256(
        IMAGE_TAG
        + bytes((image.format_version,))
        + struct.pack("<II", image.entry_pc, n)
        + struct.pack(f"<{n}I", *image.code)
    )


def init_memory(input_bytes: bytes) -> dict[int, int]:
    """Initial data memory: word 0 = input length, one input byte per word from 0x100."""
    if len(input_bytes) > MAX_INPUT_BYTES:
        raise IsaError(f"input of {len(input_bytes)} bytes exceeds {MAX_INPUT_BYTES}")
    mem = {INPUT_BASE + i: b for i, b in enumerate(input_bytes) if b}
    if input_bytes:
        mem[0] = len(input_bytes)
    return mem


# ---------------------------------------------------------------------------
# machine


class MemOp(NamedTuple):
    kind: int  # MEM_NONE / MEM_LOAD / MEM_STORE
    address: int = 0
    old_value: int = 0
    new_value: int = 0


MEM_NONE, MEM_LOAD, MEM_STORE = 0, 1, 2
NO_MEMOP = MemOp(MEM_NONE)


@dataclass
class MachineState:
    pc: int
    regs: list[int] = field(default_factory=lambda: [0] * NUM_REGS)
    memory: dict[int, int] = field(default_factory=dict)
    out_acc: Digest = CHAIN_INIT
    halted: bool = False
    exit_code: int = 0
    step_count: int = 0
    trap: TrapReason | None = None

    @classmethod
    def initial(cls, image: GuestImage, input_bytes: bytes) -> "MachineState":
        return cls(pc=image.entry_pc, memory=init_memory(input_bytes))

    def copy(self) -> "MachineState":
        return MachineState(
            self.pc, list(self.regs), dict(self.memory), self.out_acc,
            self.halted, self.exit_code, self.step_count, self.trap,
        )


@dataclass
class ExecutionResult:
    output_bytes: bytes
    exit_code: int
    step_count: int
    trap: TrapReason | None
    state: MachineState

    @property
    def ok(self) -> bool:
        return self.trap is None and self.exit_code == 0


class _Memory(dict):
    """Sparse word memory reading absent words as zero."""

    def __missing__(self, key):
        return 0


def predecode(code: Sequence[int]) -> list[tuple]:
    """Decode every code word once into ``(op, rd, rs1, rs2, imm)``; -1 marks illegal."""
    out = []
    for w in code:
        d = decode(w)
        if isinstance(d, Illegal):
            out.append((-1, 0, 0, 0, 0))
        else:
            out.append((int(d.op), d.rd, d.rs1, d.rs2, d.imm))
    return out


_SIGN = 0x80000000
_ROW = struct.Struct("<9I32s32sBI")


def execute(
    prog: list[tuple],
    state: MachineState,
    max_steps: int,
    *,
    rows: list | None = None,
    smem: SparseMemory | None = None,
    stores: list | None = None,
    memops: list | None = None,
    output: bytearray | None = None,
    journal: list | None = None,
) -> None:
    """Run ``state`` forward in place until halt, trap, or ``max_steps`` steps.

    Optional sinks:
      rows    packed trace rows (state before each step, then the final state)
      smem    sparse tree kept in sync with every store (needed by ``rows``)
      stores  ``(step_index, address, value)`` per store
      memops  one ``MemOp`` per step
      output  bytes emitted by WRITE
      journal undo records from ``smem`` (see ``SparseMemory.rewind``)
    """
    if state.halted or state.trap is not None:
        return
    mem = state.memory
    if not isinstance(mem, _Memory):
        mem = _Memory(mem)
        state.memory = mem
    regs = state.regs
    pc = state.pc
    acc = state.out_acc
    n = len(prog)
    step = state.step_count
    limit = step + max_steps
    tracing = rows is not None
    pack = _ROW.pack
    root = smem.root if smem is not None else None
    trap = None
    halted = False
    exit_code = state.exit_code
    MASK = WORD_MASK

    while True:
        if tracing:
            rows.append(pack(pc, *regs, root, acc, 0, 0))
        if step >= limit:
            trap = TrapReason.STEP_BUDGET_EXHAUSTED
            break
        if pc >= n:
            trap = TrapReason.PC_OUT_OF_RANGE
            break
        op, rd, rs1, rs2, imm = prog[pc]
        memop = NO_MEMOP
        npc = pc + 1
        if op == 0x10:  # ADDI
            if rd:
                regs[rd] = (regs[rs1] + imm) & MASK
        elif op == 0x12:  # LW
            a = (regs[rs1] + imm) & MASK
            if a >= MEMORY_WORDS:
                trap = TrapReason.MEMORY_OUT_OF_RANGE
                break
            v = mem[a]
            if rd:
                regs[rd] = v
            if memops is not None:
                memop = MemOp(MEM_LOAD, a, v, v)
        elif op == 0x13:  # SW
            a = (regs[rs1] + imm) & MASK
            if a >= MEMORY_WORDS:
                trap = TrapReason.MEMORY_OUT_OF_RANGE
                break
            v = regs[rs2]
            old = mem[a]
            mem[a] = v
            if smem is not None:
                smem.update(a, v, journal)
                root = smem.root
            if stores is not None:
                stores.append((step, a, v))
            if memops is not None:
                memop = MemOp(MEM_STORE, a, old, v)
        elif op >= 0x18 and op <= 0x1B:
            x, y = regs[rs1], regs[rs2]
            if op == 0x18:
                taken = x == y
            elif op == 0x19:
                taken = x != y
            elif op == 0x1A:
                taken = (x ^ _SIGN) < (y ^ _SIGN)
            else:
                taken = x < y
            if taken:
                npc = (pc + 1 + imm) & MASK
        elif 0 <= op <= 0x0D:
            if op == 0:  # HALT
                halted = True
                exit_code = regs[rs1]
                npc = pc
            else:
                x, y = regs[rs1], regs[rs2]
                if op == 0x01:
                    r = (x + y) & MASK
                elif op == 0x02:
                    r = (x - y) & MASK
                elif op == 0x03:
                    r = (x * y) & MASK
                elif op == 0x04 or op == 0x05:
                    if y == 0:
                        trap = TrapReason.DIVIDE_BY_ZERO
                        break
                    r = x // y if op == 0x04 else x % y
                elif op == 0x06:
                    r = x & y
                elif op == 0x07:
                    r = x | y
                elif op == 0x08:
                    r = x ^ y
                elif op == 0x09:
                    r = (x << (y & 31)) & MASK
                elif op == 0x0A:
                    r = x >> (y & 31)
                elif op == 0x0B:
                    r = ((x - (1 << 32) if x & _SIGN else x) >> (y & 31)) & MASK
                elif op == 0x0C:
                    r = 1 if (x ^ _SIGN) < (y ^ _SIGN) else 0
                else:
                    r = 1 if x < y else 0
                if rd:
                    regs[rd] = r
        elif op == 0x1C:  # JAL
            if rd:
                regs[rd] = (pc + 1) & MASK
            npc = (pc + 1 + imm) & MASK
        elif op == 0x1D:  # JALR
            t = (regs[rs1] + imm) & MASK
            if rd:
                regs[rd] = (pc + 1) & MASK
            npc = t
        elif op == 0x11:  # LUI
            if rd:
                regs[rd] = ((imm & 0xFFFF) << 16)
        elif op == 0x20:  # WRITE
            b = regs[rs1] & 0xFF
            acc = chain_extend(acc, b)
            if output is not None:
                output.append(b)
        else:
            trap = TrapReason.ILLEGAL_INSTRUCTION
            break
        if memops is not None:
            memops.append(memop)
        pc = npc
        step += 1
        if halted:
            if tracing:
                rows.append(pack(pc, *regs, root, acc, 1, exit_code))
            break

    if tracing and trap is not None:
        rows.pop()  # row for a state that never stepped cleanly
    state.pc = pc
    state.out_acc = acc
    state.step_count = step
    state.halted = halted
    state.exit_code = exit_code
    state.trap = trap


class _SingleFetch:
    """Lazy decoder so a single step does not predecode the whole image."""

    def __init__(self, code: Sequence[int]):
        self.code = code

    def __len__(self) -> int:
        return len(self.code)

    def __getitem__(self, pc: int) -> tuple:
        d = decode(self.code[pc])
        if isinstance(d, Illegal):
            return (-1, 0, 0, 0, 0)
        return (int(d.op), d.rd, d.rs1, d.rs2, d.imm)


def step(state: MachineState, image: GuestImage) -> tuple[MachineState, MemOp]:
    """Pure single step: returns the successor state and the step's memory access.

    A trap yields a halted successor with ``trap`` set. ``state.memory`` may be
    partial (only the words the step touches); absent words read as zero.
    """
    nxt = state.copy()
    if state.halted or state.trap is not None:
        return nxt, NO_MEMOP
    memops: list[MemOp] = []
    execute(_SingleFetch(image.code), nxt, 1, memops=memops)
    if nxt.trap is TrapReason.STEP_BUDGET_EXHAUSTED:
        nxt.trap = None  # exactly one step was requested
    if nxt.trap is not None:
        nxt.halted = True
    return nxt, (memops[0] if memops else NO_MEMOP)


def run(image: GuestImage, input_bytes: bytes, max_steps: int = DEFAULT_MAX_STEPS) -> ExecutionResult:
    if max_steps <= 0:
        raise IsaError("max_steps must be positive")
    state = MachineState.initial(image, input_bytes)
    out = bytearray()
    execute(predecode(image.code), state, max_steps, output=out)
    if not state.halted and state.trap is None:
        state.trap = TrapReason.STEP_BUDGET_EXHAUSTED
    return ExecutionResult(bytes(out), state.exit_code, state.step_count, state.trap, state)
