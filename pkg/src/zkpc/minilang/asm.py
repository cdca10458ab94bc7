"""Two-pass assembler for the guest ISA.

Text syntax, one item per line::

    .entry main          ; optional, defaults to "main" (or address 0 if absent)
    loop:                ; label
    ADDI r1, r1, -1
    BNE r1, r0, loop     ; branch/JAL targets may be labels or raw displacements

Operand order follows the disassembler: ``rd, rs1, rs2`` for ALU ops,
``rd, rs1, imm`` for ADDI/LW/JALR, ``rd, imm`` for LUI and JAL,
``rs1, rs2, imm`` for SW and branches, ``rs1`` for HALT/WRITE.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

from ..isa import (
    ALU_OPS,
    B_OPS,
    BRANCH_OPS,
    GuestImage,
    Instruction,
    IsaError,
    Op,
    UNARY_OPS,
    encode,
)


class AsmError(ValueError):
    pass


@dataclass(frozen=True)
class Label:
    name: str


@dataclass(frozen=True)
class AsmInstr:
    op: Op
    rd: int = 0
    rs1: int = 0
    rs2: int = 0
    imm: Union[int, str] = 0  # str = label reference (pc-relative for branches/JAL)
    line: int = 0


Item = Union[Label, AsmInstr]


@dataclass
class AsmUnit:
    items: list[Item] = field(default_factory=list)
    entry: str = "main"

    def label(self, name: str) -> None:
        self.items.append(Label(name))

    def emit(self, op: Op, rd: int = 0, rs1: int = 0, rs2: int = 0, imm: Union[int, str] = 0) -> None:
        self.items.append(AsmInstr(op, rd, rs1, rs2, imm))

    def text(self) -> str:
        lines = [f".entry {self.entry}"]
        for it in self.items:
            if isinstance(it, Label):
                lines.append(f"{it.name}:")
            else:
                lines.append("    " + format_instr(it))
        return "\n".join(lines) + "\n"


def format_instr(i: AsmInstr) -> str:
    n = i.op.name
    if i.op in UNARY_OPS:
        return f"{n} r{i.rs1}"
    if i.op in ALU_OPS:
        return f"{n} r{i.rd}, r{i.rs1}, r{i.rs2}"
    if i.op in (Op.LUI, Op.JAL):
        return f"{n} r{i.rd}, {i.imm}"
    if i.op in B_OPS:
        return f"{n} r{i.rs1}, r{i.rs2}, {i.imm}"
    return f"{n} r{i.rd}, r{i.rs1}, {i.imm}"


_REG = re.compile(r"r([0-7])$")
_LABEL = re.compile(r"[A-Za-z_.$][\w.$]*$")


def _reg(tok: str, line: int) -> int:
    m = _REG.match(tok)
    if not m:
        raise AsmError(f"line {line}: expected register, got {tok!r}")
    return int(m.group(1))


def _imm(tok: str, line: int, allow_label: bool) -> Union[int, str]:
    try:
        return int(tok, 0)
    except ValueError:
        if allow_label and _LABEL.match(tok):
            return tok
        raise AsmError(f"line {line}: bad immediate {tok!r}") from None


def parse_asm(text: str) -> AsmUnit:
    unit = AsmUnit()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = re.split(r"[;#]", raw, maxsplit=1)[0].strip()
        if not line:
            continue
        if line.startswith(".entry"):
            unit.entry = line.split()[1]
            continue
        if line.endswith(":"):
            name = line[:-1].strip()
            if not _LABEL.match(name):
                raise AsmError(f"line {lineno}: bad label {name!r}")
            unit.items.append(Label(name))
            continue
        parts = line.split(None, 1)
        try:
            op = Op[parts[0].upper()]
        except KeyError:
            raise AsmError(f"line {lineno}: unknown mnemonic {parts[0]!r}") from None
        args = [a.strip() for a in parts[1].split(",")] if len(parts) > 1 else []

        def need(n):
            if len(args) != n:
                raise AsmError(f"line {lineno}: {op.name} takes {n} operands, got {len(args)}")

        if op in UNARY_OPS:
            need(1)
            ins = AsmInstr(op, rs1=_reg(args[0], lineno), line=lineno)
        elif op in ALU_OPS:
            need(3)
            ins = AsmInstr(op, *(_reg(a, lineno) for a in args), line=lineno)
        elif op in (Op.LUI, Op.JAL):
            need(2)
            ins = AsmInstr(op, rd=_reg(args[0], lineno), imm=_imm(args[1], lineno, op == Op.JAL), line=lineno)
        elif op in B_OPS:
            need(3)
            ins = AsmInstr(op, rs1=_reg(args[0], lineno), rs2=_reg(args[1], lineno),
                           imm=_imm(args[2], lineno, op in BRANCH_OPS), line=lineno)
        else:
            need(3)
            ins = AsmInstr(op, rd=_reg(args[0], lineno), rs1=_reg(args[1], lineno),
                           imm=_imm(args[2], lineno, False), line=lineno)
        unit.items.append(ins)
    return unit


def layout(unit: AsmUnit) -> dict[str, int]:
    labels: dict[str, int] = {}
    pc = 0
    for it in unit.items:
        if isinstance(it, Label):
            if it.name in labels:
                raise AsmError(f"duplicate label {it.name!r}")
            labels[it.name] = pc
        else:
            pc += 1
    return labels


def assemble(unit: AsmUnit) -> GuestImage:
    labels = layout(unit)
    code = []
    for it in unit.items:
        if isinstance(it, Label):
            continue
        pc = len(code)
        imm = it.imm
        if isinstance(imm, str):
            if imm not in labels:
                raise AsmError(f"undefined label {imm!r}")
            if it.op not in BRANCH_OPS and it.op != Op.JAL:
                raise AsmError(f"{it.op.name} cannot take a label operand")
            imm = labels[imm] - (pc + 1)
        try:
            code.append(encode(Instruction(it.op, it.rd, it.rs1, it.rs2, imm)))
        except IsaError as e:
            raise AsmError(f"{format_instr(it)} at pc {pc}: {e}") from None
    if not code:
        raise AsmError("empty unit")
    if unit.entry in labels:
        entry = labels[unit.entry]
    elif unit.entry == "main" and "main" not in labels:
        entry = 0
    else:
        raise AsmError(f"entry label {unit.entry!r} is not defined")
    if entry >= len(code):
        raise AsmError("entry label points past the end of the code")
    return GuestImage(tuple(code), entry)


def assemble_text(text: str) -> GuestImage:
    return assemble(parse_asm(text))
