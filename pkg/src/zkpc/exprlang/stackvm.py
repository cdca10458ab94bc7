"""Interpreter for StackAsm, the compiled form of ExprLang."""

from __future__ import annotations

import re

MASK = 0xFFFFFFFF

_LINE = re.compile(rb"(PUSH|LOAD|STORE) (0|[1-9][0-9]*)|ADD|SUB|MUL|DIV|NEG|PRINT|HALT")


class StackVMTrap(RuntimeError):
    def __init__(self, reason: str, line: int):
        super().__init__(f"{reason} at line {line}")
        self.reason = reason
        self.line = line


def parse_stackasm(asm: bytes) -> list[tuple[bytes, int]]:
    if asm and not asm.endswith(b"\n"):
        raise StackVMTrap("MissingNewline", asm.count(b"\n") + 1)
    prog = []
    for i, line in enumerate(asm.split(b"\n")[:-1] if asm else [], 1):
        m = _LINE.fullmatch(line)
        if not m:
            raise StackVMTrap("UnknownInstruction", i)
        if m.group(1):
            prog.append((m.group(1), int(m.group(2))))
        else:
            prog.append((line, 0))
    return prog


def stackvm_run(asm: bytes) -> bytes:
    """Execute StackAsm and return what PRINT emitted (signed decimal, one per line)."""
    prog = parse_stackasm(asm)
    stack: list[int] = []
    slots: dict[int, int] = {}
    out = []
    for i, (op, arg) in enumerate(prog, 1):
        if op == b"PUSH":
            stack.append(arg & MASK)
            continue
        if op == b"LOAD":
            if arg not in slots:
                raise StackVMTrap("UninitializedSlot", i)
            stack.append(slots[arg])
            continue
        if op == b"HALT":
            return "".join(out).encode("ascii")
        need = 2 if op in (b"ADD", b"SUB", b"MUL", b"DIV") else 1
        if len(stack) < need:
            raise StackVMTrap("StackUnderflow", i)
        if op == b"STORE":
            slots[arg] = stack.pop()
        elif op == b"PRINT":
            v = stack.pop()
            out.append(f"{v - (1 << 32) if v >> 31 else v}\n")
        elif op == b"NEG":
            stack.append(-stack.pop() & MASK)
        else:
            b = stack.pop()
            a = stack.pop()
            if op == b"ADD":
                stack.append((a + b) & MASK)
            elif op == b"SUB":
                stack.append((a - b) & MASK)
            elif op == b"MUL":
                stack.append((a * b) & MASK)
            else:
                if b == 0:
                    raise StackVMTrap("DivideByZero", i)
                stack.append(a // b)
    raise StackVMTrap("MissingHalt", len(prog))
