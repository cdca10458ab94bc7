"""Direct AST interpreter for MiniLang, used as a differential oracle for the compiler.

Memory semantics mirror the compiled program: 2^16 words initialised from the
input, globals at their compiled addresses. Locals and call frames live in
Python dicts rather than guest memory, so programs that poke the stack region
through ``mstore`` can legitimately diverge.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

from ..isa import MEMORY_WORDS, init_memory
from .codegen import BUILTINS, GLOBAL_BASE, INPUT_BASE, _Resolver
from .syntax import (
    Assign,
    Binary,
    Call,
    Expr,
    Func,
    If,
    MiniLangError,
    Name,
    Num,
    Return,
    Stmt,
    Unary,
    VarDecl,
    While,
    parse,
)

MASK = 0xFFFFFFFF


class MiniLangRuntimeError(RuntimeError):
    """Runtime fault; ``reason`` matches the VM trap name."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass
class InterpResult:
    output: bytes
    exit_code: int


class _Halt(Exception):
    def __init__(self, code: int):
        self.code = code


class _Return(Exception):
    def __init__(self, value: int):
        self.value = value


def _s(v: int) -> int:
    return v - (1 << 32) if v >> 31 else v


class Interpreter:
    def __init__(self, source: str, input_bytes: bytes, max_calls: int = 10**7):
        self.prog = parse(source)
        self.res = _Resolver(self.prog)
        for f in self.prog.funcs:
            self.res.frame(f)  # full static check, same as the compiler
        self.globals = {name: GLOBAL_BASE + i for i, (name, _) in enumerate(self.prog.globals)}
        self.mem = init_memory(input_bytes)
        self.out = bytearray()
        self.budget = max_calls

    def run(self) -> InterpResult:
        limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(limit, 20000))
        try:
            try:
                code = self.call_func(self.res.funcs["main"], [])
            except _Halt as h:
                code = h.code
        finally:
            sys.setrecursionlimit(limit)
        return InterpResult(bytes(self.out), code & MASK)

    def load(self, a: int) -> int:
        if a >= MEMORY_WORDS:
            raise MiniLangRuntimeError("MemoryOutOfRange")
        return self.mem.get(a, 0)

    def store(self, a: int, v: int) -> None:
        if a >= MEMORY_WORDS:
            raise MiniLangRuntimeError("MemoryOutOfRange")
        self.mem[a] = v & MASK

    def call_func(self, f: Func, args: list[int]) -> int:
        frame = dict(zip(f.params, args))
        try:
            self.block(f.body, frame)
        except _Return as r:
            return r.value
        return 0

    def block(self, body: list[Stmt], frame: dict) -> None:
        for s in body:
            self.stmt(s, frame)

    def assign(self, name: str, v: int, frame: dict) -> None:
        if name in frame or name not in self.globals:
            frame[name] = v & MASK
        else:
            self.store(self.globals[name], v)

    def stmt(self, s: Stmt, frame: dict) -> None:
        if isinstance(s, VarDecl):
            frame[s.name] = self.eval(s.init, frame) if s.init is not None else 0
        elif isinstance(s, Assign):
            self.assign(s.name, self.eval(s.value, frame), frame)
        elif isinstance(s, If):
            self.block(s.then if self.eval(s.cond, frame) else s.orelse, frame)
        elif isinstance(s, While):
            while self.eval(s.cond, frame):
                self.block(s.body, frame)
        elif isinstance(s, Return):
            raise _Return(0 if s.value is None else self.eval(s.value, frame))
        else:
            self.eval(s.expr, frame)

    def eval(self, e: Expr, frame: dict) -> int:
        if isinstance(e, Num):
            return e.value & MASK
        if isinstance(e, Name):
            if e.name in frame:
                return frame[e.name]
            if e.name in self.globals:
                return self.load(self.globals[e.name])
            return self.prog.consts[e.name]
        if isinstance(e, Unary):
            v = self.eval(e.operand, frame)
            return (-v) & MASK if e.op == "-" else int(v == 0)
        if isinstance(e, Binary):
            return self.binary(e, frame)
        return self.call(e, frame)

    def binary(self, e: Binary, frame: dict) -> int:
        op = e.op
        if op == "&&":
            return int(bool(self.eval(e.left, frame)) and bool(self.eval(e.right, frame)))
        if op == "||":
            return int(bool(self.eval(e.left, frame)) or bool(self.eval(e.right, frame)))
        x = self.eval(e.left, frame)
        y = self.eval(e.right, frame)
        if op == "+":
            return (x + y) & MASK
        if op == "-":
            return (x - y) & MASK
        if op == "*":
            return (x * y) & MASK
        if op in ("/", "%"):
            if y == 0:
                raise MiniLangRuntimeError("DivideByZero")
            return x // y if op == "/" else x % y
        if op == "&":
            return x & y
        if op == "|":
            return x | y
        if op == "^":
            return x ^ y
        if op == "<<":
            return (x << (y & 31)) & MASK
        if op == ">>":
            return (_s(x) >> (y & 31)) & MASK
        if op == "==":
            return int(x == y)
        if op == "!=":
            return int(x != y)
        if op == "<":
            return int(_s(x) < _s(y))
        if op == "<=":
            return int(_s(x) <= _s(y))
        if op == ">":
            return int(_s(x) > _s(y))
        if op == ">=":
            return int(_s(x) >= _s(y))
        raise MiniLangError(f"unknown operator {op}", e.line)

    def call(self, e: Call, frame: dict) -> int:
        name = e.name
        if name in BUILTINS:
            args = [self.eval(a, frame) for a in e.args]
            if name == "mload":
                return self.load(args[0])
            if name == "mstore":
                self.store(args[0], args[1])
                return 0
            if name == "write":
                self.out.append(args[0] & 0xFF)
                return 0
            if name == "halt":
                raise _Halt(args[0])
            if name == "input_len":
                return self.load(0)
            return self.load((args[0] + INPUT_BASE) & MASK)
        # compiled code pushes arguments right to left
        args = [self.eval(a, frame) for a in reversed(e.args)][::-1]
        self.budget -= 1
        if self.budget < 0:
            raise MiniLangRuntimeError("StepBudgetExhausted")
        return self.call_func(self.res.funcs[name], args)


def interpret_minilang(source: bytes | str, input_bytes: bytes = b"") -> InterpResult:
    text = source.decode("ascii") if isinstance(source, (bytes, bytearray)) else source
    return Interpreter(text, input_bytes).run()
